"""Logistic network Lasso on weighted graphs, solved by a preconditioned
primal-dual method, with chain/grid benchmark generators."""
from .errors import (InvalidArgumentError, InvalidConfigurationError,
                     NumericalFailureError, ParseError)
from .graph import (EmpiricalGraph, apply_incidence, apply_incidence_adjoint,
                    estimate_precond_norm, tv_norm)
from .model import (NodeDataset, Objective, accuracy_unlabeled, bayes_accuracy,
                    empirical_risk, empirical_risk_gradient, logistic_loss,
                    objective_value, predict, sigmoid)
from .solver import (Preconditioners, SolverConfig, SolverRun, build_preconditioners,
                     dual_prox, primal_dual_iterate, primal_prox_inexact, solve)
from .synth import SyntheticSpec, chain_spec, generate, grid_spec, resample_labels

__version__ = "0.1.0"
