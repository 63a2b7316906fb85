"""Preconditioned primal-dual solver for the logistic network Lasso.

The problem ``min_w  risk(w) + lam * sum_e ||(D w)_e||`` is written as the
saddle point ``min_w max_u  u.Dw + risk(w) - g*(u)`` and solved with diagonal
step sizes ``sigma_e = 1 / (2 A_e)`` (per edge) and
``tau_i = tau_scale / degree_i`` (per node). One outer iteration:

1. ``w_bar = w - T D^T u``
2. at each training node, replace ``w_bar_i`` by a few fixed-point steps of
   ``v -> w_bar_i + (tau_i / M) x~_i sigmoid(-v . x~_i)`` (an inexact
   resolvent of the risk, ``x~_i = y_i x_i``); other nodes keep ``w_bar_i``
3. ``u_bar = u + Sigma D (2 w_new - w)``
4. project every block of ``u_bar`` onto the ball of radius ``lam``

The number of fixed-point steps at outer iteration ``k`` is
``max(1, ceil(2 ln(max(k, 2)) / ln(1 / beta_i)))`` with the contraction
factor ``beta_i = tau_i ||x_i||^2 / M``, which keeps the resolvent error below
``1 / k^2``.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import InvalidArgumentError, InvalidConfigurationError, NumericalFailureError
from .graph import apply_incidence, apply_incidence_adjoint
from ._kernel import run_iterations
from .model import Objective, objective_value

__all__ = [
    "Preconditioners",
    "SolverConfig",
    "IterationRecord",
    "SolverRun",
    "build_preconditioners",
    "dual_prox",
    "inner_count",
    "primal_prox_inexact",
    "primal_dual_iterate",
    "solve",
    "write_diagnostics",
    "DIAGNOSTICS_HEADER",
]

DIAGNOSTICS_HEADER = ["iter", "objective", "primal_rel_change", "dual_feas_margin",
                      "inner_iters_total"]


@dataclass(frozen=True)
class Preconditioners:
    """Diagonal step sizes and the per-training-node contraction factors.

    ``beta[m]`` belongs to ``dataset.training_set[m]``.
    """

    sigma: np.ndarray
    tau: np.ndarray
    beta: np.ndarray


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    max_iters: int = 1000
    rel_tol: float = 1e-6
    tau_scale: float = 0.9
    record_diagnostics: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise InvalidConfigurationError("lambda must be positive")
        if int(self.max_iters) < 1:
            raise InvalidConfigurationError("max_iters must be at least 1")
        if not self.rel_tol >= 0:
            raise InvalidConfigurationError("rel_tol must be non-negative")
        if not 0 < self.tau_scale < 1:
            raise InvalidConfigurationError("tau_scale must lie in (0, 1)")


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    objective: float
    primal_rel_change: float
    dual_feas_margin: float
    inner_iters_total: int


@dataclass(frozen=True)
class SolverRun:
    final_primal: np.ndarray
    final_dual: np.ndarray
    iterations_used: int
    converged: bool
    diagnostics: list = field(default_factory=list)


def build_preconditioners(graph, dataset, tau_scale=0.9):
    """Step sizes ``1/(2 A_e)``, ``tau_scale/degree_i`` and factors ``tau_i ||x_i||^2 / M``."""
    if not 0 < tau_scale < 1:
        raise InvalidArgumentError("tau_scale must lie in (0, 1)")
    if graph.num_nodes != dataset.num_nodes:
        raise InvalidArgumentError("graph and dataset disagree on the number of nodes")
    if np.any(graph.degrees <= 0):
        raise InvalidArgumentError("isolated node")
    sigma = 1.0 / (2.0 * graph.weights)
    tau = tau_scale / graph.degrees
    idx = dataset.training_set
    sq_norms = np.einsum("ij,ij->i", dataset.features[idx], dataset.features[idx])
    beta = tau[idx] * sq_norms / dataset.num_train
    return Preconditioners(sigma, tau, beta)


def dual_prox(u_bar, lam):
    """Project each row of ``u_bar`` onto the Euclidean ball of radius ``lam``."""
    u_bar = np.asarray(u_bar, dtype=np.float64)
    flat = u_bar.ndim == 1
    blocks = u_bar.reshape(-1, 1) if flat else u_bar
    norms = np.linalg.norm(blocks, axis=1)
    scale = np.ones_like(norms)
    over = norms > lam
    scale[over] = lam / norms[over]
    out = blocks * scale[:, None]
    return out[:, 0] if flat else out


def inner_count(beta, k):
    """Number of fixed-point steps at outer iteration ``k``, elementwise in ``beta``."""
    beta = np.asarray(beta, dtype=np.float64)
    if np.any(beta >= 1) or np.any(beta < 0):
        raise InvalidConfigurationError("contraction factors must lie in [0, 1)")
    with np.errstate(divide="ignore"):
        rate = -np.log(beta)  # inf where beta == 0
    n = _counts(rate, k)
    return n if n.ndim else int(n)


def _counts(rate, k):
    return np.maximum(1, np.ceil(2.0 * math.log(max(k, 2)) / rate)).astype(np.int64)


def _contract(w_bar, xt, step, counts):
    """Apply the fixed-point map ``counts[m]`` times to row ``m`` of ``w_bar``.

    Every iterate has the form ``w_bar + t * xt``, so only the scalar ``t``
    is iterated: ``t <- step * sigmoid(-(w_bar.xt + t ||xt||^2))``.
    """
    base = np.einsum("ij,ij->i", w_bar, xt)
    sq = np.einsum("ij,ij->i", xt, xt)
    t = np.zeros_like(base)
    n_max = int(counts.max(initial=0))
    uniform = n_max == int(counts.min(initial=0))
    for s in range(n_max):
        t_next = step * expit(-(base + t * sq))
        t = t_next if uniform else np.where(counts > s, t_next, t)
    return w_bar + t[:, None] * xt


def primal_prox_inexact(w_bar_block, node, precond, dataset, outer_iter, steps=None):
    """Inexact resolvent of the risk at one training node.

    Parameters
    ----------
    w_bar_block : array, shape (d,)
    node : int
        Node id; must belong to the training set.
    precond : Preconditioners
    dataset : NodeDataset
    outer_iter : int
        Outer iteration counter ``k`` that sets the number of steps.
    steps : int, optional
        Override the step count (used for accuracy checks).
    """
    pos = np.searchsorted(dataset.training_set, node)
    if pos >= dataset.num_train or dataset.training_set[pos] != node:
        raise InvalidArgumentError(f"node {node} is not in the training set")
    beta = precond.beta[pos]
    n = inner_count(beta, outer_iter) if steps is None else int(steps)
    xt = dataset.labels[node] * dataset.features[node]
    step = precond.tau[node] / dataset.num_train
    w_bar_block = np.asarray(w_bar_block, dtype=np.float64).reshape(1, -1)
    return _contract(w_bar_block, xt[None, :], np.array([step]), np.array([n]))[0]


def primal_dual_iterate(w, u, graph, dataset, precond, lam, k):
    """One outer iteration; returns ``(w_next, u_next, inner_steps_total)``."""
    return _Stepper(graph, dataset, precond, lam)(w, u, k)


class _Stepper:
    """Outer iteration with the per-problem constants hoisted out of the loop."""

    def __init__(self, graph, dataset, precond, lam):
        if np.any(precond.beta >= 1) or np.any(precond.beta < 0):
            raise InvalidConfigurationError("contraction factor outside [0, 1) at a training node")
        self.graph, self.lam = graph, lam
        self.idx = dataset.training_set
        self.xt = dataset.signed_features()
        self.tau = precond.tau[:, None]
        self.sigma = precond.sigma[:, None]
        self.step = precond.tau[self.idx] / dataset.num_train
        with np.errstate(divide="ignore"):
            self.rate = -np.log(precond.beta)

    def __call__(self, w, u, k):
        w_next = w - self.tau * apply_incidence_adjoint(self.graph, u)
        counts = _counts(self.rate, k)
        w_next[self.idx] = _contract(w_next[self.idx], self.xt, self.step, counts)
        u_bar = u + self.sigma * apply_incidence(self.graph, 2.0 * w_next - w)
        return w_next, dual_prox(u_bar, self.lam), int(counts.sum())


def solve(graph, dataset, config, w0=None, u0=None, callback=None):
    """Run the primal-dual method until the relative primal change
    ``||w_next - w|| / max(1, ||w||)`` drops below ``config.rel_tol`` or
    ``config.max_iters`` iterations are spent.

    Parameters
    ----------
    graph : EmpiricalGraph
    dataset : NodeDataset
    config : SolverConfig
    w0, u0 : arrays, optional
        Warm start; zeros by default.
    callback : callable, optional
        Called as ``callback(k, w, u)`` with copies of the iterates after
        iteration ``k`` (1-based).

    Returns
    -------
    SolverRun

    Raises
    ------
    NumericalFailureError
        If an iterate contains NaN or inf.
    """
    if graph.num_nodes != dataset.num_nodes:
        raise InvalidArgumentError("graph and dataset disagree on the number of nodes")
    n, d = dataset.features.shape
    precond = build_preconditioners(graph, dataset, config.tau_scale)
    if np.any(precond.beta >= 1):
        raise InvalidConfigurationError("contraction factor >= 1 at a training node")
    with np.errstate(divide="ignore"):
        rate = -np.log(precond.beta)
    idx = dataset.training_set
    xt = np.ascontiguousarray(dataset.signed_features())
    step = precond.tau[idx] / dataset.num_train
    objective = Objective(graph, dataset, config.lam)

    w = np.zeros((n, d)) if w0 is None else np.array(w0, dtype=np.float64).reshape(n, d)
    u = (np.zeros((graph.num_edges, d)) if u0 is None
         else np.array(u0, dtype=np.float64).reshape(graph.num_edges, d))

    max_iters = int(config.max_iters)
    chunk = 1 if (callback is not None or config.record_diagnostics) else max_iters
    inner = np.zeros(chunk, dtype=np.int64)
    records = []
    converged = False
    k = 0
    while k < max_iters:
        todo = min(chunk, max_iters - k)
        done, change, status = run_iterations(
            graph.heads, graph.tails, graph.weights, precond.tau, precond.sigma, idx, xt,
            step, rate, float(config.lam), w, u, k, todo, float(config.rel_tol), inner)
        k += done
        if status == 2:
            raise NumericalFailureError(f"non-finite iterate at iteration {k}", iteration=k)
        if config.record_diagnostics:
            margin = (float(np.max(np.linalg.norm(u, axis=1))) - config.lam
                      if graph.num_edges else -config.lam)
            records.append(IterationRecord(k, objective_value(objective, w), float(change),
                                           margin, int(inner[0])))
        if callback is not None:
            callback(k, w.copy(), u.copy())
        if status == 1:
            converged = True
            break
    return SolverRun(w, u, k, converged, records)


def write_diagnostics(run, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DIAGNOSTICS_HEADER)
        for r in run.diagnostics:
            writer.writerow([r.iter, repr(r.objective), repr(r.primal_rel_change),
                             repr(r.dual_feas_margin), r.inner_iters_total])
