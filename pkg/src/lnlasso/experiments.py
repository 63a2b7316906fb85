"""Labeling-rate sweeps and convergence curves on the synthetic benchmarks.

Seeds
-----
Repetition ``r`` of an experiment with master seed ``s`` uses the instance
seed ``instance_seed(s, r)``: the first 64-bit word produced by
``numpy.random.SeedSequence([s, r])``. Every labeling rate and every lambda
of that repetition share the instance, so training sets are nested across
rates and lambdas are compared on identical data. Cells depend only on
``(s, r, p, lambda)`` and can run in any order.
"""
import csv
import logging
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidArgumentError, NumericalFailureError
from .model import accuracy_unlabeled, bayes_accuracy, predict
from .solver import SolverConfig, solve
from .synth import SyntheticSpec, generate, resample_labels

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentSpec",
    "instance_seed",
    "run_experiment",
    "summarize",
    "run_convergence",
    "write_results",
    "write_summary",
    "write_curves",
    "RESULTS_HEADER",
    "SUMMARY_HEADER",
    "CURVE_HEADER",
]

PAPER_P_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
PAPER_LAMBDA_GRID = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)

RESULTS_HEADER = ["p", "lambda", "rep", "accuracy", "bayes_accuracy"]
SUMMARY_HEADER = ["p", "lambda", "mean_accuracy", "std_accuracy", "mean_bayes_accuracy",
                  "failed"]
CURVE_HEADER = ["lambda", "iter", "accuracy"]


@dataclass(frozen=True)
class ExperimentSpec:
    """Sweep over labeling rates, lambdas and repetitions.

    ``base.labeling_rate`` and ``base.seed`` are ignored; ``solver.lam`` is
    replaced by each entry of ``lambda_grid``. With ``freeze_instance`` the
    graph, cluster weights and features of repetition 0 are reused and only
    labels and training sets are redrawn per repetition.
    """

    base: SyntheticSpec = field(default_factory=SyntheticSpec)
    p_grid: tuple = PAPER_P_GRID
    lambda_grid: tuple = PAPER_LAMBDA_GRID
    repetitions: int = 20
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(lam=1e-1))
    master_seed: int = 0
    freeze_instance: bool = False

    def __post_init__(self):
        object.__setattr__(self, "p_grid", tuple(float(p) for p in self.p_grid))
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))
        if not self.p_grid or not self.lambda_grid:
            raise InvalidArgumentError("p_grid and lambda_grid must be non-empty")
        if any(not 0 < p <= 1 for p in self.p_grid):
            raise InvalidArgumentError("labeling rates must lie in (0, 1]")
        if any(not v > 0 for v in self.lambda_grid):
            raise InvalidArgumentError("lambdas must be positive")
        if int(self.repetitions) < 1:
            raise InvalidArgumentError("repetitions must be at least 1")


def instance_seed(master_seed, rep):
    return int(np.random.SeedSequence([int(master_seed), int(rep)]).generate_state(1, np.uint64)[0])


def _instance(spec, p, rep):
    if spec.freeze_instance:
        frozen = generate(replace(spec.base, labeling_rate=p,
                                  seed=instance_seed(spec.master_seed, 0)))
        if rep == 0:
            return frozen
        return resample_labels(frozen, instance_seed(spec.master_seed, rep))
    return generate(replace(spec.base, labeling_rate=p,
                            seed=instance_seed(spec.master_seed, rep)))


def run_experiment(spec):
    """Accuracy on unlabeled nodes for every ``(p, lambda, rep)`` cell.

    Returns
    -------
    list of dict
        One row per cell, keys as in ``RESULTS_HEADER``; ``accuracy`` is NaN
        for a cell whose solve failed numerically.
    """
    rows = []
    for p in spec.p_grid:
        for rep in range(spec.repetitions):
            inst = _instance(spec, p, rep)
            if inst.dataset.num_train == inst.graph.num_nodes:
                raise InvalidArgumentError(
                    f"p={p}: every node is labeled, accuracy on unlabeled nodes is undefined")
            bayes = bayes_accuracy(inst.dataset, inst.true_weights)
            for lam in spec.lambda_grid:
                config = replace(spec.solver, lam=lam, record_diagnostics=False)
                try:
                    run = solve(inst.graph, inst.dataset, config)
                    acc = accuracy_unlabeled(inst.dataset, predict(inst.dataset, run.final_primal),
                                             inst.true_labels)
                except NumericalFailureError as exc:
                    log.warning("cell p=%g lambda=%g rep=%d failed: %s", p, lam, rep, exc)
                    acc = float("nan")
                rows.append({"p": p, "lambda": lam, "rep": rep, "accuracy": acc,
                             "bayes_accuracy": bayes})
    rows.sort(key=lambda r: (r["p"], r["lambda"], r["rep"]))
    return rows


def summarize(rows):
    """Mean/std accuracy and mean Bayes accuracy per ``(p, lambda)``; failed cells are skipped."""
    cells = {}
    for r in rows:
        cells.setdefault((r["p"], r["lambda"]), []).append(r)
    out = []
    for (p, lam), group in sorted(cells.items()):
        acc = np.array([r["accuracy"] for r in group], dtype=float)
        ok = np.isfinite(acc)
        out.append({
            "p": p, "lambda": lam,
            "mean_accuracy": float(acc[ok].mean()) if ok.any() else float("nan"),
            "std_accuracy": float(acc[ok].std()) if ok.any() else float("nan"),
            "mean_bayes_accuracy": float(np.mean([r["bayes_accuracy"] for r in group])),
            "failed": int((~ok).sum()),
        })
    return out


def run_convergence(spec, p=None):
    """Accuracy on unlabeled nodes after every iteration, averaged over repetitions.

    ``p`` defaults to the single entry of ``spec.p_grid``. Runs that stop
    early keep their final accuracy for the remaining iterations, so every
    curve has ``spec.solver.max_iters`` points.

    Returns
    -------
    dict
        ``lambda -> array of shape (max_iters,)``
    """
    if p is None:
        if len(spec.p_grid) != 1:
            raise InvalidArgumentError("run_convergence needs exactly one labeling rate")
        p = spec.p_grid[0]
    n_iter = int(spec.solver.max_iters)
    curves = {lam: np.zeros(n_iter) for lam in spec.lambda_grid}
    counts = {lam: 0 for lam in spec.lambda_grid}
    for rep in range(spec.repetitions):
        inst = _instance(spec, p, rep)
        ds, truth = inst.dataset, inst.true_labels
        for lam in spec.lambda_grid:
            trace = np.empty(n_iter)

            def record(k, w, u):
                trace[k - 1] = accuracy_unlabeled(ds, predict(ds, w), truth)

            try:
                run = solve(inst.graph, ds, replace(spec.solver, lam=lam), callback=record)
            except NumericalFailureError as exc:
                log.warning("convergence run lambda=%g rep=%d failed: %s", lam, rep, exc)
                continue
            trace[run.iterations_used:] = trace[run.iterations_used - 1]
            curves[lam] += trace
            counts[lam] += 1
    return {lam: (curves[lam] / counts[lam] if counts[lam] else np.full(n_iter, np.nan))
            for lam in spec.lambda_grid}


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in rows:
            writer.writerow([_fmt(r[h]) for h in header])


def write_results(rows, path):
    _write(path, RESULTS_HEADER, rows)


def write_summary(summary, path):
    _write(path, SUMMARY_HEADER, summary)


def curve_filename(lam):
    return f"convergence_lambda_{lam:.0e}.csv"


def write_curves(curves, out_dir):
    """One ``lambda,iter,accuracy`` file per lambda; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for lam, curve in sorted(curves.items()):
        path = os.path.join(out_dir, curve_filename(lam))
        _write(path, CURVE_HEADER, [{"lambda": lam, "iter": k + 1, "accuracy": a}
                                    for k, a in enumerate(curve)])
        paths.append(path)
    return paths
