"""Acceptance criteria, one test each, at the documented tolerances and time budgets.

Every test records a one-line verdict that the terminal summary prints under
"acceptance criteria".
"""
import time

import numpy as np

from lnlasso import (Objective, SolverConfig, apply_incidence, apply_incidence_adjoint,
                     build_preconditioners, chain_spec, empirical_risk,
                     empirical_risk_gradient, estimate_precond_norm, generate, grid_spec,
                     objective_value, primal_prox_inexact, solve)
from lnlasso import experiments as ex
from lnlasso.graph import incidence_matrix

from acceptance_report import record
from oracles import cvx_optimum, random_dataset, random_graph, tiny_instance

P_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
REPS = 20
TOPOLOGIES = {"chain": chain_spec, "grid": grid_spec}


def check(number, passed, detail):
    record(number, passed, detail)
    assert passed, detail


def test_criterion_1_operator_correctness():
    rng = np.random.default_rng(101)
    cases = []
    for _ in range(50):
        g = random_graph(rng, n_max=8)
        d = int(rng.integers(1, 4))
        cases.append((g, d, rng.standard_normal((g.num_nodes, d)),
                      rng.standard_normal((g.num_edges, d)), incidence_matrix(g, d)))
    t0 = time.perf_counter()
    worst = 0.0
    for g, d, w, u, D in cases:
        dense = D @ w.ravel()
        got = apply_incidence(g, w).ravel()
        worst = max(worst, np.max(np.abs(got - dense)) / max(np.max(np.abs(dense)), 1e-300))
        lhs = float(np.dot(got, u.ravel()))
        rhs = float(np.dot(w.ravel(), apply_incidence_adjoint(g, u).ravel()))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
    elapsed = time.perf_counter() - t0
    check(1, worst <= 1e-12 and elapsed < 1,
          f"max relative error {worst:.1e} (limit 1e-12), {elapsed:.3f} s (limit 1 s)")


def test_criterion_2_gradient_correctness():
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    worst = 0.0
    h = 1e-6
    for _ in range(100):
        n, d = int(rng.integers(2, 7)), int(rng.integers(1, 4))
        ds = random_dataset(rng, n, d, unit=False)
        w = rng.standard_normal((n, d))
        g = empirical_risk_gradient(ds, w)
        fd = np.zeros_like(w)
        for idx in np.ndindex(*w.shape):
            e = np.zeros_like(w)
            e[idx] = h
            fd[idx] = (empirical_risk(ds, w + e) - empirical_risk(ds, w - e)) / (2 * h)
        worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(g))
    elapsed = time.perf_counter() - t0
    check(2, worst <= 1e-5 and elapsed < 1,
          f"max relative error {worst:.1e} (limit 1e-5), {elapsed:.3f} s (limit 1 s)")


def test_criterion_3_oracle_equivalence():
    rng = np.random.default_rng(303)
    instances = [tiny_instance(rng) for _ in range(20)]
    config = dict(max_iters=1_000_000, rel_tol=1e-10)
    g0, ds0 = instances[0]
    solve(g0, ds0, SolverConfig(0.1, max_iters=2))  # load the compiled loop
    worst, oracle_time, slowest = 0.0, 0.0, 0.0
    for g, ds in instances:
        for lam in (1e-3, 1e-1):
            t0 = time.perf_counter()
            ref = cvx_optimum(g, ds, lam)
            oracle_time += time.perf_counter() - t0
            t0 = time.perf_counter()
            run = solve(g, ds, SolverConfig(lam, **config))
            slowest = max(slowest, time.perf_counter() - t0)
            f = objective_value(Objective(g, ds, lam), run.final_primal)
            worst = max(worst, abs(f - ref) / abs(ref))
    check(3, worst <= 1e-4 and oracle_time < 120 and slowest < 1,
          f"max relative objective gap {worst:.1e} (limit 1e-4) over 40 solves; "
          f"oracle {oracle_time:.1f} s (limit 120 s), slowest solve {slowest:.3f} s (limit 1 s)")


def test_criterion_4_preconditioner_condition():
    t0 = time.perf_counter()
    values = {}
    for name, make in TOPOLOGIES.items():
        g = generate(make(seed=0)).graph
        values[name] = estimate_precond_norm(g, 1.0 / (2.0 * g.weights), 0.9 / g.degrees)
    elapsed = time.perf_counter() - t0
    check(4, all(v < 1 for v in values.values()) and elapsed < 5,
          ", ".join(f"{k} {v:.4f}" for k, v in values.items())
          + f" (limit < 1), {elapsed:.2f} s (limit 5 s)")


def test_criterion_5_inexact_prox_bound():
    rng = np.random.default_rng(505)
    t0 = time.perf_counter()
    worst_ratio = 0.0
    for _ in range(20):
        g = random_graph(rng, n_max=8)
        ds = random_dataset(rng, g.num_nodes, int(rng.integers(1, 4)))
        pc = build_preconditioners(g, ds)
        node = int(rng.choice(ds.training_set))
        w_bar = 3 * rng.standard_normal(ds.dim)
        exact = primal_prox_inexact(w_bar, node, pc, ds, 1, steps=10_000)
        for k in range(2, 51):
            err = np.linalg.norm(primal_prox_inexact(w_bar, node, pc, ds, k) - exact)
            worst_ratio = max(worst_ratio, err * k**2)
    elapsed = time.perf_counter() - t0
    check(5, worst_ratio <= 1 and elapsed < 5,
          f"max k^2 * error {worst_ratio:.2e} (limit 1), {elapsed:.2f} s (limit 5 s)")


def test_criterion_6_dual_feasibility():
    spec = ex.ExperimentSpec(base=chain_spec(), p_grid=P_GRID, repetitions=REPS,
                             solver=SolverConfig(0.1))
    worst, count = 0.0, 0
    for p in spec.p_grid:
        for rep in range(spec.repetitions):
            inst = ex._instance(spec, p, rep)
            for lam in spec.lambda_grid:
                peak = [0.0]

                def watch(k, w, u):
                    peak[0] = max(peak[0], float(np.linalg.norm(u, axis=1).max()))

                solve(inst.graph, inst.dataset, SolverConfig(lam), callback=watch)
                worst = max(worst, peak[0] / lam)
                count += 1
    check(6, worst <= 1 + 1e-12,
          f"max_e ||u_e|| / lambda = {worst:.15f} over every iterate of {count} solves "
          f"(limit 1 + 1e-12)")


def _sweep(make):
    spec = ex.ExperimentSpec(base=make(), p_grid=P_GRID, lambda_grid=(1e-1,),
                             repetitions=REPS, solver=SolverConfig(0.1))
    t0 = time.perf_counter()
    summary = ex.summarize(ex.run_experiment(spec))
    return summary, time.perf_counter() - t0


def test_criterion_7_accuracy_vs_labeling_rate():
    parts, ok = [], True
    for name, make in TOPOLOGIES.items():
        summary, elapsed = _sweep(make)
        acc = [s["mean_accuracy"] for s in summary]
        bayes = float(np.mean([s["mean_bayes_accuracy"] for s in summary]))
        worst_drop = max(0.0, -min(np.diff(acc)))
        gap = summary[-1]["mean_bayes_accuracy"] - acc[-1]
        monotone, close = worst_drop <= 0.02, gap <= 0.05
        ok &= monotone and close and elapsed < 60
        parts.append(f"{name}: accuracy " + " ".join(f"{a:.3f}" for a in acc)
                     + f" | worst drop {worst_drop:.3f} (limit 0.02)"
                     + f" | Bayes {bayes:.3f}, gap at p=0.9 {gap:.3f} (limit 0.05)"
                     + f" | {elapsed:.1f} s")
    check(7, ok, "; ".join(parts))


def test_criterion_8_accuracy_vs_iteration():
    parts, ok = [], True
    for name, make in TOPOLOGIES.items():
        spec = ex.ExperimentSpec(base=make(), p_grid=(0.4,), lambda_grid=(1e-5, 1e-1),
                                 repetitions=REPS, solver=SolverConfig(0.1, max_iters=1000))
        t0 = time.perf_counter()
        curves = ex.run_convergence(spec)
        elapsed = time.perf_counter() - t0
        big, small = curves[1e-1], curves[1e-5]
        better = big[-1] > small[-1]
        drift = abs(big[-1] - big[199])
        ok &= better and drift < 0.01 and elapsed < 90
        parts.append(f"{name}: final accuracy lambda=1e-1 {big[-1]:.3f} vs lambda=1e-5 "
                     f"{small[-1]:.3f} | lambda=1e-1 change from iteration 200 to 1000 "
                     f"{drift:.3f} (limit 0.01) | {elapsed:.1f} s")
    check(8, ok, "; ".join(parts))


def test_criterion_9_determinism(tmp_path):
    spec = ex.ExperimentSpec(base=chain_spec(), repetitions=REPS, solver=SolverConfig(0.1),
                             master_seed=2024)
    files = []
    for name in ("first", "second"):
        rows = ex.run_experiment(spec)
        ex.write_results(rows, tmp_path / f"{name}_results.csv")
        ex.write_summary(ex.summarize(rows), tmp_path / f"{name}_summary.csv")
        files.append(((tmp_path / f"{name}_results.csv").read_bytes(),
                      (tmp_path / f"{name}_summary.csv").read_bytes()))
    same = files[0] == files[1]
    n_rows = files[0][0].count(b"\n") - 1
    check(9, same, f"two runs of the full chain sweep ({n_rows} cells): "
          + ("byte-identical" if same else "CSV bytes differ"))
