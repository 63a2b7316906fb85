"""Compiled outer-iteration loop used by :func:`lnlasso.solver.solve`.

The arithmetic mirrors the numpy operators in :mod:`lnlasso.graph` and
:mod:`lnlasso.solver` step by step; accumulation over edges runs in edge
order (heads first, then tails), as in ``apply_incidence_adjoint``.
"""
import math

import numba
import numpy as np


@numba.njit(cache=True)
def _expit(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@numba.njit(cache=True)
def run_iterations(heads, tails, weights, tau, sigma, train, xt, step, rate, lam,
                   w, u, k0, n_iters, rel_tol, inner_out):
    """Advance ``(w, u)`` in place by up to ``n_iters`` outer iterations.

    Iteration ``k`` (0-based, starting at ``k0``) uses
    ``max(1, ceil(2 ln(max(k, 2)) / rate_m))`` fixed-point steps at training
    node ``m``. ``inner_out[j]`` receives the total step count of the ``j``-th
    iteration run here.

    Returns
    -------
    (iterations_done, last_rel_change, status)
        ``status`` is 0 when the budget ran out, 1 when the relative primal
        change fell below ``rel_tol`` and 2 when a non-finite value appeared.
    """
    n, d = w.shape
    n_edges = heads.shape[0]
    n_train = train.shape[0]
    gh = np.empty((n, d))
    gt = np.empty((n, d))
    w_new = np.empty((n, d))
    sq = np.empty(n_train)
    for m in range(n_train):
        acc = 0.0
        for c in range(d):
            acc += xt[m, c] * xt[m, c]
        sq[m] = acc

    change = np.inf
    for j in range(n_iters):
        k = k0 + j
        # w_bar = w - T D^T u
        gh[:, :] = 0.0
        gt[:, :] = 0.0
        for e in range(n_edges):
            a = weights[e]
            for c in range(d):
                gh[heads[e], c] += a * u[e, c]
        for e in range(n_edges):
            a = weights[e]
            for c in range(d):
                gt[tails[e], c] += a * u[e, c]
        for i in range(n):
            for c in range(d):
                w_new[i, c] = w[i, c] - tau[i] * (gh[i, c] - gt[i, c])

        # inexact resolvent at the training nodes
        logk = 2.0 * math.log(max(k, 2))
        inner = 0
        for m in range(n_train):
            i = train[m]
            cnt = max(1.0, math.ceil(logk / rate[m]))
            steps = int(cnt)
            inner += steps
            base = 0.0
            for c in range(d):
                base += w_new[i, c] * xt[m, c]
            t = 0.0
            for _ in range(steps):
                t = step[m] * _expit(-(base + t * sq[m]))
            for c in range(d):
                w_new[i, c] += t * xt[m, c]
        inner_out[j] = inner

        # u_bar = u + Sigma D (2 w_new - w), then block projection
        for e in range(n_edges):
            hi, ti = heads[e], tails[e]
            nrm2 = 0.0
            for c in range(d):
                diff = (2.0 * w_new[hi, c] - w[hi, c]) - (2.0 * w_new[ti, c] - w[ti, c])
                val = u[e, c] + sigma[e] * (weights[e] * diff)
                u[e, c] = val
                nrm2 += val * val
            nrm = math.sqrt(nrm2)
            if nrm > lam:
                s = lam / nrm
                for c in range(d):
                    u[e, c] *= s

        dw2 = 0.0
        w2 = 0.0
        finite = True
        for i in range(n):
            for c in range(d):
                v = w_new[i, c]
                if not math.isfinite(v):
                    finite = False
                dw2 += (v - w[i, c]) ** 2
                w2 += w[i, c] ** 2
                w[i, c] = v
        for e in range(n_edges):
            for c in range(d):
                if not math.isfinite(u[e, c]):
                    finite = False
        if not finite:
            return j + 1, change, 2
        change = math.sqrt(dw2) / max(1.0, math.sqrt(w2))
        if change < rel_tol:
            return j + 1, change, 1
    return n_iters, change, 0
