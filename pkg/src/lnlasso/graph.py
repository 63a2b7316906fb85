"""Weighted undirected empirical graph and its block incidence operator.

Graph signals are stored as 2-D arrays: a primal signal has shape ``(N, d)``
(row ``i`` is the weight vector of node ``i``) and a dual signal has shape
``(E, d)`` (row ``e`` belongs to edge ``e``). Edges are kept in canonical
orientation ``i < j`` and sorted lexicographically, which fixes the sign and
row order of the incidence operator::

    (D w)[e] = A_e * (w[i] - w[j])     for e = (i, j), i < j

The operator is never materialized; both ``D`` and ``D^T`` cost ``O(E d)``.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, ParseError

__all__ = [
    "EmpiricalGraph",
    "apply_incidence",
    "apply_incidence_adjoint",
    "tv_norm",
    "estimate_precond_norm",
    "incidence_matrix",
    "read_edges",
    "write_edges",
]


@dataclass(frozen=True)
class EmpiricalGraph:
    """Immutable weighted undirected graph without isolated nodes.

    Parameters
    ----------
    num_nodes : int
        Number of nodes ``N``; node ids are ``0 .. N-1``.
    heads, tails : array of int, shape (E,)
        Edge endpoints with ``heads[e] < tails[e]``.
    weights : array of float, shape (E,)
        Strictly positive edge weights ``A_e``.

    Use :meth:`from_edges` to build a graph from an unordered edge list.
    """

    num_nodes: int
    heads: np.ndarray
    tails: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = int(self.num_nodes)
        if n < 1:
            raise InvalidArgumentError("num_nodes must be positive")
        heads = np.asarray(self.heads, dtype=np.int64).reshape(-1)
        tails = np.asarray(self.tails, dtype=np.int64).reshape(-1)
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if not (heads.shape == tails.shape == weights.shape):
            raise InvalidArgumentError("heads, tails and weights must have equal length")
        if heads.size:
            if heads.min() < 0 or tails.max() >= n:
                raise InvalidArgumentError("edge endpoint out of range")
            if np.any(heads >= tails):
                raise InvalidArgumentError("edges must satisfy i < j (no self-loops)")
            order = np.lexsort((tails, heads))
            if np.any(order != np.arange(heads.size)):
                raise InvalidArgumentError("edges must be sorted by (i, j)")
            if np.any((heads[1:] == heads[:-1]) & (tails[1:] == tails[:-1])):
                raise InvalidArgumentError("duplicate edge")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise InvalidArgumentError("edge weights must be finite and strictly positive")

        degrees = np.zeros(n)
        np.add.at(degrees, heads, weights)
        np.add.at(degrees, tails, weights)
        isolated = np.flatnonzero(degrees <= 0)
        if isolated.size:
            raise InvalidArgumentError(
                f"isolated nodes are not supported (first: {isolated[0]})")

        for arr in (heads, tails, weights, degrees):
            arr.setflags(write=False)
        object.__setattr__(self, "num_nodes", n)
        object.__setattr__(self, "heads", heads)
        object.__setattr__(self, "tails", tails)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "degrees", degrees)

    @classmethod
    def from_edges(cls, num_nodes, edges):
        """Build a graph from ``(i, j, weight)`` triples in any orientation.

        Rows with ``i > j`` are flipped; the result is sorted. A repeated
        undirected edge raises :class:`InvalidArgumentError`.
        """
        edges = list(edges)
        if not edges:
            return cls(num_nodes, np.zeros(0, int), np.zeros(0, int), np.zeros(0))
        arr = np.asarray(edges, dtype=np.float64)
        i = arr[:, 0].astype(np.int64)
        j = arr[:, 1].astype(np.int64)
        heads, tails = np.minimum(i, j), np.maximum(i, j)
        order = np.lexsort((tails, heads))
        return cls(num_nodes, heads[order], tails[order], arr[order, 2])

    @property
    def num_edges(self):
        return int(self.heads.size)

    def edges(self):
        """Iterate over ``(i, j, weight)`` in canonical order."""
        for i, j, a in zip(self.heads.tolist(), self.tails.tolist(), self.weights.tolist()):
            yield i, j, a

    def permute(self, perm):
        """Relabel nodes so that old node ``v`` becomes ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.num_nodes)):
            raise InvalidArgumentError("perm must be a permutation of the node ids")
        triples = zip(perm[self.heads].tolist(), perm[self.tails].tolist(),
                      self.weights.tolist())
        return EmpiricalGraph.from_edges(self.num_nodes, triples)


def _as_blocks(x, rows, what):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[0] != rows:
        raise InvalidArgumentError(
            f"{what} must have {rows} blocks, got array of shape {np.shape(x)}")
    return x


def apply_incidence(graph, w):
    """Weighted edge differences ``u[e] = A_e (w[i] - w[j])``.

    Parameters
    ----------
    graph : EmpiricalGraph
    w : array, shape (N, d) or (N,)

    Returns
    -------
    u : array, shape (E, d), or (E,) when ``w`` is 1-D
    """
    flat = np.ndim(w) == 1
    w = _as_blocks(w, graph.num_nodes, "primal signal")
    u = graph.weights[:, None] * (w[graph.heads] - w[graph.tails])
    return u[:, 0] if flat else u


def apply_incidence_adjoint(graph, u):
    """Apply ``D^T``: each edge adds ``A_e u[e]`` to its head, subtracts at its tail.

    Head and tail contributions are each summed in edge order and then
    subtracted, so results are bit-reproducible.
    """
    flat = np.ndim(u) == 1
    u = _as_blocks(u, graph.num_edges, "dual signal")
    au = graph.weights[:, None] * u
    n = graph.num_nodes
    g = np.empty((n, u.shape[1]))
    for c in range(u.shape[1]):
        g[:, c] = (np.bincount(graph.heads, au[:, c], minlength=n)
                   - np.bincount(graph.tails, au[:, c], minlength=n))
    return g[:, 0] if flat else g


def tv_norm(graph, w):
    """Total variation ``sum_e A_e ||w[j] - w[i]||``."""
    u = apply_incidence(graph, w)
    if u.ndim == 1:
        return float(np.sum(np.abs(u)))
    return float(np.sum(np.linalg.norm(u, axis=1)))


def incidence_matrix(graph, dim=1):
    """Dense ``(E*d, N*d)`` incidence matrix. Only meant for small test graphs."""
    D = np.zeros((graph.num_edges, graph.num_nodes))
    rows = np.arange(graph.num_edges)
    D[rows, graph.heads] = graph.weights
    D[rows, graph.tails] = -graph.weights
    return np.kron(D, np.eye(dim))


def estimate_precond_norm(graph, sigma, tau, iters=200, seed=0):
    """Power-iteration estimate of ``||Sigma^{1/2} D T^{1/2}||^2``.

    ``sigma`` holds one step size per edge and ``tau`` one per node; both act
    as multiples of the identity on each block, so the norm does not depend
    on the block dimension and a scalar signal is used.

    Returns
    -------
    float
        Estimate of the largest eigenvalue of ``K^T K`` with
        ``K = Sigma^{1/2} D T^{1/2}``. A value below one means the
        primal-dual step sizes are admissible.
    """
    sigma = np.asarray(sigma, dtype=np.float64).reshape(-1)
    tau = np.asarray(tau, dtype=np.float64).reshape(-1)
    if sigma.shape != (graph.num_edges,) or tau.shape != (graph.num_nodes,):
        raise InvalidArgumentError("sigma needs one entry per edge and tau one per node")
    if np.any(sigma <= 0) or np.any(tau <= 0):
        raise InvalidArgumentError("sigma and tau must be strictly positive")
    if iters < 1:
        raise InvalidArgumentError("iters must be at least 1")
    if graph.num_edges == 0:
        return 0.0

    sqrt_sigma, sqrt_tau = np.sqrt(sigma), np.sqrt(tau)
    v = np.random.default_rng(seed).standard_normal(graph.num_nodes)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(iters):
        kv = sqrt_sigma * apply_incidence(graph, sqrt_tau * v)
        estimate = float(kv @ kv)
        v = sqrt_tau * apply_incidence_adjoint(graph, sqrt_sigma * kv)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v /= nv
    return estimate


def read_edges(path, num_nodes=None):
    """Load an edge CSV with header ``i,j,weight``.

    ``num_nodes`` defaults to one more than the largest node id seen.
    """
    triples = []
    seen = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["i", "j", "weight"]:
            raise ParseError("expected header 'i,j,weight'", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", path, lineno)
            try:
                i, j, a = int(row[0]), int(row[1]), float(row[2])
            except ValueError:
                raise ParseError(f"cannot parse edge row {','.join(row)!r}",
                                 path, lineno) from None
            if i < 0 or j < 0:
                raise ParseError("negative node id", path, lineno)
            if i == j:
                raise ParseError("self-loop", path, lineno)
            if not (np.isfinite(a) and a > 0):
                raise ParseError("edge weight must be positive", path, lineno)
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ParseError(f"duplicate edge {key} (first on line {seen[key]})",
                                 path, lineno)
            seen[key] = lineno
            triples.append((key[0], key[1], a))
    if num_nodes is None:
        num_nodes = 1 + max((t[1] for t in triples), default=-1)
    try:
        return EmpiricalGraph.from_edges(num_nodes, triples)
    except InvalidArgumentError as exc:
        raise ParseError(str(exc), path) from None


def write_edges(graph, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["i", "j", "weight"])
        for i, j, a in graph.edges():
            writer.writerow([i, j, repr(a)])
