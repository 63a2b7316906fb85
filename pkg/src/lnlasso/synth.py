"""Seeded chain and grid benchmark instances with clustered true weights.

Randomness comes from numpy's PCG64 generator. ``SeedSequence(seed)`` is
spawned into four independent child streams, in this order:

0. cluster weights: standard normals via ``ndtri`` of uniforms
1. features: uniforms on ``[0, 1)^d``, row-major
2. labels: one uniform per node, ``y_i = +1`` iff ``U_i < p_i``
3. training mask: one uniform per node, node kept iff ``U_i < rate``;
   an empty draw is repeated from the same stream

Because the mask uses one uniform per node, two instances that share a seed
but differ in labeling rate have nested training sets.
"""
import csv
import os
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from .errors import InvalidArgumentError, ParseError
from .graph import EmpiricalGraph, read_edges, write_edges
from .model import NodeDataset, read_nodes, sigmoid, write_nodes

__all__ = [
    "SyntheticSpec",
    "SyntheticInstance",
    "generate",
    "resample_labels",
    "chain_spec",
    "grid_spec",
    "write_instance",
    "read_instance",
]

_WEIGHTS, _FEATURES, _LABELS, _MASK = range(4)


@dataclass(frozen=True)
class SyntheticSpec:
    """Description of a benchmark instance.

    ``cluster_size`` is the block length for a chain and the block side for a
    grid; ``side`` is only used by grids (``num_nodes = side**2``).
    """

    topology: str = "chain"
    num_nodes: int = 400
    cluster_size: int = 50
    side: int = 20
    intra_weight: float = 100.0
    inter_weight: float = 1.0
    feature_dim: int = 3
    labeling_rate: float = 0.5
    seed: int = 0
    normalize_features: bool = True

    def __post_init__(self):
        if self.topology not in ("chain", "grid"):
            raise InvalidArgumentError(f"unknown topology {self.topology!r}")
        if self.topology == "grid" and self.num_nodes != self.side ** 2:
            raise InvalidArgumentError("grid needs num_nodes == side**2")
        extent = self.num_nodes if self.topology == "chain" else self.side
        if self.num_nodes < 2 or self.cluster_size < 1 or extent % self.cluster_size:
            raise InvalidArgumentError("clusters must evenly partition the nodes")
        if not self.intra_weight > self.inter_weight > 0:
            raise InvalidArgumentError("need intra_weight > inter_weight > 0")
        if self.feature_dim < 1:
            raise InvalidArgumentError("feature_dim must be positive")
        if not 0 < self.labeling_rate <= 1:
            raise InvalidArgumentError("labeling_rate must lie in (0, 1]")

    def cluster_assignment(self):
        ids = np.arange(self.num_nodes)
        if self.topology == "chain":
            return ids // self.cluster_size
        row, col = ids // self.side, ids % self.side
        per_row = self.side // self.cluster_size
        return (row // self.cluster_size) * per_row + col // self.cluster_size

    def edge_list(self):
        """Canonical ``(heads, tails)`` of the lattice."""
        ids = np.arange(self.num_nodes)
        if self.topology == "chain":
            return ids[:-1], ids[1:]
        s = self.side
        col = ids % s
        right = ids[col < s - 1]
        down = ids[ids < s * (s - 1)]
        heads = np.concatenate([right, down])
        tails = np.concatenate([right + 1, down + s])
        order = np.lexsort((tails, heads))
        return heads[order], tails[order]


def chain_spec(**kw):
    """The 400-node chain with eight clusters of 50."""
    return SyntheticSpec(topology="chain", num_nodes=400, cluster_size=50, **kw)


def grid_spec(**kw):
    """The 20 x 20 grid with four 10 x 10 quadrant clusters."""
    return SyntheticSpec(topology="grid", num_nodes=400, side=20, cluster_size=10, **kw)


@dataclass(frozen=True)
class SyntheticInstance:
    spec: SyntheticSpec
    graph: EmpiricalGraph
    dataset: NodeDataset
    true_weights: np.ndarray
    true_probabilities: np.ndarray
    cluster_assignment: np.ndarray
    mask_redraws: int = 0

    @property
    def true_labels(self):
        return self.dataset.labels


def _streams(seed):
    children = np.random.SeedSequence(int(seed)).spawn(4)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def _draw_labels(rng, probabilities):
    return np.where(rng.random(probabilities.size) < probabilities, 1, -1).astype(np.int8)


def _draw_training_set(rng, n, rate):
    redraws = 0
    while True:
        train = np.flatnonzero(rng.random(n) < rate)
        if train.size:
            return train, redraws
        redraws += 1


def generate(spec):
    """Build a :class:`SyntheticInstance`; a pure function of ``spec``."""
    weights_rng, feature_rng, label_rng, mask_rng = _streams(spec.seed)
    clusters = spec.cluster_assignment()
    n_clusters = int(clusters.max()) + 1
    d, n = spec.feature_dim, spec.num_nodes

    cluster_weights = ndtri(weights_rng.random((n_clusters, d)))
    true_w = cluster_weights[clusters]
    x = feature_rng.random((n, d))
    if spec.normalize_features:
        x = x / np.linalg.norm(x, axis=1, keepdims=True)
    p = sigmoid(np.einsum("ij,ij->i", true_w, x))
    y = _draw_labels(label_rng, p)
    train, redraws = _draw_training_set(mask_rng, n, spec.labeling_rate)

    heads, tails = spec.edge_list()
    weights = np.where(clusters[heads] == clusters[tails],
                       spec.intra_weight, spec.inter_weight)
    graph = EmpiricalGraph(n, heads, tails, weights)
    dataset = NodeDataset(x, y, np.ones(n, bool), train, normalized=spec.normalize_features)
    return SyntheticInstance(spec, graph, dataset, true_w, p, clusters, redraws)


def resample_labels(instance, seed):
    """Fresh labels and training set from ``seed``; graph, features and weights are kept."""
    _, _, label_rng, mask_rng = _streams(seed)
    n = instance.graph.num_nodes
    y = _draw_labels(label_rng, instance.true_probabilities)
    train, redraws = _draw_training_set(mask_rng, n, instance.spec.labeling_rate)
    dataset = NodeDataset(instance.dataset.features, y, np.ones(n, bool), train,
                          normalized=instance.dataset.normalized)
    return replace(instance, spec=replace(instance.spec, seed=int(seed)),
                   dataset=dataset, mask_redraws=redraws)


TRUTH_HEADER_PREFIX = ["id", "cluster", "p_true"]


def write_instance(instance, out_dir):
    """Write ``edges.csv``, ``nodes.csv`` and ``truth.csv`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    write_edges(instance.graph, os.path.join(out_dir, "edges.csv"))
    write_nodes(instance.dataset, os.path.join(out_dir, "nodes.csv"))
    d = instance.true_weights.shape[1]
    with open(os.path.join(out_dir, "truth.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRUTH_HEADER_PREFIX + [f"w{k}" for k in range(d)])
        for i in range(instance.graph.num_nodes):
            writer.writerow([i, int(instance.cluster_assignment[i]),
                             repr(float(instance.true_probabilities[i]))]
                            + [repr(float(v)) for v in instance.true_weights[i]])


def read_truth(path):
    """Return ``(clusters, p_true, true_weights)`` from a ``truth.csv``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != TRUTH_HEADER_PREFIX or len(header) < 4:
            raise ParseError("expected header 'id,cluster,p_true,w0,...'", path, 1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                if len(row) != len(header) or int(row[0]) != len(rows):
                    raise ValueError
                rows.append([int(row[1]), float(row[2])] + [float(c) for c in row[3:]])
            except ValueError:
                raise ParseError(f"malformed truth row {','.join(row)!r}",
                                 path, lineno) from None
    arr = np.array(rows, dtype=np.float64)
    return arr[:, 0].astype(np.int64), arr[:, 1], arr[:, 2:]


def read_instance(in_dir):
    """Load ``(graph, dataset, truth)``; ``truth`` is None when ``truth.csv`` is absent."""
    dataset = read_nodes(os.path.join(in_dir, "nodes.csv"))
    graph = read_edges(os.path.join(in_dir, "edges.csv"), num_nodes=dataset.num_nodes)
    truth_path = os.path.join(in_dir, "truth.csv")
    truth = read_truth(truth_path) if os.path.exists(truth_path) else None
    return graph, dataset, truth
