"""Per-node logistic model, training objective and evaluation metrics.

Each node ``i`` carries a feature vector ``x_i`` and a weight vector ``w_i``;
the probability of the label ``+1`` is ``sigmoid(w_i . x_i)``. The training
objective is the mean logistic loss over the labeled nodes plus ``lam`` times
the total variation of ``w`` on the graph.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, ParseError
from .graph import tv_norm

__all__ = [
    "NodeDataset",
    "Objective",
    "sigmoid",
    "logistic_loss",
    "empirical_risk",
    "empirical_risk_gradient",
    "objective_value",
    "predict",
    "accuracy_unlabeled",
    "bayes_accuracy",
    "read_nodes",
    "write_nodes",
]


def sigmoid(z):
    """Logistic function ``1 / (1 + exp(-z))`` without overflow.

    Only ``exp(-|z|)`` is ever evaluated. Accepts scalars or arrays.
    """
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0, e) / (1.0 + e)
    return out if out.ndim else float(out)


def logistic_loss(z):
    """``log(1 + exp(-z))``, the negative log of :func:`sigmoid`.

    Evaluated as ``max(-z, 0) + log1p(exp(-|z|))``, which stays finite and
    accurate for margins of any sign and size.
    """
    z = np.asarray(z, dtype=np.float64)
    out = np.maximum(-z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class NodeDataset:
    """Features, optional labels and the training set of a node dataset.

    Parameters
    ----------
    features : array, shape (N, d)
    labels : array of {-1, +1}, shape (N,)
        Entries where ``has_label`` is False are ignored.
    has_label : bool array, shape (N,)
    training_set : int array
        Sorted ids of the labeled nodes used for training (non-empty).
    normalized : bool
        If set, every feature vector must have unit Euclidean norm.
    """

    features: np.ndarray
    labels: np.ndarray
    has_label: np.ndarray
    training_set: np.ndarray
    normalized: bool = False
    training_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise InvalidArgumentError("features must be an (N, d) array with N, d >= 1")
        if not np.all(np.isfinite(x)):
            raise InvalidArgumentError("features must be finite")
        n = x.shape[0]
        has = np.asarray(self.has_label, dtype=bool).reshape(-1)
        y = np.asarray(self.labels).reshape(-1).astype(np.int8)
        if has.shape != (n,) or y.shape != (n,):
            raise InvalidArgumentError("labels and has_label need one entry per node")
        y = np.where(has, y, 0).astype(np.int8)
        if np.any(np.abs(y[has]) != 1):
            raise InvalidArgumentError("labels must be -1 or +1")
        train = np.unique(np.asarray(self.training_set, dtype=np.int64).reshape(-1))
        if train.size == 0:
            raise InvalidArgumentError("training set must not be empty")
        if train[0] < 0 or train[-1] >= n:
            raise InvalidArgumentError("training node id out of range")
        if not np.all(has[train]):
            raise InvalidArgumentError("every training node needs a label")
        if self.normalized:
            norms = np.linalg.norm(x, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-9):
                raise InvalidArgumentError("normalized flag set but features are not unit norm")
        mask = np.zeros(n, dtype=bool)
        mask[train] = True
        for arr in (x, y, has, train, mask):
            arr.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "has_label", has)
        object.__setattr__(self, "training_set", train)
        object.__setattr__(self, "training_mask", mask)

    @property
    def num_nodes(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def num_train(self):
        return int(self.training_set.size)

    def signed_features(self):
        """``y_i x_i`` for the training nodes, shape (M, d)."""
        idx = self.training_set
        return self.labels[idx, None] * self.features[idx]

    def with_training_set(self, training_set):
        return NodeDataset(self.features, self.labels, self.has_label,
                           training_set, self.normalized)

    def permute(self, perm):
        """Relabel nodes so that old node ``v`` becomes ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        inv = np.argsort(perm)
        return NodeDataset(self.features[inv], self.labels[inv], self.has_label[inv],
                           perm[self.training_set], self.normalized)


@dataclass(frozen=True)
class Objective:
    """``empirical_risk(w) + lam * tv_norm(w)`` for a fixed graph and dataset."""

    graph: object
    dataset: NodeDataset
    lam: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise InvalidArgumentError("lambda must be positive")
        if self.graph.num_nodes != self.dataset.num_nodes:
            raise InvalidArgumentError("graph and dataset disagree on the number of nodes")

    def __call__(self, w):
        return objective_value(self, w)


def _check_signal(dataset, w):
    w = np.asarray(w, dtype=np.float64)
    if w.ndim == 1 and dataset.dim == 1:
        w = w.reshape(-1, 1)
    if w.shape != dataset.features.shape:
        raise InvalidArgumentError(
            f"signal shape {w.shape} does not match features {dataset.features.shape}")
    return w


def _margins(dataset, w):
    idx = dataset.training_set
    return np.einsum("ij,ij->i", w[idx], dataset.signed_features())


def empirical_risk(dataset, w):
    """Mean logistic loss of the margins ``w_i . y_i x_i`` over the training set."""
    w = _check_signal(dataset, w)
    return float(np.mean(logistic_loss(_margins(dataset, w))))


def empirical_risk_gradient(dataset, w):
    """Gradient of :func:`empirical_risk`; blocks of unlabeled nodes are zero."""
    w = _check_signal(dataset, w)
    xt = dataset.signed_features()
    coef = sigmoid(-_margins(dataset, w)) / dataset.num_train
    grad = np.zeros_like(w)
    grad[dataset.training_set] = -coef[:, None] * xt
    return grad


def objective_value(obj, w):
    w = _check_signal(obj.dataset, w)
    return empirical_risk(obj.dataset, w) + obj.lam * tv_norm(obj.graph, w)


def predict(dataset, w):
    """Labels ``+1`` where ``w_i . x_i > 0`` and ``-1`` otherwise (ties included)."""
    w = _check_signal(dataset, w)
    scores = np.einsum("ij,ij->i", w, dataset.features)
    return np.where(scores > 0, 1, -1).astype(np.int8)


def accuracy_unlabeled(dataset, predicted, true_labels):
    """Fraction of nodes outside the training set whose label is predicted correctly."""
    predicted = np.asarray(predicted).reshape(-1)
    true_labels = np.asarray(true_labels).reshape(-1)
    n = dataset.num_nodes
    if predicted.shape != (n,) or true_labels.shape != (n,):
        raise InvalidArgumentError("need one predicted and one true label per node")
    unlabeled = ~dataset.training_mask
    count = int(unlabeled.sum())
    if count == 0:
        raise InvalidArgumentError("every node is in the training set; accuracy is undefined")
    return float(np.sum(predicted[unlabeled] == true_labels[unlabeled]) / count)


def bayes_accuracy(dataset, true_weights):
    """Expected accuracy of the classifier built from the true weights.

    That classifier predicts ``+1`` exactly when ``p_i > 1/2``, so node ``i``
    contributes ``max(p_i, 1 - p_i)``.
    """
    w = _check_signal(dataset, true_weights)
    p = sigmoid(np.einsum("ij,ij->i", w, dataset.features))
    return float(np.mean(np.maximum(p, 1.0 - p)))


def read_nodes(path, normalized=False):
    """Load a node CSV with header ``id,label,in_training,f0,...``.

    Ids must be ``0 .. N-1`` (any row order). Returns a :class:`NodeDataset`.
    """
    rows = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty file", path, 1)
        header = [h.strip() for h in header]
        dim = len(header) - 3
        expected = ["id", "label", "in_training"] + [f"f{k}" for k in range(dim)]
        if dim < 1 or header != expected:
            raise ParseError("expected header 'id,label,in_training,f0,...'", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != dim + 3:
                raise ParseError(f"expected {dim + 3} fields, got {len(row)}", path, lineno)
            try:
                node = int(row[0])
                label = int(row[1]) if row[1].strip() else None
                flag = int(row[2])
                feats = [float(c) for c in row[3:]]
            except ValueError:
                raise ParseError(f"cannot parse node row {','.join(row)!r}",
                                 path, lineno) from None
            if label not in (None, -1, 1):
                raise ParseError("label must be -1, 1 or empty", path, lineno)
            if flag not in (0, 1):
                raise ParseError("in_training must be 0 or 1", path, lineno)
            if flag == 1 and label is None:
                raise ParseError("training node without label", path, lineno)
            if node in rows:
                raise ParseError(f"duplicate node id {node}", path, lineno)
            rows[node] = (label, flag, feats)
    n = len(rows)
    if sorted(rows) != list(range(n)):
        raise ParseError("node ids must be exactly 0..N-1", path)
    x = np.array([rows[i][2] for i in range(n)], dtype=np.float64)
    has = np.array([rows[i][0] is not None for i in range(n)])
    y = np.array([rows[i][0] or 0 for i in range(n)], dtype=np.int8)
    train = [i for i in range(n) if rows[i][1] == 1]
    try:
        return NodeDataset(x, y, has, train, normalized=normalized)
    except InvalidArgumentError as exc:
        raise ParseError(str(exc), path) from None


def write_nodes(dataset, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label", "in_training"] + [f"f{k}" for k in range(dataset.dim)])
        for i in range(dataset.num_nodes):
            label = int(dataset.labels[i]) if dataset.has_label[i] else ""
            writer.writerow([i, label, int(dataset.training_mask[i])]
                            + [repr(float(v)) for v in dataset.features[i]])
