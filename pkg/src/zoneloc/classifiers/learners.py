"""The three base learners, implemented on numpy for full determinism.

All predict paths break ties toward the lowest zone id (np.argmax returns the
first maximum), and every fit is a pure function of (hyperparameters, data).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.stats import norm


@dataclass(frozen=True)
class InstanceBasedParams:
    """k-nearest-neighbor learner, optionally inverse-distance weighted."""

    k: int = 5
    distance_weighted: bool = True

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class DecisionTreeParams:
    """Gini decision tree with confidence-based pessimistic pruning."""

    min_leaf: int = 5
    pruning_confidence: float = 0.25

    def __post_init__(self) -> None:
        if self.min_leaf < 1:
            raise ValueError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if not (0.0 < self.pruning_confidence < 1.0):
            raise ValueError(f"pruning_confidence must be in (0,1), got {self.pruning_confidence}")


@dataclass(frozen=True)
class NeuralNetParams:
    """Single hidden layer, logistic activations, softmax cross-entropy,
    full-batch gradient descent for a fixed epoch budget."""

    hidden: int = 10
    learning_rate: float = 0.5
    epochs: int = 400
    seed: int = 1

    def __post_init__(self) -> None:
        if self.hidden < 1:
            raise ValueError(f"hidden must be >= 1, got {self.hidden}")
        if self.learning_rate <= 0 or self.epochs < 1:
            raise ValueError("learning_rate must be > 0 and epochs >= 1")


ClassifierKind = Union[InstanceBasedParams, DecisionTreeParams, NeuralNetParams]

_KIND_NAMES = {
    InstanceBasedParams: "knn",
    DecisionTreeParams: "tree",
    NeuralNetParams: "mlp",
}
_KIND_BY_NAME = {v: k for k, v in _KIND_NAMES.items()}


def kind_name(params: ClassifierKind) -> str:
    return _KIND_NAMES[type(params)]


def params_to_dict(params: ClassifierKind) -> dict:
    d = {"kind": kind_name(params)}
    d.update(params.__dict__)
    return d


def params_from_dict(d: dict) -> ClassifierKind:
    d = dict(d)
    cls = _KIND_BY_NAME[d.pop("kind")]
    return cls(**d)


# ---------------------------------------------------------------------------
# Instance-based (kNN)
# ---------------------------------------------------------------------------

class InstanceStore:
    """Stores the normalized training set; predicts by (weighted) kNN vote."""

    def __init__(self, params: InstanceBasedParams, x: np.ndarray, y: np.ndarray, n_classes: int):
        self.params = params
        self.x = np.asarray(x, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        self.n_classes = n_classes

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        # squared distances via the expansion trick; clamp tiny negatives
        d2 = (
            (x * x).sum(axis=1)[:, None]
            + (self.x * self.x).sum(axis=1)[None, :]
            - 2.0 * (x @ self.x.T)
        )
        np.maximum(d2, 0.0, out=d2)
        k = min(self.params.k, len(self.y))
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        rows = np.arange(len(x))[:, None]
        if self.params.distance_weighted:
            w = 1.0 / (np.sqrt(d2[rows, order]) + 1e-9)
        else:
            w = np.ones_like(order, dtype=np.float64)
        votes = np.zeros((len(x), self.n_classes))
        np.add.at(votes, (rows, self.y[order]), w)
        return votes.argmax(axis=1)

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "y": self.y.tolist(), "n_classes": self.n_classes}

    @classmethod
    def from_dict(cls, params: InstanceBasedParams, d: dict) -> "InstanceStore":
        return cls(params, np.asarray(d["x"]), np.asarray(d["y"]), d["n_classes"])


# ---------------------------------------------------------------------------
# Decision tree
# ---------------------------------------------------------------------------

class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "prediction", "counts")

    def __init__(self, prediction: int, counts: np.ndarray):
        self.feature = -1
        self.threshold = 0.0
        self.left: _Node | None = None
        self.right: _Node | None = None
        self.prediction = prediction
        self.counts = counts

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _gini_from_counts(counts: np.ndarray, total: int) -> float:
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float((p * p).sum())


def _pessimistic_errors(err: int, n: int, z: float) -> float:
    """Upper-confidence estimate of errors at a node treated as a leaf."""
    if n == 0:
        return 0.0
    f = err / n
    if z <= 0.0:
        return err
    z2 = z * z
    upper = (f + z2 / (2 * n) + z * math.sqrt(f * (1 - f) / n + z2 / (4 * n * n))) / (1 + z2 / n)
    return upper * n


class TreeModel:
    """CART-style tree; splits maximize Gini decrease, first-found wins ties."""

    def __init__(self, params: DecisionTreeParams, root: _Node, n_classes: int):
        self.params = params
        self.root = root
        self.n_classes = n_classes

    @classmethod
    def fit(cls, params: DecisionTreeParams, x: np.ndarray, y: np.ndarray, n_classes: int) -> "TreeModel":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        root = cls._build(params, x, y, np.arange(len(y)), n_classes)
        z = float(norm.ppf(1.0 - params.pruning_confidence))
        cls._prune(root, max(z, 0.0))
        return cls(params, root, n_classes)

    @classmethod
    def _build(cls, params: DecisionTreeParams, x: np.ndarray, y: np.ndarray,
               idx: np.ndarray, n_classes: int) -> _Node:
        counts = np.bincount(y[idx], minlength=n_classes)
        node = _Node(int(counts.argmax()), counts)
        n = len(idx)
        if n < 2 * params.min_leaf or counts.max() == n:
            return node
        parent_gini = _gini_from_counts(counts, n)
        best_gain = 0.0
        best: tuple[int, float, np.ndarray, np.ndarray] | None = None
        for f in range(x.shape[1]):
            v = x[idx, f]
            order = np.argsort(v, kind="stable")
            sv = v[order]
            sy = y[idx[order]]
            onehot = np.zeros((n, n_classes))
            onehot[np.arange(n), sy] = 1.0
            cum = onehot.cumsum(axis=0)
            # split before position i puts i samples left; require a value change
            pos = np.arange(params.min_leaf, n - params.min_leaf + 1)
            pos = pos[sv[pos] > sv[pos - 1]]
            if len(pos) == 0:
                continue
            left_counts = cum[pos - 1]
            left_n = pos.astype(np.float64)
            right_counts = counts[None, :] - left_counts
            right_n = n - left_n
            gini_l = 1.0 - ((left_counts / left_n[:, None]) ** 2).sum(axis=1)
            gini_r = 1.0 - ((right_counts / right_n[:, None]) ** 2).sum(axis=1)
            weighted = (left_n * gini_l + right_n * gini_r) / n
            j = int(weighted.argmin())
            gain = parent_gini - float(weighted[j])
            if gain > best_gain + 1e-12:
                best_gain = gain
                p = int(pos[j])
                thr = (sv[p - 1] + sv[p]) / 2.0
                mask = v <= thr
                best = (f, thr, idx[mask], idx[~mask])
        if best is None:
            return node
        node.feature, node.threshold = best[0], best[1]
        node.left = cls._build(params, x, y, best[2], n_classes)
        node.right = cls._build(params, x, y, best[3], n_classes)
        return node

    @classmethod
    def _prune(cls, node: _Node, z: float) -> float:
        """Returns the estimated error count of the (possibly collapsed) subtree."""
        n = int(node.counts.sum())
        err_here = n - int(node.counts.max())
        leaf_est = _pessimistic_errors(err_here, n, z)
        if node.is_leaf:
            return leaf_est
        subtree_est = cls._prune(node.left, z) + cls._prune(node.right, z)
        if leaf_est <= subtree_est + 1e-12:
            node.left = node.right = None
            node.feature = -1
            return leaf_est
        return subtree_est

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        out = np.empty(len(x), dtype=np.int64)
        for i, row in enumerate(x):
            node = self.root
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.prediction
        return out

    def depth(self) -> int:
        def d(node: _Node) -> int:
            if node.is_leaf:
                return 0
            return 1 + max(d(node.left), d(node.right))
        return d(self.root)

    def leaf_count(self) -> int:
        def c(node: _Node) -> int:
            if node.is_leaf:
                return 1
            return c(node.left) + c(node.right)
        return c(self.root)

    def to_dict(self) -> dict:
        def enc(node: _Node) -> dict:
            if node.is_leaf:
                return {"p": node.prediction}
            return {
                "p": node.prediction,
                "f": node.feature,
                "t": node.threshold,
                "l": enc(node.left),
                "r": enc(node.right),
            }
        return {"root": enc(self.root), "n_classes": self.n_classes}

    @classmethod
    def from_dict(cls, params: DecisionTreeParams, d: dict) -> "TreeModel":
        def dec(e: dict) -> _Node:
            node = _Node(int(e["p"]), np.zeros(d["n_classes"]))
            if "f" in e:
                node.feature = int(e["f"])
                node.threshold = float(e["t"])
                node.left = dec(e["l"])
                node.right = dec(e["r"])
            return node
        return cls(params, dec(d["root"]), d["n_classes"])


# ---------------------------------------------------------------------------
# Neural net
# ---------------------------------------------------------------------------

def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class NeuralNetModel:
    """features -> logistic hidden layer -> softmax over zones."""

    def __init__(self, params: NeuralNetParams, w1: np.ndarray, b1: np.ndarray,
                 w2: np.ndarray, b2: np.ndarray):
        self.params = params
        self.w1, self.b1, self.w2, self.b2 = w1, b1, w2, b2

    @property
    def n_classes(self) -> int:
        return self.w2.shape[1]

    @classmethod
    def fit(cls, params: NeuralNetParams, x: np.ndarray, y: np.ndarray, n_classes: int) -> "NeuralNetModel":
        x = np.asarray(x, dtype=np.float64)
        n, feats = x.shape
        rng = np.random.default_rng(params.seed)
        lim1 = math.sqrt(6.0 / (feats + params.hidden))
        lim2 = math.sqrt(6.0 / (params.hidden + n_classes))
        w1 = rng.uniform(-lim1, lim1, size=(feats, params.hidden))
        b1 = np.zeros(params.hidden)
        w2 = rng.uniform(-lim2, lim2, size=(params.hidden, n_classes))
        b2 = np.zeros(n_classes)
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), y] = 1.0
        lr = params.learning_rate
        for _ in range(params.epochs):
            h = _sigmoid(x @ w1 + b1)
            p = _softmax(h @ w2 + b2)
            dz2 = (p - onehot) / n
            dw2 = h.T @ dz2
            db2 = dz2.sum(axis=0)
            dh = dz2 @ w2.T
            dz1 = dh * h * (1.0 - h)
            dw1 = x.T @ dz1
            db1 = dz1.sum(axis=0)
            w2 -= lr * dw2
            b2 -= lr * db2
            w1 -= lr * dw1
            b1 -= lr * db1
        return cls(params, w1, b1, w2, b2)

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        h = _sigmoid(x @ self.w1 + self.b1)
        scores = h @ self.w2 + self.b2
        return scores.argmax(axis=1)

    def to_dict(self) -> dict:
        return {
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2.tolist(),
        }

    @classmethod
    def from_dict(cls, params: NeuralNetParams, d: dict) -> "NeuralNetModel":
        return cls(
            params,
            np.asarray(d["w1"]),
            np.asarray(d["b1"]),
            np.asarray(d["w2"]),
            np.asarray(d["b2"]),
        )


LearnerModel = Union[InstanceStore, TreeModel, NeuralNetModel]


def fit_learner(params: ClassifierKind, x: np.ndarray, y: np.ndarray, n_classes: int) -> LearnerModel:
    if isinstance(params, InstanceBasedParams):
        return InstanceStore(params, x, y, n_classes)
    if isinstance(params, DecisionTreeParams):
        return TreeModel.fit(params, x, y, n_classes)
    if isinstance(params, NeuralNetParams):
        return NeuralNetModel.fit(params, x, y, n_classes)
    raise TypeError(f"unknown classifier kind: {params!r}")


def learner_from_dict(params: ClassifierKind, d: dict) -> LearnerModel:
    if isinstance(params, InstanceBasedParams):
        return InstanceStore.from_dict(params, d)
    if isinstance(params, DecisionTreeParams):
        return TreeModel.from_dict(params, d)
    if isinstance(params, NeuralNetParams):
        return NeuralNetModel.from_dict(params, d)
    raise TypeError(f"unknown classifier kind: {params!r}")
