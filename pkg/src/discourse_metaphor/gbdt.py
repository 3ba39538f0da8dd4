"""Second-order gradient-boosted trees for binary logistic loss.

Exact greedy split search over every midpoint between consecutive distinct
feature values, Newton leaf weights ``-G / (H + lambda)``, no subsampling.
Leaf weights are stored unscaled; the learning rate is applied when margins
are accumulated, tree by tree and in order, both in training and in
prediction, so the two paths agree bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np

MODEL_FORMAT = "discourse-metaphor-gbdt"
MODEL_VERSION = 1

HESS_FLOOR = 1e-16
# candidates whose gain is within this relative distance of the best are ties
TIE_RTOL = 1e-12


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class GBDTParams:
    num_trees: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0
    base_margin: float = 0.0

    def __post_init__(self):
        if int(self.num_trees) != self.num_trees or self.num_trees < 1:
            raise ModelError(f"num_trees must be an integer >= 1, got {self.num_trees}")
        if int(self.max_depth) != self.max_depth or self.max_depth < 0:
            raise ModelError(f"max_depth must be an integer >= 0, got {self.max_depth}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ModelError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.reg_lambda < 0 or self.gamma < 0 or self.min_child_weight < 0:
            raise ModelError("reg_lambda, gamma and min_child_weight must be >= 0")
        if not math.isfinite(self.base_margin):
            raise ModelError("base_margin must be finite")


@dataclass(frozen=True)
class Leaf:
    weight: float


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"


Node = Union[Leaf, Split]


@dataclass
class GBDTModel:
    params: GBDTParams
    feature_count: int
    trees: list = field(default_factory=list)

    def predict_margin(self, row) -> float:
        row = np.asarray(row, dtype=np.float64)
        if row.shape != (self.feature_count,):
            raise ModelError(f"row has shape {row.shape}, model expects ({self.feature_count},)")
        eta = self.params.learning_rate
        m = self.params.base_margin
        for tree in self.trees:
            node = tree
            while isinstance(node, Split):
                node = node.left if row[node.feature] < node.threshold else node.right
            m += eta * node.weight
        return m

    def predict_proba(self, row) -> float:
        return float(sigmoid(self.predict_margin(row)))

    def classify(self, row) -> int:
        return int(self.predict_proba(row) >= 0.5)

    def predict_margins(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.feature_count:
            raise ModelError(f"matrix has shape {X.shape}, model expects (n, {self.feature_count})")
        m = np.full(X.shape[0], self.params.base_margin, dtype=np.float64)
        eta = self.params.learning_rate
        for tree in self.trees:
            m += eta * tree_values(tree, X)
        return m

    def predict_probas(self, X) -> np.ndarray:
        return sigmoid(self.predict_margins(X))

    def classify_all(self, X) -> np.ndarray:
        return (self.predict_probas(X) >= 0.5).astype(np.int64)


def sigmoid(m):
    m = np.asarray(m, dtype=np.float64)
    e = np.exp(-np.abs(m))
    return np.where(m >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def logistic_grad_hess(margin, label):
    """Gradient and hessian of ``log(1 + e^m) - y m`` w.r.t. the margin."""
    p = sigmoid(margin)
    g = p - np.asarray(label, dtype=np.float64)
    h = np.maximum(p * (1.0 - p), HESS_FLOOR)
    if np.ndim(g) == 0:
        return float(g), float(h)
    return g, h


def logloss(margins, labels) -> float:
    m = np.asarray(margins, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, m) - y * m))


def leaf_weight(G: float, H: float, params: GBDTParams) -> float:
    denom = H + params.reg_lambda
    if denom == 0:
        return 0.0
    return -G / denom


class Presorted(NamedTuple):
    order: np.ndarray  # (n_features, n_rows) stable argsort of each column
    values: np.ndarray  # columns in that order


def presort(X) -> Presorted:
    cols = np.ascontiguousarray(np.asarray(X, dtype=np.float64).T)
    order = np.argsort(cols, axis=1, kind="stable")
    return Presorted(order, np.take_along_axis(cols, order, axis=1))


def best_split(rows, X, g, h, params: GBDTParams, order=None) -> Optional[tuple]:
    """Best ``(feature, threshold, gain)`` for the node holding ``rows``.

    Ties go to the lowest feature index, then the lowest threshold. Returns
    None when no candidate has positive gain with both children meeting
    ``min_child_weight``. ``order`` is an optional :func:`presort` of ``X``;
    the result is the same with or without it.
    """
    rows = np.asarray(rows)
    if rows.size < 2:
        return None
    if order is None:
        order = presort(X)
    member = np.zeros(X.shape[0], dtype=bool)
    member[rows] = True
    # node rows in per-feature sorted order, one feature per row
    keep = member[order.order]
    shape = (X.shape[1], rows.size)
    idx = order.order[keep].reshape(shape)
    vals = order.values[keep].reshape(shape)
    gs = g[idx]
    hs = h[idx]
    lam = params.reg_lambda
    G = gs[0].sum()
    H = hs[0].sum()
    GL = np.cumsum(gs, axis=1)[:, :-1]
    HL = np.cumsum(hs, axis=1)[:, :-1]
    GR = G - GL
    HR = H - HL
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - G * G / (H + lam)) - params.gamma
    ok = (vals[:, :-1] < vals[:, 1:]) & (HL >= params.min_child_weight) & (HR >= params.min_child_weight)
    gain = np.where(ok & np.isfinite(gain), gain, -np.inf)

    best = gain.max()
    if not best > 0:
        return None
    # row-major argmax over (feature, position): lowest feature, then lowest threshold
    tied = gain >= best - TIE_RTOL * max(1.0, abs(best))
    f, i = np.unravel_index(np.argmax(tied), tied.shape)
    lo, hi = vals[f, i], vals[f, i + 1]
    t = (lo + hi) / 2.0
    if not lo < t <= hi:
        t = hi
    return int(f), float(t), float(gain[f, i])


def _grow(rows, X, g, h, params, depth, order):
    if depth < params.max_depth:
        found = best_split(rows, X, g, h, params, order)
        if found is not None:
            f, t, _ = found
            go_left = X[rows, f] < t
            return Split(
                f, t,
                _grow(rows[go_left], X, g, h, params, depth + 1, order),
                _grow(rows[~go_left], X, g, h, params, depth + 1, order),
            )
    return Leaf(leaf_weight(float(g[rows].sum()), float(h[rows].sum()), params))


def grow_tree(X, g, h, params: GBDTParams, order=None) -> Node:
    if order is None:
        order = presort(X)
    return _grow(np.arange(X.shape[0]), X, g, h, params, 0, order)


def tree_values(tree: Node, X) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.float64)

    def fill(node, idx):
        if isinstance(node, Leaf):
            out[idx] = node.weight
            return
        left = X[idx, node.feature] < node.threshold
        fill(node.left, idx[left])
        fill(node.right, idx[~left])

    fill(tree, np.arange(X.shape[0]))
    return out


def tree_depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


def train(X, labels, params: GBDTParams = GBDTParams(), callback=None) -> GBDTModel:
    """Fit ``params.num_trees`` trees; ``callback(round, margins)`` sees each round."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ModelError("training matrix is empty")
    if y.shape != (X.shape[0],):
        raise ModelError(f"{y.shape[0] if y.ndim else 0} labels for {X.shape[0]} rows")
    if not np.isin(y, (0, 1)).all():
        raise ModelError("labels must be 0 or 1")
    y = y.astype(np.float64)

    model = GBDTModel(params, X.shape[1])
    margins = np.full(X.shape[0], params.base_margin, dtype=np.float64)
    order = presort(X)
    for r in range(params.num_trees):
        g, h = logistic_grad_hess(margins, y)
        tree = grow_tree(X, g, h, params, order)
        model.trees.append(tree)
        margins += params.learning_rate * tree_values(tree, X)
        if callback is not None:
            callback(r, margins)
    return model


def train_matrix(fm, params: GBDTParams = GBDTParams()) -> GBDTModel:
    return train(fm.X, fm.labels, params)


# serialization

def _node_to_json(node):
    if isinstance(node, Leaf):
        return {"w": node.weight}
    return {"f": node.feature, "t": node.threshold,
            "l": _node_to_json(node.left), "r": _node_to_json(node.right)}


def _node_from_json(d, feature_count):
    if not isinstance(d, dict):
        raise ModelError("tree node must be an object")
    if "w" in d:
        return Leaf(float(d["w"]))
    try:
        f = int(d["f"])
        t = float(d["t"])
        left, right = d["l"], d["r"]
    except (KeyError, TypeError, ValueError):
        raise ModelError(f"malformed split node {sorted(d)}") from None
    if not 0 <= f < feature_count:
        raise ModelError(f"split feature {f} outside 0..{feature_count - 1}")
    return Split(f, t, _node_from_json(left, feature_count), _node_from_json(right, feature_count))


def model_to_json(model: GBDTModel) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "params": asdict(model.params),
        "feature_count": model.feature_count,
        "trees": [_node_to_json(t) for t in model.trees],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def model_from_json(text: str) -> GBDTModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelError(f"malformed model file: {e}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelError("not a model file")
    if doc.get("version") != MODEL_VERSION:
        raise ModelError(f"unsupported model version {doc.get('version')!r}, expected {MODEL_VERSION}")
    try:
        params = GBDTParams(**doc["params"])
        feature_count = int(doc["feature_count"])
        trees = [_node_from_json(t, feature_count) for t in doc["trees"]]
    except (KeyError, TypeError) as e:
        raise ModelError(f"malformed model file: {e}") from None
    return GBDTModel(params, feature_count, trees)


def save_model(model: GBDTModel, path) -> None:
    from .io import atomic_write_text
    atomic_write_text(path, model_to_json(model))


def load_model(path) -> GBDTModel:
    with open(path, encoding="utf-8") as f:
        return model_from_json(f.read())
