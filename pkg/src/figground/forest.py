"""From-scratch random forest with out-of-bag permutation importance.

Trees are CART with Gini impurity: each tree trains on a bootstrap of the
data, each split considers a random feature subset, and the best threshold is
the midpoint between adjacent sorted values. The forest predicts by majority
vote. Importance follows the classic recipe: permute one feature among a
tree's out-of-bag samples, measure the OOB error increase, average over trees.

Everything is deterministic for a fixed seed: tree t draws from a generator
seeded with (seed XOR t), so results do not depend on execution order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ModelFormatError
from .morpho import FAMILY_SLICES, FEATURE_NAMES

logger = logging.getLogger(__name__)

N_CLASSES = 8

MODEL_MAGIC = "figground-forest/1"


@dataclass
class ForestParams:
    n_trees: int = 200
    features_per_split: int = 7  # ceil(sqrt(40))
    max_depth: int | None = None
    min_samples_leaf: int = 1
    seed: int = 0

    def validate(self, n_features: int) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not (1 <= self.features_per_split <= n_features):
            raise ValueError(
                f"features_per_split must be in [1, {n_features}], got {self.features_per_split}"
            )
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 or None")


@dataclass
class DecisionTree:
    """Flat node arrays; feature == -1 marks a leaf."""

    feature: np.ndarray  # int32 (K,)
    threshold: np.ndarray  # float64 (K,)
    left: np.ndarray  # int32 (K,)
    right: np.ndarray  # int32 (K,)
    counts: np.ndarray  # int64 (K, n_classes); class counts at each node
    leaf_class: np.ndarray  # int32 (K,), -1 for internal nodes
    bootstrap: np.ndarray  # int64 (n,) sample indices drawn with replacement

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                return node
            rows = np.nonzero(active)[0]
            cur = node[rows]
            go_left = X[rows, feat[rows]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.leaf_class[self.apply(X)]


def _build_tree(
    X: np.ndarray, y: np.ndarray, n_classes: int, params: ForestParams, seed: int
) -> DecisionTree:
    rng = np.random.default_rng(seed)
    n, n_features = X.shape
    bootstrap = rng.integers(0, n, size=n)
    Xb = X[bootstrap]
    yb = y[bootstrap]

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    counts: list[np.ndarray] = []
    leaf_class: list[int] = []

    k = params.features_per_split
    min_leaf = params.min_samples_leaf

    # stack of (member indices into Xb, depth, parent node, is_left_child);
    # LIFO with right pushed first = deterministic preorder
    stack: list[tuple[np.ndarray, int, int, bool]] = [(np.arange(n), 0, -1, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        node_id = len(feature)
        if parent >= 0:
            if is_left:
                left[parent] = node_id
            else:
                right[parent] = node_id
        node_counts = np.bincount(yb[idx], minlength=n_classes).astype(np.int64)
        counts.append(node_counts)

        m = idx.size
        pure = int((node_counts > 0).sum()) <= 1
        depth_stop = params.max_depth is not None and depth >= params.max_depth
        split = None
        if not pure and not depth_stop and m >= 2 * min_leaf:
            split = _best_split(Xb, yb, idx, n_classes, k, min_leaf, rng)
        if split is None:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            leaf_class.append(int(np.argmax(node_counts)))
            continue
        f, thr = split
        feature.append(f)
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        leaf_class.append(-1)
        mask = Xb[idx, f] <= thr
        stack.append((idx[~mask], depth + 1, node_id, False))
        stack.append((idx[mask], depth + 1, node_id, True))

    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        counts=np.asarray(counts, dtype=np.int64),
        leaf_class=np.asarray(leaf_class, dtype=np.int32),
        bootstrap=bootstrap,
    )


def _best_split(
    Xb: np.ndarray,
    yb: np.ndarray,
    idx: np.ndarray,
    n_classes: int,
    features_per_split: int,
    min_leaf: int,
    rng: np.random.Generator,
) -> tuple[int, float] | None:
    """Best (feature, threshold) by Gini decrease, or None if nothing improves.

    Ties break toward the lowest feature index, then the lowest threshold;
    all comparisons are strict so the scan is order-deterministic.
    """
    n_features = Xb.shape[1]
    feats = np.sort(rng.choice(n_features, size=features_per_split, replace=False))
    m = idx.size
    y_node = yb[idx]
    total = np.bincount(y_node, minlength=n_classes).astype(np.float64)
    # impurity terms scaled by m: m * gini = m - sum(c^2)/m
    parent_term = m - float((total * total).sum()) / m

    best_dec = 0.0
    best: tuple[int, float] | None = None
    sizes = np.arange(1, m, dtype=np.float64)
    for f in feats:
        v = Xb[idx, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        if vs[0] == vs[-1]:
            continue
        onehot = np.zeros((m, n_classes), dtype=np.float64)
        onehot[np.arange(m), y_node[order]] = 1.0
        pref = np.cumsum(onehot, axis=0)[:-1]  # row i-1 = left counts for split size i
        left_ss = (pref * pref).sum(axis=1)
        rest = total[np.newaxis, :] - pref
        right_ss = (rest * rest).sum(axis=1)
        child_term = (sizes - left_ss / sizes) + ((m - sizes) - right_ss / (m - sizes))
        dec = parent_term - child_term
        valid = (vs[1:] != vs[:-1]) & (sizes >= min_leaf) & ((m - sizes) >= min_leaf)
        if not valid.any():
            continue
        dec = np.where(valid, dec, -np.inf)
        pos = int(np.argmax(dec))  # first max = lowest threshold
        if dec[pos] > best_dec:
            thr = float((vs[pos] + vs[pos + 1]) / 2.0)
            if thr >= vs[pos + 1]:  # midpoint of adjacent floats can round up
                thr = float(vs[pos])
            best_dec = float(dec[pos])
            best = (int(f), thr)
    return best


@dataclass
class ForestModel:
    trees: list[DecisionTree]
    params: ForestParams
    n_features: int
    n_samples: int
    n_classes: int = N_CLASSES
    feature_names: tuple[str, ...] | None = None

    def oob_indices(self, t: int) -> np.ndarray:
        mask = np.ones(self.n_samples, dtype=bool)
        mask[self.trees[t].bootstrap] = False
        return np.nonzero(mask)[0]


def train(
    X: np.ndarray,
    y: np.ndarray,
    params: ForestParams | None = None,
    n_classes: int = N_CLASSES,
    feature_names: tuple[str, ...] | None = None,
) -> ForestModel:
    """Train the forest. Deterministic for fixed params.seed."""
    params = params or ForestParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise ValueError(f"bad training shapes X{X.shape} y{y.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X must be finite")
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError(f"labels must be in [0, {n_classes})")
    params.validate(X.shape[1])
    if np.unique(y).size < 2:
        logger.warning("train: single-class labels, trees degenerate to one leaf")
    if feature_names is None and X.shape[1] == len(FEATURE_NAMES):
        feature_names = FEATURE_NAMES
    trees = [
        _build_tree(X, y, n_classes, params, seed=params.seed ^ t)
        for t in range(params.n_trees)
    ]
    return ForestModel(
        trees=trees,
        params=params,
        n_features=X.shape[1],
        n_samples=X.shape[0],
        n_classes=n_classes,
        feature_names=feature_names,
    )


def predict_matrix(model: ForestModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(labels, votes) for a batch; votes rows sum to n_trees."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected (n, {model.n_features}) matrix, got {X.shape}")
    votes = np.zeros((X.shape[0], model.n_classes), dtype=np.int64)
    for tree in model.trees:
        pred = tree.predict(X)
        votes[np.arange(X.shape[0]), pred] += 1
    return votes.argmax(axis=1), votes


def predict(model: ForestModel, x: np.ndarray) -> tuple[int, np.ndarray]:
    """Majority vote over trees; ties go to the lowest category index."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ValueError(f"expected a {model.n_features}-vector, got shape {x.shape}")
    labels, votes = predict_matrix(model, x[np.newaxis, :])
    return int(labels[0]), votes[0]


def oob_error(model: ForestModel, X: np.ndarray, y: np.ndarray) -> float:
    """Misclassified fraction under per-sample majority vote of OOB trees."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape != (model.n_samples, model.n_features):
        raise ValueError("X must be the training matrix the model was fit on")
    votes = np.zeros((model.n_samples, model.n_classes), dtype=np.int64)
    for t, tree in enumerate(model.trees):
        oob = model.oob_indices(t)
        if oob.size == 0:
            continue
        pred = tree.predict(X[oob])
        votes[oob, pred] += 1
    covered = votes.sum(axis=1) > 0
    if not covered.any():
        raise ValueError("no sample is out-of-bag for any tree")
    pred = votes[covered].argmax(axis=1)
    return float(np.mean(pred != y[covered]))


@dataclass
class ImportanceReport:
    """Permutation importances per feature dimension and per feature family."""

    per_dimension: np.ndarray  # (n_features,), negatives clamped to 0
    per_family: dict[str, float] | None  # normalized to sum 1; None off the 40-d layout
    baseline_oob_error: float
    feature_names: tuple[str, ...]


def permutation_importance(
    model: ForestModel, X: np.ndarray, y: np.ndarray, seed: int = 0
) -> ImportanceReport:
    """Mean per-tree OOB error increase when one feature column is shuffled."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape != (model.n_samples, model.n_features):
        raise ValueError("X must be the training matrix the model was fit on")
    n_features = model.n_features
    deltas = np.zeros(n_features, dtype=np.float64)
    used_trees = 0
    for t, tree in enumerate(model.trees):
        oob = model.oob_indices(t)
        if oob.size == 0:
            continue
        used_trees += 1
        Xo = X[oob].copy()
        yo = y[oob]
        base_err = float(np.mean(tree.predict(Xo) != yo))
        rng = np.random.default_rng(seed ^ t)
        for j in range(n_features):
            perm = rng.permutation(oob.size)
            col = Xo[:, j].copy()
            Xo[:, j] = col[perm]
            err = float(np.mean(tree.predict(Xo) != yo))
            Xo[:, j] = col
            deltas[j] += err - base_err
    if used_trees == 0:
        raise ValueError("no tree has out-of-bag samples")
    per_dim = np.maximum(deltas / used_trees, 0.0)

    per_family = None
    if n_features == len(FEATURE_NAMES):
        sums = {name: float(per_dim[sl].sum()) for name, sl in FAMILY_SLICES.items()}
        total = sum(sums.values())
        if total > 0:
            per_family = {name: s / total for name, s in sums.items()}
        else:
            per_family = {name: 0.0 for name in sums}

    names = model.feature_names or tuple(f"f{i}" for i in range(n_features))
    return ImportanceReport(
        per_dimension=per_dim,
        per_family=per_family,
        baseline_oob_error=oob_error(model, X, y),
        feature_names=names,
    )


def save_model(model: ForestModel, path: Path) -> None:
    """Versioned text serialization; exact round-trip (thresholds via repr)."""
    if not model.trees:
        raise ValueError("refusing to save an empty forest")
    p = model.params
    lines = [
        MODEL_MAGIC,
        f"n_features {model.n_features}",
        f"n_classes {model.n_classes}",
        f"n_samples {model.n_samples}",
        f"n_trees {len(model.trees)}",
        "params features_per_split={} max_depth={} min_samples_leaf={} seed={}".format(
            p.features_per_split,
            "none" if p.max_depth is None else p.max_depth,
            p.min_samples_leaf,
            p.seed,
        ),
        "feature_names " + (" ".join(model.feature_names) if model.feature_names else "-"),
    ]
    for t, tree in enumerate(model.trees):
        lines.append(f"tree {t}")
        lines.append("bootstrap " + " ".join(str(i) for i in tree.bootstrap))
        lines.append(f"nodes {tree.feature.size}")
        for k in range(tree.feature.size):
            if tree.feature[k] >= 0:
                lines.append(
                    f"S {tree.feature[k]} {float(tree.threshold[k])!r} {tree.left[k]} {tree.right[k]}"
                )
            else:
                lines.append("L " + " ".join(str(c) for c in tree.counts[k]))
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: Path) -> ForestModel:
    """Parse a serialized forest; truncation or version drift raises."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    pos = 0

    def next_line() -> str:
        nonlocal pos
        if pos >= len(lines):
            raise ModelFormatError("model file truncated")
        line = lines[pos]
        pos += 1
        return line

    def expect(prefix: str) -> str:
        line = next_line()
        if not line.startswith(prefix + " "):
            raise ModelFormatError(f"expected {prefix!r} line, got {line[:40]!r}")
        return line[len(prefix) + 1 :]

    magic = next_line()
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"unsupported model version {magic!r}, expected {MODEL_MAGIC!r}")
    n_features = int(expect("n_features"))
    n_classes = int(expect("n_classes"))
    n_samples = int(expect("n_samples"))
    n_trees = int(expect("n_trees"))
    raw_params = dict(kv.split("=", 1) for kv in expect("params").split())
    params = ForestParams(
        n_trees=n_trees,
        features_per_split=int(raw_params["features_per_split"]),
        max_depth=None if raw_params["max_depth"] == "none" else int(raw_params["max_depth"]),
        min_samples_leaf=int(raw_params["min_samples_leaf"]),
        seed=int(raw_params["seed"]),
    )
    names_raw = expect("feature_names")
    feature_names = None if names_raw == "-" else tuple(names_raw.split())

    trees: list[DecisionTree] = []
    for t in range(n_trees):
        if expect("tree") != str(t):
            raise ModelFormatError(f"tree {t} header out of order")
        bootstrap = np.array([int(s) for s in expect("bootstrap").split()], dtype=np.int64)
        if bootstrap.size != n_samples:
            raise ModelFormatError(f"tree {t}: bootstrap size {bootstrap.size} != {n_samples}")
        k = int(expect("nodes"))
        feature = np.empty(k, dtype=np.int32)
        threshold = np.zeros(k, dtype=np.float64)
        left = np.full(k, -1, dtype=np.int32)
        right = np.full(k, -1, dtype=np.int32)
        counts = np.zeros((k, n_classes), dtype=np.int64)
        leaf_class = np.full(k, -1, dtype=np.int32)
        for i in range(k):
            parts = next_line().split()
            if parts[0] == "S" and len(parts) == 5:
                feature[i] = int(parts[1])
                threshold[i] = float(parts[2])
                left[i] = int(parts[3])
                right[i] = int(parts[4])
            elif parts[0] == "L" and len(parts) == n_classes + 1:
                feature[i] = -1
                counts[i] = [int(c) for c in parts[1:]]
                leaf_class[i] = int(np.argmax(counts[i]))
            else:
                raise ModelFormatError(f"tree {t} node {i}: bad record {parts[:2]}")
        trees.append(
            DecisionTree(
                feature=feature,
                threshold=threshold,
                left=left,
                right=right,
                counts=counts,
                leaf_class=leaf_class,
                bootstrap=bootstrap,
            )
        )
    if next_line() != "end":
        raise ModelFormatError("missing end marker (file truncated?)")
    return ForestModel(
        trees=trees,
        params=params,
        n_features=n_features,
        n_samples=n_samples,
        n_classes=n_classes,
        feature_names=feature_names,
    )
