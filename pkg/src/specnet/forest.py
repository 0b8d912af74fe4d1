"""Random-forest baseline: CART trees, Gini impurity, bootstrap + majority vote.

Trees are grown to purity (no depth limit) with a random feature subset per
node and midpoint thresholds; the forest votes unweighted, ties going to
the lowest class index. The reference configuration in the source study
used 10000 estimators; the desk-scale default is 200, which saturates
accuracy at a fraction of the cost.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _binio
from .errors import CheckpointError, DatasetError, ShapeError


@dataclass
class ForestConfig:
    n_estimators: int = 200
    max_features: int | str = "sqrt"  # "sqrt", "all", or an explicit count
    min_samples_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError(f"n_estimators must be >= 1, got {self.n_estimators}")
        if self.min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")

    def resolve_max_features(self, n_features: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(n_features)))
        if self.max_features == "all":
            return n_features
        m = int(self.max_features)
        if not 1 <= m <= n_features:
            raise ValueError(f"max_features {m} outside [1, {n_features}]")
        return m


@dataclass
class Tree:
    """Flat-array binary tree; feature < 0 marks a leaf."""

    feature: np.ndarray     # (n_nodes,) int64, -1 at leaves
    threshold: np.ndarray   # (n_nodes,) float64
    left: np.ndarray        # (n_nodes,) int64, -1 at leaves
    right: np.ndarray       # (n_nodes,) int64, -1 at leaves
    histogram: np.ndarray   # (n_nodes, n_classes) int64 class counts

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def predict_class(self, X: np.ndarray) -> np.ndarray:
        """Route every row to its leaf; predict the leaf majority class."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            r = rows[active]
            go_left = X[r, feat[active]] < self.threshold[node[active]]
            node[r] = np.where(go_left, self.left[node[active]], self.right[node[active]])
        return self.histogram[node].argmax(axis=1)


def _gini(counts: np.ndarray, total: int) -> float:
    return 1.0 - float(np.square(counts / total).sum())


def _best_split(X, y, sel, features, min_leaf, n_classes):
    """Best (cost, feature, threshold) over candidate features, or None.

    Thresholds are midpoints between adjacent sorted values; children must
    hold at least ``min_leaf`` samples; the split must strictly reduce the
    weighted Gini impurity.
    """
    m = sel.size
    parent_counts = np.bincount(y[sel], minlength=n_classes)
    parent_gini = _gini(parent_counts, m)
    eye = np.eye(n_classes, dtype=np.int64)
    best = None
    best_cost = parent_gini - 1e-12
    for f in features:
        vals = X[sel, f]
        order = np.argsort(vals, kind="stable")
        fs = vals[order]
        ys = y[sel][order]
        cum = eye[ys].cumsum(axis=0)            # (m, K) counts in the left block
        n_left = np.arange(1, m)
        n_right = m - n_left
        left_counts = cum[:-1].astype(np.float64)
        right_counts = parent_counts - cum[:-1]
        gini_left = 1.0 - np.square(left_counts / n_left[:, None]).sum(axis=1)
        gini_right = 1.0 - np.square(right_counts / n_right[:, None]).sum(axis=1)
        cost = (n_left * gini_left + n_right * gini_right) / m
        valid = (fs[1:] > fs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        cost = np.where(valid, cost, np.inf)
        i = int(cost.argmin())
        if cost[i] < best_cost:
            best_cost = float(cost[i])
            best = (best_cost, int(f), float((fs[i] + fs[i + 1]) / 2.0))
    return best


def fit_tree(X, y, n_classes: int, max_features: int, min_samples_leaf: int,
             rng: np.random.Generator) -> Tree:
    """Grow one CART tree (iterative, so deep trees cannot overflow the stack)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ShapeError(f"fit_tree: X {X.shape} does not match {y.size} labels")
    if X.shape[0] < 1:
        raise ShapeError("fit_tree: need at least one sample")
    n_features = X.shape[1]

    feature, threshold, left, right, hists = [], [], [], [], []

    def new_node(counts) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        hists.append(counts)
        return len(feature) - 1

    root_counts = np.bincount(y, minlength=n_classes)
    stack = [(new_node(root_counts), np.arange(X.shape[0], dtype=np.int64))]
    while stack:
        node, sel = stack.pop()
        counts = hists[node]
        if np.count_nonzero(counts) <= 1 or sel.size < 2 * min_samples_leaf:
            continue
        candidates = rng.choice(n_features, size=min(max_features, n_features), replace=False)
        found = _best_split(X, y, sel, candidates, min_samples_leaf, n_classes)
        if found is None:
            continue
        _cost, f, thr = found
        go_left = X[sel, f] < thr
        feature[node] = f
        threshold[node] = thr
        left_sel, right_sel = sel[go_left], sel[~go_left]
        left[node] = new_node(np.bincount(y[left_sel], minlength=n_classes))
        right[node] = new_node(np.bincount(y[right_sel], minlength=n_classes))
        stack.append((right[node], right_sel))
        stack.append((left[node], left_sel))

    return Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        histogram=np.stack(hists).astype(np.int64),
    )


@dataclass
class Forest:
    trees: list[Tree]
    n_classes: int
    n_features: int
    config: ForestConfig
    bootstrap_indices: list[np.ndarray] = field(default_factory=list, repr=False)

    def predict_votes(self, X) -> np.ndarray:
        """Per-sample vote counts over classes; rows sum to n_estimators."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(
                f"predict: X shape {X.shape} does not match {self.n_features} training features"
            )
        votes = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            votes[rows, tree.predict_class(X)] += 1
        return votes


def fit_forest(X, y, config: ForestConfig) -> Forest:
    """Fit n_estimators bootstrap trees with independent derived seeds."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ShapeError(f"fit_forest: X {X.shape} does not match {y.size} labels")
    classes = np.unique(y)
    if classes.size < 2:
        raise DatasetError(f"fit_forest: need >= 2 classes, got {classes.tolist()}")
    n_classes = int(y.max()) + 1
    max_features = config.resolve_max_features(X.shape[1])

    trees = []
    bootstraps = []
    n = X.shape[0]
    for seq in np.random.SeedSequence(config.seed).spawn(config.n_estimators):
        rng = np.random.default_rng(seq)
        boot = rng.integers(0, n, size=n)
        trees.append(fit_tree(X[boot], y[boot], n_classes, max_features,
                              config.min_samples_leaf, rng))
        bootstraps.append(boot)
    return Forest(trees=trees, n_classes=n_classes, n_features=X.shape[1],
                  config=config, bootstrap_indices=bootstraps)


def predict_forest(forest: Forest, X) -> np.ndarray:
    """Unweighted majority vote; ties break to the lowest class index."""
    return forest.predict_votes(X).argmax(axis=1)


# ---------------------------------------------------------------------------
# Forest checkpoints
# ---------------------------------------------------------------------------


def save_forest(forest: Forest, path, run_id: str = "") -> None:
    w = _binio.BodyWriter()
    w.u32(_binio.FORMAT_VERSION)
    w.text(run_id)
    w.u32(forest.n_classes)
    w.u32(forest.n_features)
    w.u32(len(forest.trees))
    for tree in forest.trees:
        w.u32(tree.n_nodes)
        w.i32_array(tree.feature)
        w.f64_array(tree.threshold)
        w.i32_array(tree.left)
        w.i32_array(tree.right)
        w.i64_array(tree.histogram)
    _binio.write_blob(path, _binio.MAGIC_FOREST, w)


def load_forest(path) -> tuple[Forest, str]:
    r = _binio.read_blob(path, _binio.MAGIC_FOREST)
    version = r.u32()
    if version != _binio.FORMAT_VERSION:
        raise CheckpointError(f"{path}: format version {version}, expected {_binio.FORMAT_VERSION}")
    run_id = r.text()
    n_classes = r.u32()
    n_features = r.u32()
    n_trees = r.u32()
    trees = []
    for _ in range(n_trees):
        n_nodes = r.u32()
        tree = Tree(
            feature=r.i32_array(n_nodes),
            threshold=r.f64_array(n_nodes),
            left=r.i32_array(n_nodes),
            right=r.i32_array(n_nodes),
            histogram=r.i64_array(n_nodes * n_classes).reshape(n_nodes, n_classes),
        )
        trees.append(tree)
    r.finish()
    config = ForestConfig(n_estimators=max(1, n_trees))
    return Forest(trees=trees, n_classes=n_classes, n_features=n_features, config=config), run_id
