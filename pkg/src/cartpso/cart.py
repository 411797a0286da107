"""CART trees grown on Gini impurity, and Gini_Gain feature ranking.

Feature columns are addressed 0-based inside trees (``Split.feature``);
:class:`ImportanceReport` and :func:`select_top_k` use 1-based feature
indices so they line up with the feature catalog.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ._backend import split_scan
from .errors import BadK, EmptyDataset, EmptyNode, EmptySide, InconsistentCounts

TIE_EPS = 1e-12


def gini(counts):
    c = np.asarray(counts, dtype=np.float64)
    total = c.sum()
    if total <= 0:
        raise EmptyNode("node has no samples")
    p = c / total
    return float(1.0 - (p * p).sum())


def split_gini(left_counts, right_counts):
    left = np.asarray(left_counts, dtype=np.float64)
    right = np.asarray(right_counts, dtype=np.float64)
    nl, nr = left.sum(), right.sum()
    if nl <= 0 or nr <= 0:
        raise EmptySide("both sides of a split must be non-empty")
    n = nl + nr
    return float(nl / n * gini(left) + nr / n * gini(right))


def gini_gain(parent_counts, left_counts, right_counts):
    parent = np.asarray(parent_counts)
    if not np.array_equal(parent, np.asarray(left_counts) + np.asarray(right_counts)):
        raise InconsistentCounts("parent counts must equal left + right")
    return gini(parent) - split_gini(left_counts, right_counts)


@dataclass(frozen=True)
class SplitCandidate:
    threshold: float
    gain: float


def _encode(y):
    classes, codes = np.unique(np.asarray(y), return_inverse=True)
    return classes, codes.astype(np.int64)


def _scan_feature(values, codes, n_classes):
    order = np.argsort(values, kind="stable")
    v = np.ascontiguousarray(values[order], dtype=np.float64)
    gain, thr, pos = split_scan(v, np.ascontiguousarray(codes[order]), n_classes)
    return (None if pos < 0 else (gain, thr))


def best_split(X, y, feature, min_gain=0.0):
    """Best midpoint threshold on column ``feature``.

    Returns a :class:`SplitCandidate`, or ``None`` when every value is
    equal or no threshold gains more than ``min_gain``.  Samples go left
    when ``x <= threshold``.
    """
    X = np.asarray(X, dtype=np.float64)
    if len(X) < 2:
        return None
    classes, codes = _encode(y)
    found = _scan_feature(X[:, feature], codes, len(classes))
    if found is None or found[0] <= min_gain:
        return None
    return SplitCandidate(threshold=found[1], gain=found[0])


@dataclass(frozen=True)
class CartParams:
    max_depth: int = 12
    min_samples_split: int = 2
    min_gain: float = 1e-7


@dataclass
class Leaf:
    counts: np.ndarray
    prediction: int  # index into CartTree.classes
    node_gini: float

    @property
    def sample_count(self):
        return int(self.counts.sum())


@dataclass
class Split:
    feature: int
    threshold: float
    left: object
    right: object
    node_gini: float
    sample_count: int
    gain: float


@dataclass
class CartTree:
    root: object
    classes: np.ndarray
    n_features: int

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = []
        for row in X:
            node = self.root
            while isinstance(node, Split):
                node = node.left if row[node.feature] <= node.threshold else node.right
            out.append(self.classes[node.prediction])
        return np.array(out)

    def depth(self):
        def walk(node):
            if isinstance(node, Leaf):
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)

    def splits(self):
        stack, out = [self.root], []
        while stack:
            node = stack.pop()
            if isinstance(node, Split):
                out.append(node)
                stack.extend((node.right, node.left))
        return out


def _grow(X, codes, idx, n_classes, depth, params):
    counts = np.bincount(codes[idx], minlength=n_classes)
    node_gini = gini(counts)
    leaf = Leaf(counts, int(np.argmax(counts)), node_gini)
    if depth >= params.max_depth or len(idx) < params.min_samples_split or node_gini == 0.0:
        return leaf
    best = None
    sub = X[idx]
    sub_codes = codes[idx]
    for f in range(X.shape[1]):
        found = _scan_feature(sub[:, f], sub_codes, n_classes)
        if found is not None and (best is None or found[0] > best[0] + TIE_EPS):
            best = (found[0], found[1], f)
    if best is None or best[0] <= params.min_gain:
        return leaf
    gain, thr, f = best
    go_left = X[idx, f] <= thr
    left = _grow(X, codes, idx[go_left], n_classes, depth + 1, params)
    right = _grow(X, codes, idx[~go_left], n_classes, depth + 1, params)
    return Split(f, thr, left, right, node_gini, len(idx), gain)


def build_tree(X, y, params=CartParams()):
    """Grow an unpruned CART classification tree."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise EmptyDataset("need at least one sample")
    classes, codes = _encode(y)
    root = _grow(X, codes, np.arange(len(X)), len(classes), 0, params)
    return CartTree(root, classes, X.shape[1])


def tree_importance(tree):
    """Per-column sum of (node sample fraction) * Gini_Gain."""
    out = np.zeros(tree.n_features)
    splits = tree.splits()
    if not splits:
        return out
    n_root = tree.root.sample_count
    for s in splits:
        out[s.feature] += s.sample_count / n_root * s.gain
    return out


@dataclass(frozen=True)
class FeatureRank:
    index: int  # 1-based
    name: str
    gain: float
    rank: int


@dataclass
class ImportanceReport:
    features: list = field(default_factory=list)  # sorted by rank

    @property
    def gains(self):
        """Aggregated gain per 1-based feature index."""
        return {f.index: f.gain for f in self.features}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["feature_index", "name", "gain", "rank"])
        for f in self.features:
            w.writerow([f.index, f.name, repr(f.gain), f.rank])
        return buf.getvalue()

    def to_dict(self):
        return [
            {"feature_index": f.index, "name": f.name, "gain": f.gain, "rank": f.rank}
            for f in self.features
        ]


def rank_gains(gains, names=None):
    gains = np.asarray(gains, dtype=np.float64)
    names = names or [f"f{i + 1:02d}" for i in range(len(gains))]
    order = sorted(range(len(gains)), key=lambda i: (-gains[i], i))
    return ImportanceReport(
        [FeatureRank(i + 1, names[i], float(gains[i]), r + 1) for r, i in enumerate(order)]
    )


def feature_importance(X, y, params=CartParams(), n_trees=25, seed=0, names=None):
    """Gini_Gain importance, averaged over ``n_trees`` bootstrap trees.

    With ``n_trees=1`` a single tree is grown on the data as given (no
    resampling).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if len(X) == 0:
        raise EmptyDataset("need at least one sample")
    if n_trees == 1:
        total = tree_importance(build_tree(X, y, params))
    else:
        rng = np.random.default_rng(seed)
        total = np.zeros(X.shape[1])
        for _ in range(n_trees):
            idx = rng.integers(0, len(X), len(X))
            total += tree_importance(build_tree(X[idx], y[idx], params))
        total /= n_trees
    return rank_gains(total, names)


def select_top_k(report, k):
    """The ``k`` best 1-based feature indices in rank order."""
    n = len(report.features)
    if not 1 <= k <= n:
        raise BadK(f"k must be in 1..{n}, got {k}")
    return [f.index for f in report.features[:k]]
