"""C4.5-style binary decision tree on numeric features.

Splits maximise gain ratio among candidates whose information gain reaches
the average gain; thresholds are midpoints between consecutive distinct
values. Pruning is bottom-up subtree replacement driven by the pessimistic
(upper confidence limit) error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import norm

from ._split import choose_split, grow_tree, prune_tree
from .base import Model

LEAF = -1


@lru_cache(maxsize=8)
def _z(cf: float) -> float:
    return float(norm.ppf(1 - cf))


def added_errors(n: float, e: float, cf: float) -> float:
    """Extra errors implied by the upper ``cf`` confidence limit on the error rate."""
    if cf > 0.5:
        raise ValueError("confidence above 0.5")
    if e < 1:
        base = n * (1 - cf ** (1.0 / n))
        if e == 0:
            return base
        return base + e * (added_errors(n, 1.0, cf) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = _z(cf)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


@dataclass(frozen=True, eq=False)
class TreeModel(Model):
    # parallel node arrays; node 0 is the root
    feature: np.ndarray  # int, LEAF for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, 2) training [Low, High] counts
    dim: int

    @property
    def n_features(self) -> int:
        return self.dim

    def leaf_index(self, x) -> int:
        node = 0
        while self.feature[node] != LEAF:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return node

    def decide(self, X):
        X = self._check_dim(X)
        leaves = np.array([self.leaf_index(x) for x in X], dtype=int)
        c = self.counts[leaves].astype(float)
        tot = c.sum(axis=1)
        high = c[:, 1] > c[:, 0]
        tie = c[:, 1] == c[:, 0]
        score = np.where(high, c[:, 1], c[:, 0]) / np.where(tot > 0, tot, 1)
        return high, score, tie

    @property
    def depth(self) -> int:
        def d(node):
            if self.feature[node] == LEAF:
                return 0
            return 1 + max(d(self.left[node]), d(self.right[node]))

        return d(0)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))


def _compact(feature, threshold, left, right, counts):
    """Drop nodes orphaned by pruning and renumber in pre-order."""
    keep_f, keep_t, keep_l, keep_r, keep_c = [], [], [], [], []

    def visit(node):
        i = len(keep_f)
        leaf = feature[node] == LEAF
        keep_f.append(LEAF if leaf else int(feature[node]))
        keep_t.append(0.0 if leaf else float(threshold[node]))
        keep_l.append(LEAF)
        keep_r.append(LEAF)
        keep_c.append(counts[node])
        if not leaf:
            keep_l[i] = visit(left[node])
            keep_r[i] = visit(right[node])
        return i

    visit(0)
    return (
        np.array(keep_f, dtype=int),
        np.array(keep_t, dtype=float),
        np.array(keep_l, dtype=int),
        np.array(keep_r, dtype=int),
        np.array(keep_c, dtype=int).reshape(-1, 2),
    )


def fit_tree(X, y, min_leaf=2, confidence=0.25, pruning=True):
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=np.int64)
    XT = np.ascontiguousarray(X.T)
    order = np.ascontiguousarray(np.argsort(XT, axis=1, kind="stable"))
    feature, threshold, left, right, counts = grow_tree(XT, order, y, int(min_leaf))
    if pruning:
        prune_tree(feature, left, right, counts, float(confidence), _z(float(confidence)))
    return _compact(feature, threshold, left, right, counts)
