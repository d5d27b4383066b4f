"""Independent brute-force booster used only as a test oracle.

Same split rule and leaf formula as the package implementation, coded the
slow way: every (feature, midpoint) candidate is scored by explicitly
slicing and summing, and trees are grown with plain recursion over index
lists.  Kept free of any code sharing with mialab.gbm on purpose.
"""

import math

import numpy as np


def enumerate_best_split(x, residuals):
    """Minimum-SSE split of one feature by exhaustive candidate scoring.

    Returns (threshold, sse_children) or None.  Ties go to the smallest
    threshold.
    """
    values = sorted(set(float(v) for v in x))
    best = None
    for a, b in zip(values, values[1:]):
        thr = 0.5 * (a + b)
        if not (a < thr < b):
            continue
        left = residuals[x <= thr]
        right = residuals[x > thr]
        sse = (
            float(np.sum((left - left.mean()) ** 2))
            + float(np.sum((right - right.mean()) ** 2))
        )
        if best is None or sse < best[1] - 1e-15:
            best = (thr, sse)
    return best


def enumerate_best_split_all_features(X, residuals):
    """(feature, threshold, sse_children) minimizing SSE over all candidates."""
    best = None
    for f in range(X.shape[1]):
        found = enumerate_best_split(X[:, f], residuals)
        if found is None:
            continue
        thr, sse = found
        if best is None or sse < best[2] - 1e-15:
            best = (f, thr, sse)
    return best


class _Leaf:
    def __init__(self, value):
        self.value = value

    def predict(self, row):
        return self.value


class _Split:
    def __init__(self, feature, threshold, left, right):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right

    def predict(self, row):
        child = self.left if row[self.feature] <= self.threshold else self.right
        return child.predict(row)


def _grow(X, residuals, hessians, idx, depth, max_depth):
    node_res = residuals[idx]
    if depth < max_depth and idx.size >= 2:
        parent_sse = float(np.sum((node_res - node_res.mean()) ** 2))
        found = enumerate_best_split_all_features(X[idx], node_res)
        if found is not None and found[2] < parent_sse - 0.0:
            f, thr, _ = found
            go_left = X[idx, f] <= thr
            return _Split(
                f,
                thr,
                _grow(X, residuals, hessians, idx[go_left], depth + 1, max_depth),
                _grow(X, residuals, hessians, idx[~go_left], depth + 1, max_depth),
            )
    value = float(node_res.sum() / max(hessians[idx].sum(), 1e-12))
    return _Leaf(value)


def reference_boost(X, y, n_estimators, max_depth, learning_rate):
    """Stage-wise booster; returns (base_score, trees, staged mean deviance)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rate = y.mean()
    base = math.log(rate / (1.0 - rate))
    raw = np.full(X.shape[0], base)

    def deviance(raw_scores):
        return float(np.mean(np.logaddexp(0.0, raw_scores) - y * raw_scores))

    staged = [deviance(raw)]
    trees = []
    idx = np.arange(X.shape[0])
    for _ in range(n_estimators):
        p = 1.0 / (1.0 + np.exp(-raw))
        residuals = y - p
        hessians = p * (1.0 - p)
        tree = _grow(X, residuals, hessians, idx, 0, max_depth)
        trees.append(tree)
        raw = raw + learning_rate * np.array([tree.predict(row) for row in X])
        staged.append(deviance(raw))
    return base, trees, np.asarray(staged)
