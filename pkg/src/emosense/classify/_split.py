"""Compiled split search for the C4.5-style tree (binary numeric splits)."""

import numpy as np
from numba import njit


@njit(cache=True)
def feature_splits(XT, y, order, start, end, n_high, min_leaf, xlx):
    """Best-gain threshold per feature for the rows of one node.

    ``XT`` is the feature-major data matrix and ``order[f, start:end]``
    lists the node's rows sorted by feature ``f``.
    Returns ``(gain, gain_ratio, threshold, valid)``. A split is valid when
    both sides hold at least ``min_leaf`` rows and the threshold falls
    between two distinct values.
    """
    d = XT.shape[0]
    n = end - start
    gains = np.zeros(d)
    ratios = np.zeros(d)
    thresholds = np.zeros(d)
    valid = np.zeros(d, dtype=np.bool_)
    n_low = n - n_high
    # n * entropy, in bits
    parent = xlx[n] - xlx[n_low] - xlx[n_high]
    for f in range(d):
        left_high = 0
        best = -1.0
        best_left = 0
        best_lo = 0.0
        best_hi = 0.0
        col = XT[f]
        idx = order[f]
        prev_val = col[idx[start]]
        left_high += y[idx[start]]
        for left_n in range(1, n - min_leaf + 1):
            r = idx[start + left_n]
            v = col[r]
            if left_n >= min_leaf and v != prev_val:
                lh = left_high
                ll = left_n - lh
                rn = n - left_n
                rh = n_high - lh
                rl = rn - rh
                children = (xlx[left_n] - xlx[ll] - xlx[lh]) + (xlx[rn] - xlx[rl] - xlx[rh])
                gain = (parent - children) / n
                if gain > best + 1e-12:
                    best = gain
                    best_left = left_n
                    best_lo = prev_val
                    best_hi = v
            left_high += y[r]
            prev_val = v
        if best_left > 0:
            split_info = (xlx[n] - xlx[best_left] - xlx[n - best_left]) / n
            gains[f] = best
            ratios[f] = best / split_info if split_info > 0 else 0.0
            thresholds[f] = 0.5 * (best_lo + best_hi)
            valid[f] = True
    return gains, ratios, thresholds, valid


@njit(cache=True)
def choose_split(gains, ratios, valid):
    """Highest gain ratio among valid splits whose gain reaches the average
    gain (less 1e-3). Lowest index wins ties; -1 when nothing qualifies."""
    total = 0.0
    count = 0
    for f in range(len(gains)):
        if valid[f]:
            total += gains[f]
            count += 1
    if count == 0:
        return -1
    avg = total / count
    best = -1
    best_ratio = 0.0
    for f in range(len(gains)):
        if valid[f] and gains[f] >= avg - 1e-3 and ratios[f] > best_ratio:
            best = f
            best_ratio = ratios[f]
    return best


@njit(cache=True)
def grow_tree(XT, order, y, min_leaf):
    """Grow an unpruned tree depth-first; children are numbered after parents.

    ``XT`` is the (features, rows) data matrix and ``order[f]`` sorts the rows
    by feature ``f``; ``order`` is overwritten. Returns ``(feature,
    threshold, left, right, counts)`` with ``-1`` marking leaves in
    ``feature``/``left``/``right``.
    """
    d, N = XT.shape
    xlx = np.zeros(N + 1)
    for k in range(1, N + 1):
        xlx[k] = k * np.log2(k)
    cap = 2 * N + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    counts = np.zeros((cap, 2), dtype=np.int64)
    # each node owns rows order[:, lo:hi] (same row set for every feature)
    lo = np.zeros(cap, dtype=np.int64)
    hi = np.zeros(cap, dtype=np.int64)
    goes_left = np.zeros(N, dtype=np.bool_)
    buf = np.empty(N, dtype=np.int64)
    stack = np.empty(cap, dtype=np.int64)
    n_nodes = 1
    hi[0] = N
    for r in range(N):
        counts[0, y[r]] += 1
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        n = counts[node, 0] + counts[node, 1]
        high = counts[node, 1]
        if high == 0 or high == n or n < 2 * min_leaf:
            continue
        s0 = lo[node]
        s1 = hi[node]
        gains, ratios, thresholds, valid = feature_splits(XT, y, order, s0, s1, high, min_leaf, xlx)
        for f in range(d):
            if gains[f] <= 0:
                valid[f] = False
        f = choose_split(gains, ratios, valid)
        if f < 0:
            continue
        thr = thresholds[f]
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        feature[node] = f
        threshold[node] = thr
        left[node] = lc
        right[node] = rc
        n_left = 0
        for k in range(s0, s1):
            r = order[0, k]
            goes_left[r] = XT[f, r] <= thr
            if goes_left[r]:
                n_left += 1
                counts[lc, y[r]] += 1
            else:
                counts[rc, y[r]] += 1
        # stable partition of every column keeps each half sorted
        for g in range(d):
            row = order[g]
            a = 0
            b = n_left
            for k in range(s0, s1):
                r = row[k]
                if goes_left[r]:
                    buf[a] = r
                    a += 1
                else:
                    buf[b] = r
                    b += 1
            for k in range(s1 - s0):
                row[s0 + k] = buf[k]
        lo[lc] = s0
        hi[lc] = s0 + n_left
        lo[rc] = s0 + n_left
        hi[rc] = s1
        stack[top] = rc
        top += 1
        stack[top] = lc
        top += 1
    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], counts[:n_nodes]


@njit(cache=True)
def _added_errors(n, e, cf, z):
    if e < 1:
        base = n * (1 - cf ** (1.0 / n))
        if e == 0:
            return base
        return base + e * (_added_errors(n, 1.0, cf, z) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * np.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


@njit(cache=True)
def prune_tree(feature, left, right, counts, cf, z):
    """Bottom-up subtree replacement on the pessimistic error estimate.

    Children always have larger indices than parents, so a reverse sweep
    visits every subtree before its root. Pruned nodes get ``feature = -1``.
    """
    m = len(feature)
    est = np.zeros(m)
    for node in range(m - 1, -1, -1):
        n = float(counts[node, 0] + counts[node, 1])
        e = n - max(counts[node, 0], counts[node, 1])
        as_leaf = e + _added_errors(n, e, cf, z) if n > 0 else 0.0
        if feature[node] < 0:
            est[node] = as_leaf
            continue
        subtree = est[left[node]] + est[right[node]]
        if as_leaf <= subtree + 0.1:
            feature[node] = -1
            est[node] = as_leaf
        else:
            est[node] = subtree
