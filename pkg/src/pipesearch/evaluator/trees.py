"""Decision-tree kernels: CART with Gini impurity for classification and
variance reduction for regression, compiled with numba.

All randomness (bootstrap rows, per-node feature subsets) flows from a
64-bit LCG seeded by the caller, so tree construction is deterministic
for a given seed regardless of process or thread.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "build_classification_tree", "build_regression_tree",
    "tree_apply", "tree_leaf_counts", "bootstrap_indices",
]

_LCG_MUL = np.uint64(6364136223846793005)
_LCG_ADD = np.uint64(1442695040888963407)


@njit(cache=True)
def _lcg_next(state):
    return state * _LCG_MUL + _LCG_ADD


@njit(cache=True)
def _lcg_below(state, bound):
    """(value in [0, bound), next state)"""
    state = _lcg_next(state)
    return np.int64((state >> np.uint64(11)) % np.uint64(bound)), state


@njit(cache=True)
def bootstrap_indices(n, seed):
    state = np.uint64(seed) * _LCG_MUL + _LCG_ADD
    out = np.empty(n, np.int64)
    for i in range(n):
        value, state = _lcg_below(state, n)
        out[i] = value
    return out


@njit(cache=True)
def _gini(counts, total):
    if total <= 0.0:
        return 0.0
    acc = 0.0
    for c in counts:
        frac = c / total
        acc += frac * frac
    return 1.0 - acc


@njit(cache=True)
def build_classification_tree(X, y, n_classes, max_depth, min_samples_split,
                              max_features, seed):
    """Grow a CART classification tree. Returns (feature, threshold, left,
    right, leaf class counts, node_count). feature == -1 marks a leaf."""
    n, p = X.shape
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    counts = np.zeros((max_nodes, n_classes), np.float64)

    order = np.arange(n)
    stack = np.zeros((max_nodes, 4), np.int64)   # node, start, end, depth
    stack[0, 0], stack[0, 1], stack[0, 2], stack[0, 3] = 0, 0, n, 0
    top = 1
    node_count = 1
    state = np.uint64(seed) * _LCG_MUL + _LCG_ADD
    feature_pool = np.arange(p)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        span = end - start

        node_counts = counts[node]
        for i in range(start, end):
            node_counts[y[order[i]]] += 1.0

        parent_gini = _gini(node_counts, float(span))
        is_pure = parent_gini <= 0.0
        if span < min_samples_split or depth >= max_depth or is_pure:
            continue

        # partial Fisher-Yates to pick max_features candidate features
        k = max_features if max_features < p else p
        for i in range(k):
            j, state = _lcg_below(state, p - i)
            tmp = feature_pool[i + j]
            feature_pool[i + j] = feature_pool[i]
            feature_pool[i] = tmp

        best_gain = 0.0
        best_feature = -1
        best_threshold = 0.0
        left_counts = np.zeros(n_classes, np.float64)

        for fi in range(k):
            f = feature_pool[fi]
            col = np.empty(span, np.float64)
            for i in range(span):
                col[i] = X[order[start + i], f]
            sorted_local = np.argsort(col, kind="mergesort")

            for c in range(n_classes):
                left_counts[c] = 0.0
            n_left = 0.0
            for pos in range(span - 1):
                row = order[start + sorted_local[pos]]
                left_counts[y[row]] += 1.0
                n_left += 1.0
                v = col[sorted_local[pos]]
                v_next = col[sorted_local[pos + 1]]
                if v_next <= v:
                    continue
                n_right = span - n_left
                gini_l = _gini(left_counts, n_left)
                right_counts_total = 0.0
                gini_r_acc = 0.0
                for c in range(n_classes):
                    rc = node_counts[c] - left_counts[c]
                    right_counts_total += rc
                    frac = rc / n_right
                    gini_r_acc += frac * frac
                gini_r = 1.0 - gini_r_acc
                weighted = (n_left * gini_l + n_right * gini_r) / span
                gain = parent_gini - weighted
                if gain > best_gain + 1e-12:
                    best_gain = gain
                    best_feature = f
                    best_threshold = 0.5 * (v + v_next)

        if best_feature < 0:
            continue

        # partition order[start:end] by the chosen split
        buf = np.empty(span, np.int64)
        n_left_rows = 0
        for i in range(start, end):
            if X[order[i], best_feature] <= best_threshold:
                buf[n_left_rows] = order[i]
                n_left_rows += 1
        n_right_rows = n_left_rows
        for i in range(start, end):
            if X[order[i], best_feature] > best_threshold:
                buf[n_right_rows] = order[i]
                n_right_rows += 1
        for i in range(span):
            order[start + i] = buf[i]

        if n_left_rows == 0 or n_left_rows == span:
            continue  # degenerate split, keep as leaf

        feature[node] = best_feature
        threshold[node] = best_threshold
        left_id = node_count
        right_id = node_count + 1
        node_count += 2
        left[node] = left_id
        right[node] = right_id
        stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3] = (
            left_id, start, start + n_left_rows, depth + 1)
        top += 1
        stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3] = (
            right_id, start + n_left_rows, end, depth + 1)
        top += 1

    return feature, threshold, left, right, counts, node_count


@njit(cache=True)
def build_regression_tree(X, g, max_depth, min_samples_split, max_features, seed):
    """Grow a variance-reduction regression tree over targets g. Returns
    (feature, threshold, left, right, leaf means, node_count)."""
    n, p = X.shape
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes, np.float64)

    order = np.arange(n)
    stack = np.zeros((max_nodes, 4), np.int64)
    stack[0, 0], stack[0, 1], stack[0, 2], stack[0, 3] = 0, 0, n, 0
    top = 1
    node_count = 1
    state = np.uint64(seed) * _LCG_MUL + _LCG_ADD
    feature_pool = np.arange(p)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        span = end - start

        total = 0.0
        total_sq = 0.0
        for i in range(start, end):
            gv = g[order[i]]
            total += gv
            total_sq += gv * gv
        value[node] = total / span
        parent_sse = total_sq - total * total / span

        if span < min_samples_split or depth >= max_depth or parent_sse <= 1e-12:
            continue

        k = max_features if max_features < p else p
        for i in range(k):
            j, state = _lcg_below(state, p - i)
            tmp = feature_pool[i + j]
            feature_pool[i + j] = feature_pool[i]
            feature_pool[i] = tmp

        best_gain = 1e-10
        best_feature = -1
        best_threshold = 0.0

        for fi in range(k):
            f = feature_pool[fi]
            col = np.empty(span, np.float64)
            for i in range(span):
                col[i] = X[order[start + i], f]
            sorted_local = np.argsort(col, kind="mergesort")

            sum_left = 0.0
            sumsq_left = 0.0
            n_left = 0.0
            for pos in range(span - 1):
                gv = g[order[start + sorted_local[pos]]]
                sum_left += gv
                sumsq_left += gv * gv
                n_left += 1.0
                v = col[sorted_local[pos]]
                v_next = col[sorted_local[pos + 1]]
                if v_next <= v:
                    continue
                n_right = span - n_left
                sum_right = total - sum_left
                sumsq_right = total_sq - sumsq_left
                sse = (sumsq_left - sum_left * sum_left / n_left
                       + sumsq_right - sum_right * sum_right / n_right)
                gain = parent_sse - sse
                if gain > best_gain:
                    best_gain = gain
                    best_feature = f
                    best_threshold = 0.5 * (v + v_next)

        if best_feature < 0:
            continue

        buf = np.empty(span, np.int64)
        n_left_rows = 0
        for i in range(start, end):
            if X[order[i], best_feature] <= best_threshold:
                buf[n_left_rows] = order[i]
                n_left_rows += 1
        n_right_rows = n_left_rows
        for i in range(start, end):
            if X[order[i], best_feature] > best_threshold:
                buf[n_right_rows] = order[i]
                n_right_rows += 1
        for i in range(span):
            order[start + i] = buf[i]

        if n_left_rows == 0 or n_left_rows == span:
            continue

        feature[node] = best_feature
        threshold[node] = best_threshold
        left_id = node_count
        right_id = node_count + 1
        node_count += 2
        left[node] = left_id
        right[node] = right_id
        stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3] = (
            left_id, start, start + n_left_rows, depth + 1)
        top += 1
        stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3] = (
            right_id, start + n_left_rows, end, depth + 1)
        top += 1

    return feature, threshold, left, right, value, node_count


@njit(cache=True)
def tree_apply(feature, threshold, left, right, X):
    """Leaf node index for every row of X."""
    n = X.shape[0]
    out = np.empty(n, np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@njit(cache=True)
def tree_leaf_counts(feature, threshold, left, right, counts, X):
    """Per-row leaf class-count vectors (unnormalized)."""
    n = X.shape[0]
    k = counts.shape[1]
    out = np.zeros((n, k), np.float64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        for c in range(k):
            out[i, c] = counts[node, c]
    return out
