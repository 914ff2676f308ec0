"""Exhaustive best-split search for squared-error regression trees.

Rows are presorted once per feature (``order``, shape (f, n)); a node is a
boolean membership mask. Both backends accumulate in sorted order and break
gain ties toward the first (feature, position), so they return the same split.
"""

from __future__ import annotations

import numpy as np

from .._accel import njit


def best_split_numpy(X, order, in_node, r, min_leaf):
    n_feat = X.shape[1]
    members = np.flatnonzero(in_node)
    m = members.shape[0]
    best = (-1, 0.0, 0.0)
    if m < 2 * min_leaf:
        return best
    tot = np.cumsum(r[members])[-1]
    base = tot * tot / m
    best_gain = 0.0
    sizes = np.arange(1, m, dtype=np.float64)  # left sizes for split after position j-1
    for f in range(n_feat):
        idx = order[f][in_node[order[f]]]
        xs = X[idx, f]
        cs = np.cumsum(r[idx])
        s = cs[:-1]
        gain = s * s / sizes + (tot - s) * (tot - s) / (m - sizes) - base
        ok = (xs[1:] > xs[:-1]) & (sizes >= min_leaf) & (m - sizes >= min_leaf)
        if not ok.any():
            continue
        gain = np.where(ok, gain, -np.inf)
        j = int(np.argmax(gain))
        if gain[j] > best_gain:
            best_gain = float(gain[j])
            lo, hi = xs[j], xs[j + 1]
            thr = (lo + hi) / 2.0
            if not thr < hi:
                thr = lo
            best = (f, float(thr), best_gain)
    return best


@njit(cache=True)
def _best_split_nb(X, order, in_node, r, min_leaf):
    n, n_feat = X.shape
    m = 0
    tot = 0.0
    for i in range(n):
        if in_node[i]:
            m += 1
            tot += r[i]
    best_f = -1
    best_thr = 0.0
    best_gain = 0.0
    if m < 2 * min_leaf:
        return best_f, best_thr, best_gain
    base = tot * tot / m
    for f in range(n_feat):
        cnt = 0
        s = 0.0
        prev_x = 0.0
        for p in range(n):
            i = order[f, p]
            if not in_node[i]:
                continue
            x = X[i, f]
            if cnt >= min_leaf and m - cnt >= min_leaf and x > prev_x:
                left = float(cnt)
                gain = s * s / left + (tot - s) * (tot - s) / (m - left) - base
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    thr = (prev_x + x) / 2.0
                    if not thr < x:
                        thr = prev_x
                    best_thr = thr
            cnt += 1
            s += r[i]
            prev_x = x
    return best_f, best_thr, best_gain


def best_split_numba(X, order, in_node, r, min_leaf):
    f, thr, gain = _best_split_nb(X, order, in_node, r, min_leaf)
    return int(f), float(thr), float(gain)


KERNELS = {"numpy": best_split_numpy, "numba": best_split_numba}
