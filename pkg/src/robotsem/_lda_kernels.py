"""Collapsed Gibbs sampling kernels.

Both backends consume the same pre-drawn uniforms and evaluate the conditional
in the same order, so they produce identical assignments for a given seed.
Count layout: ``n_dk`` is (D, k), ``n_wk`` is (V, k), ``n_k`` is (k,).
"""

from __future__ import annotations

import numpy as np

from ._accel import njit


def gibbs_sweep_numpy(words, docs, z, n_dk, n_wk, n_k, alpha, beta, vbeta, uniforms):
    k = n_k.shape[0]
    for i in range(words.shape[0]):
        w = words[i]
        d = docs[i]
        t = z[i]
        n_dk[d, t] -= 1
        n_wk[w, t] -= 1
        n_k[t] -= 1
        p = (n_dk[d] + alpha) * (n_wk[w] + beta) / (n_k + vbeta)
        cum = np.cumsum(p)
        t = int(np.searchsorted(cum, uniforms[i] * cum[k - 1], side="right"))
        if t >= k:
            t = k - 1
        z[i] = t
        n_dk[d, t] += 1
        n_wk[w, t] += 1
        n_k[t] += 1


@njit(cache=True)
def gibbs_sweep_numba(words, docs, z, n_dk, n_wk, n_k, alpha, beta, vbeta, uniforms):
    k = n_k.shape[0]
    cum = np.empty(k, dtype=np.float64)
    for i in range(words.shape[0]):
        w = words[i]
        d = docs[i]
        t = z[i]
        n_dk[d, t] -= 1
        n_wk[w, t] -= 1
        n_k[t] -= 1
        acc = 0.0
        for j in range(k):
            acc += (n_dk[d, j] + alpha) * (n_wk[w, j] + beta) / (n_k[j] + vbeta)
            cum[j] = acc
        u = uniforms[i] * cum[k - 1]
        t = k - 1
        for j in range(k):
            if cum[j] > u:
                t = j
                break
        z[i] = t
        n_dk[d, t] += 1
        n_wk[w, t] += 1
        n_k[t] += 1


def fold_in_numpy(words, z, n_k_doc, phi, alpha, uniforms, iterations, burn_in):
    """Resample one document's assignments against a fixed ``phi`` (V, k).

    Returns the mean of the per-sweep smoothed θ after ``burn_in`` sweeps.
    """
    k = phi.shape[1]
    n = words.shape[0]
    theta_sum = np.zeros(k)
    kept = 0
    pos = 0
    for it in range(iterations):
        for i in range(n):
            w = words[i]
            t = z[i]
            n_k_doc[t] -= 1
            p = (n_k_doc + alpha) * phi[w]
            cum = np.cumsum(p)
            t = int(np.searchsorted(cum, uniforms[pos] * cum[k - 1], side="right"))
            pos += 1
            if t >= k:
                t = k - 1
            z[i] = t
            n_k_doc[t] += 1
        if it >= burn_in:
            theta_sum += (n_k_doc + alpha) / (n + k * alpha)
            kept += 1
    return theta_sum / kept


@njit(cache=True)
def fold_in_numba(words, z, n_k_doc, phi, alpha, uniforms, iterations, burn_in):
    k = phi.shape[1]
    n = words.shape[0]
    theta_sum = np.zeros(k)
    cum = np.empty(k, dtype=np.float64)
    kept = 0
    pos = 0
    for it in range(iterations):
        for i in range(n):
            w = words[i]
            t = z[i]
            n_k_doc[t] -= 1
            acc = 0.0
            for j in range(k):
                acc += (n_k_doc[j] + alpha) * phi[w, j]
                cum[j] = acc
            u = uniforms[pos] * cum[k - 1]
            pos += 1
            t = k - 1
            for j in range(k):
                if cum[j] > u:
                    t = j
                    break
            z[i] = t
            n_k_doc[t] += 1
        if it >= burn_in:
            for j in range(k):
                theta_sum[j] += (n_k_doc[j] + alpha) / (n + k * alpha)
            kept += 1
    return theta_sum / kept


KERNELS = {
    "numpy": (gibbs_sweep_numpy, fold_in_numpy),
    "numba": (gibbs_sweep_numba, fold_in_numba),
}
