"""Compare the numba and pure-numpy kernels on the two hot loops.

    python benchmarks/bench_kernels.py [--tokens N] [--rows N] [--repeat R]

Prints the best-of-R wall time per call and the speedup.  The numba numbers
exclude compilation (one warm-up call first).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from robotsem._accel import HAVE_NUMBA
from robotsem._lda_kernels import KERNELS as LDA
from robotsem.model._tree_kernels import KERNELS as TREE


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def gibbs_case(n_tokens, k=50, V=2000, D=500, seed=0):
    rng = np.random.default_rng(seed)
    words = rng.integers(0, V, n_tokens).astype(np.int64)
    docs = np.sort(rng.integers(0, D, n_tokens)).astype(np.int64)
    z = rng.integers(0, k, n_tokens).astype(np.int64)
    n_dk = np.zeros((D, k), dtype=np.int64)
    n_wk = np.zeros((V, k), dtype=np.int64)
    np.add.at(n_dk, (docs, z), 1)
    np.add.at(n_wk, (words, z), 1)
    u = rng.random(n_tokens)

    def run(backend):
        state = [a.copy() for a in (z, n_dk, n_wk)]
        nk = state[2].sum(axis=0)
        return lambda: LDA[backend][0](words, docs, state[0], state[1], state[2], nk, 1.0, 0.01, V * 0.01, u)

    return run


def split_case(n_rows, n_feat=18, seed=0):
    rng = np.random.default_rng(seed)
    X = np.round(rng.normal(size=(n_rows, n_feat)), 2)
    r = rng.normal(size=n_rows)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T).astype(np.int64)
    mask = np.ones(n_rows, dtype=bool)

    def run(backend):
        return lambda: TREE[backend](X, order, mask, r, 5)

    return run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--tokens", type=int, default=100_000, help="tokens per Gibbs sweep")
    ap.add_argument("--rows", type=int, default=5_000, help="rows per split search")
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args(argv)
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    cases = [(f"gibbs sweep ({a.tokens} tokens, k=50)", gibbs_case(a.tokens)),
             (f"split search ({a.rows} rows, 18 features)", split_case(a.rows))]
    print(f"{'kernel':<40}{'numpy s':>12}{'numba s':>12}{'speedup':>10}")
    for name, case in cases:
        case("numba")()  # compile
        t_np = best_of(case("numpy"), a.repeat)
        t_nb = best_of(case("numba"), a.repeat)
        print(f"{name:<40}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
