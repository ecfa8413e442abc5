"""Time the numba kernels against their numpy twins on one synthetic graph.

Both versions are called on identical inputs, their outputs compared, and
the median wall time per call printed.  The first numba call of each
kernel (compilation) is excluded.

    python3 benchmarks/bench_kernels.py --nodes 1000 --edges 25000
"""

import argparse
import statistics
import time

import numpy as np

from uagpnm import kernels
from uagpnm.bench import synthetic_graph
from uagpnm.distance import apsp_baseline


def _time(fn, reps):
    out = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return statistics.median(out)


def cases(graph, D, rng):
    indptr, indices = graph.csr()
    n = graph.capacity
    allowed = graph.alive_mask()
    sources = np.arange(n, dtype=np.int64)
    u, v = (int(x) for x in rng.choice(n, 2, replace=False))
    a, b = next(iter(graph.edges()))
    others = np.array([w for w in graph.pred[b] if w != a], dtype=np.int64)
    rows = rng.choice(n, n // 4, replace=False).astype(np.int64)
    mids = rng.choice(n, n // 8, replace=False).astype(np.int64)
    cols = np.arange(n, dtype=np.int64)
    W = D[np.ix_(rows, mids)].copy()

    def bfs(impl):
        out = np.full((n, n), kernels.INF, dtype=kernels.DIST_DTYPE)
        impl["bfs_rows"](indptr, indices, sources, allowed, out)
        return out

    def scan(impl):
        rf, cf = np.zeros(n, np.bool_), np.zeros(n, np.bool_)
        impl["insert_scan"](D, u, v, rf, cf)
        return rf, cf

    def apply(impl):
        M = D.copy()
        impl["insert_apply"](M, u, v)
        return M

    def dsrc(impl):
        return impl["delete_sources"](D, a, b, others)

    def mp(impl):
        M = D.copy()
        impl["minplus"](M, rows, W, mids, cols)
        return M

    return {"bfs_rows": bfs, "insert_scan": scan, "insert_apply": apply,
            "delete_sources": dsrc, "minplus": mp}


def _same(x, y):
    if isinstance(x, tuple):
        return all(np.array_equal(p, q) for p, q in zip(x, y))
    return np.array_equal(x, y)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=int, default=1000)
    p.add_argument("--edges", type=int, default=25000)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    graph = synthetic_graph(args.nodes, args.edges, 8, args.seed)
    D = apsp_baseline(graph).values
    rng = np.random.default_rng(args.seed)
    print(f"graph: {args.nodes} nodes, {args.edges} edges; active backend: {kernels.backend()}")
    print(f"{'kernel':<16}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}  equal")
    for name, run in cases(graph, D, rng).items():
        ref = run(kernels.NUMPY_KERNELS)
        got = run(kernels.NUMBA_KERNELS)  # compiles
        t_np = _time(lambda: run(kernels.NUMPY_KERNELS), args.reps)
        t_nb = _time(lambda: run(kernels.NUMBA_KERNELS), args.reps)
        print(f"{name:<16}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>10.1f}  {_same(ref, got)}")


if __name__ == "__main__":
    main()
