"""Hot inner loops over CSR adjacency and dense distance matrices.

Every kernel exists twice: an ``@njit`` loop version and a vectorised
numpy version with identical results.  The numba path is used when numba
imports and ``UAGPNM_DISABLE_NUMBA`` is unset (or "0"); the numpy path is
always importable for comparison (see ``benchmarks/bench_kernels.py``).

Distances are int32 with ``INF`` as the unreachable sentinel.  INF never
takes part in arithmetic: every sum is guarded or done in int64 and masked.
"""

from __future__ import annotations

import os

import numpy as np

INF = int(np.iinfo(np.int32).max)
DIST_DTYPE = np.int32

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("UAGPNM_DISABLE_NUMBA", "0").lower() in ("", "0", "false", "no")


def _njit(fn):
    if numba is None:  # pragma: no cover
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# multi-source BFS

@_njit
def _bfs_rows_nb(indptr, indices, sources, allowed, out):
    n = allowed.shape[0]
    queue = np.empty(n, dtype=np.int64)
    for i in range(sources.shape[0]):
        s = sources[i]
        row = out[i]
        if not allowed[s]:
            continue
        row[s] = 0
        head = 0
        tail = 1
        queue[0] = s
        while head < tail:
            x = queue[head]
            head += 1
            dx = row[x] + 1
            for p in range(indptr[x], indptr[x + 1]):
                y = indices[p]
                if allowed[y] and row[y] == INF:
                    row[y] = dx
                    queue[tail] = y
                    tail += 1


def _bfs_rows_np(indptr, indices, sources, allowed, out):
    for i, s in enumerate(sources):
        if not allowed[s]:
            continue
        row = out[i]
        row[s] = 0
        frontier = np.array([s], dtype=np.int64)
        depth = 0
        while frontier.size:
            depth += 1
            starts = indptr[frontier]
            lens = indptr[frontier + 1] - starts
            total = int(lens.sum())
            if total == 0:
                break
            offs = np.repeat(starts - np.cumsum(lens) + lens, lens) + np.arange(total)
            nxt = indices[offs]
            nxt = np.unique(nxt[allowed[nxt] & (row[nxt] == INF)])
            row[nxt] = depth
            frontier = nxt


# ---------------------------------------------------------------------------
# edge insertion: d'(a,b) = min(d(a,b), d(a,u) + 1 + d(v,b))

@_njit
def _insert_scan_nb(D, u, v, row_flag, col_flag):
    n = D.shape[0]
    count = 0
    for a in range(n):
        du = D[a, u]
        if du == INF:
            continue
        base = du + 1
        for b in range(n):
            dv = D[v, b]
            if dv == INF:
                continue
            if base + dv < D[a, b]:
                row_flag[a] = True
                col_flag[b] = True
                count += 1
    return count


def _insert_scan_np(D, u, v, row_flag, col_flag):
    rows = np.flatnonzero(D[:, u] != INF)
    cols = np.flatnonzero(D[v, :] != INF)
    if rows.size == 0 or cols.size == 0:
        return 0
    cand = D[rows, u].astype(np.int64)[:, None] + 1 + D[v, cols].astype(np.int64)[None, :]
    better = cand < D[np.ix_(rows, cols)]
    row_flag[rows[better.any(axis=1)]] = True
    col_flag[cols[better.any(axis=0)]] = True
    return int(better.sum())


@_njit
def _insert_apply_nb(D, u, v):
    n = D.shape[0]
    col_u = D[:, u].copy()
    row_v = D[v, :].copy()
    count = 0
    for a in range(n):
        if col_u[a] == INF:
            continue
        base = col_u[a] + 1
        for b in range(n):
            if row_v[b] != INF and base + row_v[b] < D[a, b]:
                count += 1
    src = np.empty(count, dtype=np.int64)
    dst = np.empty(count, dtype=np.int64)
    before = np.empty(count, dtype=np.int64)
    after = np.empty(count, dtype=np.int64)
    k = 0
    for a in range(n):
        if col_u[a] == INF:
            continue
        base = col_u[a] + 1
        for b in range(n):
            if row_v[b] != INF:
                cand = base + row_v[b]
                if cand < D[a, b]:
                    src[k] = a
                    dst[k] = b
                    before[k] = D[a, b]
                    after[k] = cand
                    D[a, b] = cand
                    k += 1
    return src, dst, before, after


def _insert_apply_np(D, u, v):
    rows = np.flatnonzero(D[:, u] != INF)
    cols = np.flatnonzero(D[v, :] != INF)
    empty = np.empty(0, dtype=np.int64)
    if rows.size == 0 or cols.size == 0:
        return empty, empty, empty, empty
    cand = D[rows, u].astype(np.int64)[:, None] + 1 + D[v, cols].astype(np.int64)[None, :]
    block = D[np.ix_(rows, cols)]
    ri, ci = np.nonzero(cand < block)
    src, dst = rows[ri], cols[ci]
    before = block[ri, ci].astype(np.int64)
    after = cand[ri, ci]
    D[src, dst] = after
    return src, dst, before, after


# ---------------------------------------------------------------------------
# edge deletion: sources whose distance to v depends on the edge (u, v)

@_njit
def _delete_sources_nb(D, u, v, others):
    n = D.shape[0]
    flag = np.zeros(n, dtype=np.bool_)
    for a in range(n):
        du = D[a, u]
        if du == INF or du + 1 != D[a, v]:
            continue
        want = D[a, v] - 1
        alt = False
        for i in range(others.shape[0]):
            if D[a, others[i]] == want:
                alt = True
                break
        if not alt:
            flag[a] = True
    return flag


def _delete_sources_np(D, u, v, others):
    du = D[:, u].astype(np.int64)
    dv = D[:, v].astype(np.int64)
    flag = (du != INF) & (du + 1 == dv)
    if others.size and flag.any():
        idx = np.flatnonzero(flag)
        alt = (D[np.ix_(idx, others)] == (dv[idx] - 1)[:, None]).any(axis=1)
        flag[idx[alt]] = False
    return flag


# ---------------------------------------------------------------------------
# min-plus composition: D[r, c] = min(D[r, c], W[r, m] + D[mids[m], c])

@_njit
def _minplus_nb(D, rows, W, mids, cols):
    # returns the number of cells that improved
    changed = 0
    hit = np.zeros(cols.shape[0], dtype=np.bool_)
    for i in range(rows.shape[0]):
        r = rows[i]
        hit[:] = False
        for m in range(mids.shape[0]):
            w = W[i, m]
            if w == INF:
                continue
            mrow = mids[m]
            for j in range(cols.shape[0]):
                c = cols[j]
                d = D[mrow, c]
                if d != INF and w + d < D[r, c]:
                    D[r, c] = w + d
                    hit[j] = True
        for j in range(cols.shape[0]):
            if hit[j]:
                changed += 1
    return changed


def _minplus_np(D, rows, W, mids, cols):
    if rows.size == 0 or mids.size == 0 or cols.size == 0:
        return 0
    right = D[np.ix_(mids, cols)].astype(np.int64)
    right[right == INF] = 2 * INF
    changed = 0
    chunk = max(1, 4_000_000 // max(1, mids.size * cols.size))
    for lo in range(0, rows.size, chunk):
        w = W[lo:lo + chunk].astype(np.int64)
        w[w == INF] = 2 * INF
        best = (w[:, :, None] + right[None, :, :]).min(axis=1)
        cur = D[np.ix_(rows[lo:lo + chunk], cols)]
        better = best < cur
        changed += int(better.sum())
        D[np.ix_(rows[lo:lo + chunk], cols)] = np.where(better, best, cur)
    return changed


NUMBA_KERNELS = {
    "bfs_rows": _bfs_rows_nb,
    "insert_scan": _insert_scan_nb,
    "insert_apply": _insert_apply_nb,
    "delete_sources": _delete_sources_nb,
    "minplus": _minplus_nb,
}
NUMPY_KERNELS = {
    "bfs_rows": _bfs_rows_np,
    "insert_scan": _insert_scan_np,
    "insert_apply": _insert_apply_np,
    "delete_sources": _delete_sources_np,
    "minplus": _minplus_np,
}
ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS

bfs_rows = ACTIVE["bfs_rows"]
insert_scan = ACTIVE["insert_scan"]
insert_apply = ACTIVE["insert_apply"]
delete_sources = ACTIVE["delete_sources"]
minplus = ACTIVE["minplus"]


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
