"""Hop-count shortest path matrices: full APSP, label-partitioned APSP and
incremental maintenance under single data-graph updates."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import kernels
from .errors import ContractError, ParseError
from .graph import DataGraph, Kind, Update, apply_update
from .kernels import DIST_DTYPE, INF

__all__ = [
    "INF", "DistanceMatrix", "DistanceChange", "DistanceDelta", "HybridMatrix",
    "Partition", "PartitionSet", "dijkstra_sssp", "apsp_baseline", "partition_by_label",
    "intra_partition_apsp", "inter_partition_apsp", "partitioned_apsp",
    "update_distances", "apply_data_update", "isolated_affected",
]


class DistanceMatrix:
    """Dense ``n x n`` int32 matrix indexed by node id; ``INF`` = unreachable.

    Slots of ids that are not live nodes hold INF everywhere, including the
    diagonal.
    """

    __slots__ = ("values",)

    def __init__(self, values):
        self.values = np.ascontiguousarray(values, dtype=DIST_DTYPE)

    @classmethod
    def unreachable(cls, n: int) -> "DistanceMatrix":
        return cls(np.full((n, n), INF, dtype=DIST_DTYPE))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, key):
        a, b = key
        return int(self.values[a, b])

    def copy(self) -> "DistanceMatrix":
        return DistanceMatrix(self.values.copy())

    def grown(self, n: int) -> "DistanceMatrix":
        if n <= self.n:
            return self
        out = np.full((n, n), INF, dtype=DIST_DTYPE)
        out[: self.n, : self.n] = self.values
        return DistanceMatrix(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DistanceMatrix):
            return NotImplemented
        return self.values.shape == other.values.shape and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"DistanceMatrix(n={self.n})"

    def to_csv(self, names: Sequence[str] | None = None, nodes: Sequence[int] | None = None) -> str:
        """Render as CSV with an id/name header row; INF is written ``INF``."""
        nodes = list(range(self.n)) if nodes is None else list(nodes)
        names = [str(x) for x in nodes] if names is None else list(names)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([""] + names)
        for name, a in zip(names, nodes):
            w.writerow([name] + ["INF" if self.values[a, b] == INF else int(self.values[a, b]) for b in nodes])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> tuple["DistanceMatrix", list[str]]:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            return cls.unreachable(0), []
        names = rows[0][1:]
        n = len(names)
        out = np.full((n, n), INF, dtype=DIST_DTYPE)
        for i, row in enumerate(rows[1:]):
            if len(row) != n + 1 or row[0] != names[i]:
                raise ParseError("distance CSV row does not match header", i + 2)
            for j, cell in enumerate(row[1:]):
                cell = cell.strip()
                if cell not in ("INF", "∞"):
                    try:
                        out[i, j] = int(cell)
                    except ValueError:
                        raise ParseError(f"bad distance {cell!r}", i + 2) from None
        if len(rows) - 1 != n:
            raise ParseError("distance CSV is not square")
        return cls(out), names

    def compress(self) -> "HybridMatrix":
        return HybridMatrix.from_dense(self.values)


class HybridMatrix:
    """ELL + COO storage of the finite entries of a sparse distance matrix.

    Each row keeps up to ``width`` finite entries in fixed-width arrays; the
    overflow of longer rows goes to a coordinate list.  Lookups of absent
    entries return INF.
    """

    def __init__(self, n, ell_cols, ell_vals, coo_rows, coo_cols, coo_vals):
        self.n = n
        self.ell_cols = ell_cols
        self.ell_vals = ell_vals
        self._coo = {(int(r), int(c)): int(v) for r, c, v in zip(coo_rows, coo_cols, coo_vals)}

    @classmethod
    def from_dense(cls, values: np.ndarray, width: int | None = None) -> "HybridMatrix":
        n = values.shape[0]
        finite = values != INF
        per_row = finite.sum(axis=1)
        if width is None:
            width = int(np.percentile(per_row, 90)) if n else 0
        ell_cols = np.full((n, width), -1, dtype=np.int64)
        ell_vals = np.full((n, width), INF, dtype=DIST_DTYPE)
        coo_r, coo_c, coo_v = [], [], []
        for a in range(n):
            cols = np.flatnonzero(finite[a])
            head, tail = cols[:width], cols[width:]
            ell_cols[a, : head.size] = head
            ell_vals[a, : head.size] = values[a, head]
            coo_r.extend([a] * tail.size)
            coo_c.extend(tail.tolist())
            coo_v.extend(values[a, tail].tolist())
        return cls(n, ell_cols, ell_vals, coo_r, coo_c, coo_v)

    def __getitem__(self, key) -> int:
        a, b = key
        hit = np.flatnonzero(self.ell_cols[a] == b)
        if hit.size:
            return int(self.ell_vals[a, hit[0]])
        return self._coo.get((a, b), INF)

    def to_dense(self) -> DistanceMatrix:
        out = np.full((self.n, self.n), INF, dtype=DIST_DTYPE)
        for a in range(self.n):
            keep = self.ell_cols[a] >= 0
            out[a, self.ell_cols[a, keep]] = self.ell_vals[a, keep]
        for (a, b), v in self._coo.items():
            out[a, b] = v
        return DistanceMatrix(out)

    @property
    def nbytes(self) -> int:
        return self.ell_cols.nbytes + self.ell_vals.nbytes + 3 * 8 * len(self._coo)


@dataclass(frozen=True)
class DistanceChange:
    source: int
    target: int
    before: int
    after: int

    def __post_init__(self):
        if self.before == self.after:
            raise ValueError("a distance change needs before != after")


@dataclass
class DistanceDelta:
    """Changed pairs of one update, as parallel arrays.

    Pairs touching a deleted node are not changes (the pair no longer
    exists); the node itself is listed in ``removed`` and new nodes in
    ``added``.
    """

    src: np.ndarray
    dst: np.ndarray
    before: np.ndarray
    after: np.ndarray
    added: frozenset[int] = frozenset()
    removed: frozenset[int] = frozenset()

    @classmethod
    def empty(cls, added=(), removed=()) -> "DistanceDelta":
        e = np.empty(0, dtype=np.int64)
        return cls(e, e, e, e, frozenset(added), frozenset(removed))

    def __len__(self) -> int:
        return int(self.src.size)

    def changes(self) -> set[DistanceChange]:
        return {DistanceChange(int(a), int(b), int(x), int(y))
                for a, b, x, y in zip(self.src, self.dst, self.before, self.after)}

    def sources(self) -> set[int]:
        return set(np.unique(self.src).tolist())

    def nodes(self) -> set[int]:
        """Endpoints of every changed pair plus added/removed nodes."""
        out = set(np.unique(np.concatenate([self.src, self.dst])).tolist())
        return out | self.added | self.removed


# ---------------------------------------------------------------------------
# from-scratch computation

def _bfs_block(graph: DataGraph, sources: np.ndarray, allowed: np.ndarray | None = None) -> np.ndarray:
    indptr, indices = graph.csr()
    if allowed is None:
        allowed = graph.alive_mask()
    out = np.full((sources.size, graph.capacity), INF, dtype=DIST_DTYPE)
    kernels.bfs_rows(indptr, indices, sources.astype(np.int64), allowed, out)
    return out


def dijkstra_sssp(graph: DataGraph, source: int) -> dict[int, int]:
    """Single-source hop distances (unit weights, so BFS order is Dijkstra order)."""
    if source not in graph:
        raise ContractError(f"unknown source node {source}")
    row = _bfs_block(graph, np.array([source]))[0]
    return {node: int(row[node]) for node in graph.nodes}


def apsp_baseline(graph: DataGraph) -> DistanceMatrix:
    n = graph.capacity
    out = np.full((n, n), INF, dtype=DIST_DTYPE)
    live = np.fromiter(sorted(graph.nodes), dtype=np.int64, count=len(graph))
    if live.size:
        out[live] = _bfs_block(graph, live)
    return DistanceMatrix(out)


# ---------------------------------------------------------------------------
# label partitions

@dataclass
class Partition:
    label: str
    members: frozenset[int]
    internal_edges: list[tuple[int, int]] = field(default_factory=list)
    cross_edges: list[tuple[int, int]] = field(default_factory=list)
    inner_bridges: frozenset[int] = frozenset()
    outer_bridges: frozenset[int] = frozenset()


@dataclass
class PartitionSet:
    partitions: dict[str, Partition]
    part_of: dict[int, str]

    def __getitem__(self, label: str) -> Partition:
        return self.partitions[label]

    def __len__(self) -> int:
        return len(self.partitions)

    def combined_groups(self) -> list[list[str]]:
        """Partitions merged by following outer-bridge chains back to their start.

        Two partitions end up in one group exactly when each reaches the
        other through cross-partition edges, i.e. the strongly connected
        components of the partition graph.  Groups are returned in
        topological order of the condensed partition graph.
        """
        labels = sorted(self.partitions)
        index = {lab: i for i, lab in enumerate(labels)}
        k = len(labels)
        if k == 0:
            return []
        rows, cols = [], []
        for lab, part in self.partitions.items():
            for lab2 in {self.part_of[w] for w in part.outer_bridges}:
                rows.append(index[lab])
                cols.append(index[lab2])
        adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(k, k))
        n_comp, comp = connected_components(adj, directed=True, connection="strong")
        succ = [set() for _ in range(n_comp)]
        indeg = [0] * n_comp
        for r, c in zip(rows, cols):
            a, b = comp[r], comp[c]
            if a != b and b not in succ[a]:
                succ[a].add(b)
                indeg[b] += 1
        ready = sorted(i for i in range(n_comp) if indeg[i] == 0)
        order = []
        while ready:
            a = ready.pop(0)
            order.append(a)
            for b in sorted(succ[a]):
                indeg[b] -= 1
                if indeg[b] == 0:
                    ready.append(b)
        members = [[] for _ in range(n_comp)]
        for lab in labels:
            members[comp[index[lab]]].append(lab)
        return [members[c] for c in order]


def partition_by_label(graph: DataGraph) -> PartitionSet:
    """Group nodes by label; multi-label nodes go to their smallest label."""
    part_of = {node: min(labs) for node, labs in graph.labels.items()}
    members: dict[str, set[int]] = {}
    for node, lab in part_of.items():
        members.setdefault(lab, set()).add(node)
    parts = {lab: Partition(lab, frozenset(ms)) for lab, ms in members.items()}
    inner: dict[str, set[int]] = {lab: set() for lab in parts}
    outer: dict[str, set[int]] = {lab: set() for lab in parts}
    for u, v in graph.edges():
        pu, pv = part_of[u], part_of[v]
        if pu == pv:
            parts[pu].internal_edges.append((u, v))
        else:
            parts[pu].cross_edges.append((u, v))
            inner[pu].add(u)
            outer[pu].add(v)
    for lab, part in parts.items():
        part.inner_bridges = frozenset(inner[lab])
        part.outer_bridges = frozenset(outer[lab])
    return PartitionSet(parts, part_of)


def _group_nodes(parts: PartitionSet, group: list[str]) -> np.ndarray:
    nodes = sorted(set().union(*(parts[lab].members for lab in group)))
    return np.asarray(nodes, dtype=np.int64)


def intra_partition_apsp(graph: DataGraph, parts: PartitionSet) -> DistanceMatrix:
    """Distances between nodes that share a (combined) partition.

    A partition without outer bridge nodes is searched on its own.  Otherwise
    it is combined with every partition its outer bridges lead to that leads
    back to it, and the search runs inside the combined node set; paths that
    leave and re-enter a partition can only pass through such partitions.
    Pairs in different groups are left at INF.
    """
    n = graph.capacity
    out = np.full((n, n), INF, dtype=DIST_DTYPE)
    for group in parts.combined_groups():
        nodes = _group_nodes(parts, group)
        allowed = np.zeros(n, dtype=np.bool_)
        allowed[nodes] = True
        block = _bfs_block(graph, nodes, allowed)
        out[nodes] = np.where(allowed[None, :], block, INF)
    return DistanceMatrix(out)


def inter_partition_apsp(graph: DataGraph, parts: PartitionSet, intra: DistanceMatrix) -> DistanceMatrix:
    """Compose intra-partition distances across bridge edges.

    Each bridge edge (x, z) contributes ``d(a, x) + 1 + d(z, y)``.  Groups are
    visited in topological order of the condensed partition graph, so the
    distances into every bridge source are final before they are composed;
    one sweep reaches the fixpoint.
    """
    D = intra.values.copy()
    for part in parts.partitions.values():
        for x, z in part.cross_edges:
            D[x, z] = min(D[x, z], 1)
    groups = parts.combined_groups()
    live = np.fromiter(sorted(graph.nodes), dtype=np.int64, count=len(graph))
    for group in groups:
        nodes = _group_nodes(parts, group)
        inside = set(nodes.tolist())
        entries: dict[int, list[int]] = {}
        for lab, part in parts.partitions.items():
            if lab in group:
                continue
            for x, z in part.cross_edges:
                if z in inside:
                    entries.setdefault(z, []).append(x)
        if not entries:
            continue
        mids = np.asarray(sorted(entries), dtype=np.int64)
        rows = live[~np.isin(live, nodes)]
        W = np.full((rows.size, mids.size), INF, dtype=np.int64)
        for j, z in enumerate(mids):
            best = D[np.ix_(rows, np.asarray(entries[int(z)]))].min(axis=1).astype(np.int64)
            W[:, j] = np.where(best == INF, INF, best + 1)
        keep = (W != INF).any(axis=1)
        kernels.minplus(D, rows[keep], np.ascontiguousarray(W[keep]), mids, nodes)
    return DistanceMatrix(D)


def partitioned_apsp(graph: DataGraph) -> DistanceMatrix:
    parts = partition_by_label(graph)
    return inter_partition_apsp(graph, parts, intra_partition_apsp(graph, parts))


# ---------------------------------------------------------------------------
# incremental maintenance

def _recompute_rows(D: np.ndarray, graph: DataGraph, sources: np.ndarray) -> DistanceDelta:
    if sources.size == 0:
        return DistanceDelta.empty()
    alive = graph.alive_mask()
    fresh = _bfs_block(graph, sources, alive)
    old = D[sources]
    diff = (fresh != old) & alive[None, :]
    ri, ci = np.nonzero(diff)
    delta = DistanceDelta(sources[ri].astype(np.int64), ci.astype(np.int64),
                          old[ri, ci].astype(np.int64), fresh[ri, ci].astype(np.int64))
    D[sources] = np.where(alive[None, :], fresh, D[sources])
    return delta


def _pred_array(graph: DataGraph, node: int) -> np.ndarray:
    return np.fromiter(graph.pred.get(node, ()), dtype=np.int64)


def apply_data_update(D: DistanceMatrix, graph: DataGraph, update: Update) -> tuple[DistanceMatrix, DistanceDelta]:
    """Mutate ``graph`` by ``update`` and bring ``D`` up to date.

    ``D`` must hold the APSP of ``graph`` before the call.  The matrix is
    updated in place when no resize is needed; the (possibly new) matrix is
    returned with the changed pairs.
    """
    if not update.is_data:
        raise ContractError(f"{update} does not target the data graph")
    kind = update.kind
    if kind is Kind.INSERT_NODE:
        apply_update(graph, update)
        D = D.grown(graph.capacity)
        D.values[update.u, :] = INF
        D.values[:, update.u] = INF
        D.values[update.u, update.u] = 0
        return D, DistanceDelta.empty(added=[update.u])
    if kind is Kind.INSERT_EDGE:
        apply_update(graph, update)
        src, dst, before, after = kernels.insert_apply(D.values, update.u, update.v)
        return D, DistanceDelta(src, dst, before, after)
    V = D.values
    if kind is Kind.DELETE_EDGE:
        apply_update(graph, update)
        flags = kernels.delete_sources(V, update.u, update.v, _pred_array(graph, update.v))
        return D, _recompute_rows(V, graph, np.flatnonzero(flags))
    # node delete: every out-edge (x, y) is a deleted edge into y
    x = update.u
    outs = sorted(graph.succ[x])
    apply_update(graph, update)
    flags = np.zeros(V.shape[0], dtype=np.bool_)
    for y in outs:
        flags |= kernels.delete_sources(V, x, y, _pred_array(graph, y))
    flags[x] = False
    V[x, :] = INF
    V[:, x] = INF
    delta = _recompute_rows(V, graph, np.flatnonzero(flags))
    delta.removed = frozenset([x])
    return D, delta


def update_distances(matrix: DistanceMatrix, graph_before: DataGraph,
                     update: Update) -> tuple[DistanceMatrix, set[DistanceChange]]:
    """APSP of ``graph_before`` after ``update``, plus every changed pair.

    Neither argument is modified.
    """
    if not update.is_data:
        raise ContractError(f"{update} does not target the data graph")
    graph = graph_before.copy()
    D, delta = apply_data_update(matrix.copy(), graph, update)
    return D, delta.changes()


def isolated_affected(D: DistanceMatrix, graph: DataGraph, update: Update) -> frozenset[int]:
    """Nodes ``update`` alone would affect, leaving ``D`` and ``graph`` untouched.

    These are the endpoints of every pair whose distance would change plus
    the inserted or deleted node itself.  Nodes referenced by the update but
    absent from ``graph`` (inserted earlier in the same batch) are treated
    as isolated nodes.
    """
    if not update.is_data:
        raise ContractError(f"{update} does not target the data graph")
    kind = update.kind
    if kind is Kind.INSERT_NODE:
        return frozenset([update.u])
    if kind is Kind.INSERT_EDGE:
        u, v = update.u, update.v
        V = D.values
        fresh = [x for x in (u, v) if x not in graph]
        if fresh:
            V = D.grown(max(D.n, u + 1, v + 1)).values
            V = V.copy() if V is D.values else V
            for x in fresh:
                V[x, :] = INF
                V[:, x] = INF
                V[x, x] = 0
        row = np.zeros(V.shape[0], dtype=np.bool_)
        col = np.zeros(V.shape[0], dtype=np.bool_)
        kernels.insert_scan(V, u, v, row, col)
        return frozenset(np.flatnonzero(row | col).tolist())
    indptr, indices = graph.csr()
    allowed = graph.alive_mask()
    V = D.values
    if kind is Kind.DELETE_EDGE:
        u, v = update.u, update.v
        if not graph.has_edge(u, v):
            raise ContractError(f"{update}: edge not present")
        others = np.fromiter(graph.pred[v] - {u}, dtype=np.int64)
        flags = kernels.delete_sources(V, u, v, others)
        indices = indices.copy()
        row = indices[indptr[u]:indptr[u + 1]]
        row[np.flatnonzero(row == v)[0]] = u
        extra = set()
    else:
        x = update.u
        if x not in graph:
            raise ContractError(f"{update}: node not present")
        allowed[x] = False
        flags = np.zeros(D.n, dtype=np.bool_)
        for y in sorted(graph.succ[x]):
            others = np.fromiter(graph.pred[y] - {x}, dtype=np.int64)
            flags |= kernels.delete_sources(V, x, y, others)
        flags[x] = False
        extra = {x}
    sources = np.flatnonzero(flags)
    if sources.size == 0:
        return frozenset(extra)
    fresh_rows = np.full((sources.size, D.n), INF, dtype=DIST_DTYPE)
    kernels.bfs_rows(indptr, indices, sources.astype(np.int64), allowed, fresh_rows)
    diff = (fresh_rows != V[sources]) & allowed[None, :]
    ri, ci = np.nonzero(diff)
    return frozenset(set(sources[ri].tolist()) | set(ci.tolist()) | extra)
