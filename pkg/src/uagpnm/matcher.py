"""Bounded-simulation node matching: full evaluation, a brute-force oracle
and incremental amendment of a previous result."""

from __future__ import annotations

import hashlib
from collections import deque
from typing import Iterable, Mapping

import numpy as np

from .distance import DistanceMatrix
from .errors import ContractError, ParseError
from .graph import DataGraph, PatternGraph, Update
from .kernels import INF

__all__ = ["MatchResult", "match_nodes", "brute_force_match", "incremental_match"]


class MatchResult:
    """Matching data nodes per pattern node.

    Equality and the text form only look at the projected matches.  Results
    produced by :func:`match_nodes` also keep the raw maximal relation and a
    snapshot of the inputs, which :func:`incremental_match` amends.
    """

    def __init__(self, matches: Mapping[int, Iterable[int]]):
        self.matches: dict[int, frozenset[int]] = {u: frozenset(vs) for u, vs in matches.items()}
        self._sim: dict[int, np.ndarray] | None = None
        self._alive: np.ndarray | None = None
        self._labels: dict[int, str] | None = None
        self._bounds: dict[tuple[int, int], int] | None = None

    @classmethod
    def _from_state(cls, pattern: PatternGraph, sim: dict[int, np.ndarray], alive: np.ndarray) -> "MatchResult":
        nonempty = all(mask.any() for mask in sim.values())
        res = cls({u: (np.flatnonzero(mask).tolist() if nonempty else ()) for u, mask in sim.items()})
        res._sim = sim
        res._alive = alive
        res._labels = dict(pattern.label)
        res._bounds = {e: b.limit for e, b in pattern.bounds.items()}
        return res

    def __getitem__(self, u: int) -> frozenset[int]:
        return self.matches[u]

    def __iter__(self):
        return iter(sorted(self.matches))

    def __len__(self) -> int:
        return len(self.matches)

    def items(self):
        return sorted(self.matches.items())

    def __eq__(self, other) -> bool:
        if isinstance(other, MatchResult):
            return self.matches == other.matches
        if isinstance(other, Mapping):
            return self.matches == {u: frozenset(vs) for u, vs in other.items()}
        return NotImplemented

    def __repr__(self) -> str:
        body = ", ".join(f"{u}: {sorted(vs)}" for u, vs in self.items())
        return f"MatchResult({{{body}}})"

    @property
    def is_empty(self) -> bool:
        return not any(self.matches.values())

    def to_text(self, pattern_names: Mapping[int, str] | None = None,
                data_names: Mapping[int, str] | list[str] | None = None) -> str:
        lines = []
        for u, vs in self.items():
            name = pattern_names[u] if pattern_names else str(u)
            ids = sorted(vs)
            cells = [data_names[v] for v in ids] if data_names is not None else [str(v) for v in ids]
            lines.append(f"{name}: {','.join(cells)}\n")
        return "".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "MatchResult":
        matches = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, sep, tail = line.partition(":")
            if not sep:
                raise ParseError("expected 'pattern_node: id1,id2,...'", lineno)
            try:
                matches[int(head)] = [int(x) for x in tail.split(",") if x.strip()]
            except ValueError:
                raise ParseError(f"bad id in {line!r}", lineno) from None
        return cls(matches)

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# shared fixpoint

def _label_mask(data: DataGraph, label: str, n: int) -> np.ndarray:
    mask = np.zeros(n, dtype=np.bool_)
    nodes = data.nodes_with_label(label)
    if nodes:
        mask[np.fromiter(nodes, dtype=np.int64, count=len(nodes))] = True
    return mask


def _refine(pattern: PatternGraph, S: np.ndarray, sim: dict[int, np.ndarray],
            pending: dict[int, np.ndarray]) -> None:
    """Remove pairs that lack a witness until nothing changes.

    ``pending[u]`` marks the rows of pattern node ``u`` to re-test.  A
    removal from ``sim[u']`` re-queues every member of each pattern
    predecessor of ``u'``.
    """
    limits = {e: b.limit for e, b in pattern.bounds.items()}
    while pending:
        u, mask = pending.popitem()
        rows = np.flatnonzero(mask & sim[u])
        if rows.size == 0 or not pattern.succ[u]:
            continue
        ok = np.ones(rows.size, dtype=np.bool_)
        for u2 in sorted(pattern.succ[u]):
            cols = np.flatnonzero(sim[u2])
            live = np.flatnonzero(ok)
            if cols.size == 0:
                ok[:] = False
                break
            if live.size == 0:
                break
            sub = S[np.ix_(rows[live], cols)]
            ok[live] = (sub <= limits[(u, u2)]).any(axis=1)
        bad = rows[~ok]
        if bad.size:
            sim[u][bad] = False
            for p in pattern.pred[u]:
                prev = pending.get(p)
                pending[p] = sim[p].copy() if prev is None else prev | sim[p]


def _check_inputs(pattern: PatternGraph, data: DataGraph, slen: DistanceMatrix) -> np.ndarray:
    if slen.n != data.capacity:
        raise ContractError(f"distance matrix has {slen.n} slots, data graph {data.capacity}")
    return slen.values


def match_nodes(pattern: PatternGraph, data: DataGraph, slen: DistanceMatrix) -> MatchResult:
    """Maximal bounded simulation of ``pattern`` in ``data``, projected per pattern node."""
    S = _check_inputs(pattern, data, slen)
    n = data.capacity
    sim = {u: _label_mask(data, pattern.label[u], n) for u in pattern.nodes}
    _refine(pattern, S, sim, {u: sim[u].copy() for u in pattern.nodes})
    return MatchResult._from_state(pattern, sim, data.alive_mask())


# ---------------------------------------------------------------------------
# oracle

def brute_force_match(pattern: PatternGraph, data: DataGraph) -> MatchResult:
    """Naive evaluation with on-demand BFS and a plain fixpoint loop."""
    cache: dict[int, dict[int, int]] = {}

    def dist(a: int) -> dict[int, int]:
        if a not in cache:
            seen = {a: 0}
            queue = deque([a])
            while queue:
                x = queue.popleft()
                for y in data.succ[x]:
                    if y not in seen:
                        seen[y] = seen[x] + 1
                        queue.append(y)
            cache[a] = seen
        return cache[a]

    rel = {u: {v for v, labs in data.labels.items() if pattern.label[u] in labs} for u in pattern.nodes}
    changed = True
    while changed:
        changed = False
        for (u, u2), bound in pattern.bounds.items():
            for v in list(rel[u]):
                reach = dist(v)
                if not any(w in reach and bound.allows(reach[w]) for w in rel[u2]):
                    rel[u].discard(v)
                    changed = True
    if any(not vs for vs in rel.values()):
        return MatchResult({u: () for u in rel})
    return MatchResult(rel)


# ---------------------------------------------------------------------------
# incremental amendment

def incremental_match(pattern: PatternGraph, data: DataGraph, slen_new: DistanceMatrix,
                      prev: MatchResult, update: Update | None = None,
                      touched: Iterable[int] = ()) -> MatchResult:
    """Amend ``prev`` after updates to the data graph and/or the pattern.

    ``touched`` must contain every data node whose outgoing distances
    changed since ``prev`` was computed; new data nodes and all pattern
    changes are detected from the snapshot kept in ``prev``.  Pairs that
    can newly hold are collected from touched nodes and relaxed pattern
    nodes and closed backwards over pattern edges; then only pairs that
    may have lost a witness are re-tested, with removals propagated to
    pattern predecessors.
    """
    if prev._sim is None:
        raise ContractError("prev must come from match_nodes or incremental_match")
    S = _check_inputs(pattern, data, slen_new)
    n = data.capacity
    alive = data.alive_mask()
    old_alive = np.zeros(n, dtype=np.bool_)
    old_alive[: prev._alive.size] = prev._alive[:n]
    new_nodes = alive & ~old_alive
    gone = old_alive & ~alive

    T = np.zeros(n, dtype=np.bool_)
    touched = np.fromiter(touched, dtype=np.int64)
    if touched.size:
        T[touched[touched < n]] = True
    T |= new_nodes

    # pattern diff against the snapshot
    old_labels, old_bounds = prev._labels, prev._bounds
    relaxed, tightened, fresh = set(), set(), set()
    for u in pattern.nodes:
        if u not in old_labels or old_labels[u] != pattern.label[u]:
            fresh.add(u)
    for (a, b), k in old_bounds.items():
        if a in pattern.label and a not in fresh:
            knew = pattern.bounds.get((a, b))
            if knew is None or knew.limit > k or b in fresh:
                relaxed.add(a)
            if knew is not None and (knew.limit < k or b in fresh):
                tightened.add(a)
    for (a, b), bound in pattern.bounds.items():
        if (a, b) not in old_bounds and a not in fresh:
            tightened.add(a)

    if not T.any() and not gone.any() and not (relaxed or tightened or fresh) \
            and set(pattern.nodes) == set(old_labels):
        return prev

    sim: dict[int, np.ndarray] = {}
    labmask: dict[int, np.ndarray] = {}
    for u in pattern.nodes:
        labmask[u] = _label_mask(data, pattern.label[u], n)
        if u in fresh:
            sim[u] = labmask[u].copy()
        else:
            m = np.zeros(n, dtype=np.bool_)
            old = prev._sim[u]
            m[: old.size] = old[:n]
            sim[u] = m & alive

    # additions: touched rows and relaxed pattern nodes, closed backwards
    added = {u: np.zeros(n, dtype=np.bool_) for u in pattern.nodes}
    for u in pattern.nodes:
        if u in fresh:
            added[u] = sim[u].copy()
            continue
        cand = labmask[u] & ~sim[u]
        added[u] = cand if u in relaxed else cand & T
    limits = {e: b.limit for e, b in pattern.bounds.items()}
    frontier = {u for u in pattern.nodes if added[u].any()}
    while frontier:
        u2 = frontier.pop()
        cols = np.flatnonzero(added[u2])
        for u in pattern.pred[u2]:
            cand = labmask[u] & ~sim[u] & ~added[u]
            rows = np.flatnonzero(cand)
            if rows.size == 0:
                continue
            hit = (S[np.ix_(rows, cols)] <= limits[(u, u2)]).any(axis=1)
            if hit.any():
                added[u][rows[hit]] = True
                frontier.add(u)

    pending: dict[int, np.ndarray] = {}
    for u in pattern.nodes:
        sim[u] |= added[u]
        recheck = added[u] | (sim[u] & T)
        if u in tightened or u in relaxed or u in fresh:
            recheck = sim[u].copy()
        if recheck.any():
            pending[u] = recheck
    # witnesses lost to deleted data nodes or pattern nodes
    for u in pattern.nodes:
        if u in fresh:
            continue
        old = prev._sim[u]
        lost = bool(old[: n][gone[: old.size]].any()) if gone.any() else False
        if lost:
            for p in pattern.pred[u]:
                pending[p] = pending.get(p, np.zeros(n, dtype=np.bool_)) | sim[p]
    _refine(pattern, S, sim, pending)
    return MatchResult._from_state(pattern, sim, alive)
