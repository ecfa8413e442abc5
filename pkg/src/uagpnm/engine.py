"""Initial and updates-aware subsequent queries with selectable methods."""

from __future__ import annotations

import enum
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .distance import DistanceMatrix, apply_data_update, apsp_baseline, partitioned_apsp
from .elimination import (_extended_pattern, batch_affected_sets, batch_candidate_sets,
                          plan_elimination)
from .graph import DataGraph, PatternGraph, UpdateBatch, apply_update, validate_batch
from .kernels import INF
from .matcher import MatchResult, incremental_match, match_nodes

__all__ = ["Method", "QueryStats", "QuerySession", "answer_initial_query", "answer_subsequent_query"]


class Method(enum.Enum):
    SCRATCH = "Scratch"
    INC_PER_UPDATE = "IncPerUpdate"
    EH_DATA_ONLY = "EhDataOnly"
    UA_NO_PARTITION = "UaNoPartition"
    UA = "Ua"

    @classmethod
    def parse(cls, name: str) -> "Method":
        for m in cls:
            if m.value.lower() == name.lower() or m.name.lower() == name.lower():
                return m
        raise ValueError(f"unknown method {name!r}; choose from {', '.join(m.value for m in cls)}")


@dataclass
class QueryStats:
    method: str = ""
    batch_size: int = 0
    eliminated: int = 0
    passes: int = 0
    residual: int = 0
    relations: dict[str, int] = field(default_factory=dict)
    timings_us: dict[str, float] = field(default_factory=dict)

    @property
    def total_us(self) -> float:
        return sum(self.timings_us.values())

    @contextmanager
    def phase(self, name: str):
        t0 = time.perf_counter_ns()
        try:
            yield
        finally:
            self.timings_us[name] = self.timings_us.get(name, 0.0) + (time.perf_counter_ns() - t0) / 1000


@dataclass
class QuerySession:
    pattern: PatternGraph
    data: DataGraph
    slen: DistanceMatrix
    iquery: MatchResult
    stats: QueryStats = field(default_factory=QueryStats)

    def copy(self) -> "QuerySession":
        return QuerySession(self.pattern.copy(), self.data.copy(), self.slen.copy(), self.iquery, self.stats)


class _LabelView:
    """Frozen label index of a data graph for the labels a pattern uses."""

    def __init__(self, data: DataGraph, labels):
        self._index = {lab: frozenset(data.nodes_with_label(lab)) for lab in labels}

    def nodes_with_label(self, label: str):
        return self._index.get(label, frozenset())


def answer_initial_query(pattern: PatternGraph, data: DataGraph, partitioned: bool = True) -> QuerySession:
    stats = QueryStats(method="initial")
    with stats.phase("apsp"):
        slen = partitioned_apsp(data) if partitioned else apsp_baseline(data)
    with stats.phase("match"):
        iquery = match_nodes(pattern, data, slen)
    return QuerySession(pattern, data, slen, iquery, stats)


def _changed_rows(before: np.ndarray, after: np.ndarray, alive: np.ndarray) -> np.ndarray:
    """Ids whose outgoing distances to live nodes differ, plus new ids."""
    n0, n = before.shape[0], after.shape[0]
    rows = np.zeros(n, dtype=np.bool_)
    live_old = alive[:n0]
    rows[:n0] = ((before != after[:n0, :n0]) & live_old[None, :]).any(axis=1)
    if n > n0:
        rows[:n0] |= (after[:n0, n0:] != INF).any(axis=1)
        rows[n0:] = True
    return np.flatnonzero(rows & alive)


def answer_subsequent_query(session: QuerySession, batch: UpdateBatch, method: Method | str = Method.UA,
                            inplace: bool = False) -> tuple[MatchResult, QuerySession]:
    """Answer for the updated graphs; the returned session holds the new state.

    The batch is validated against the session before anything changes.
    Unless ``inplace`` is set the given session is left untouched.
    """
    if isinstance(method, str):
        method = Method.parse(method)
    if not isinstance(batch, UpdateBatch):
        batch = UpdateBatch(batch)
    validate_batch(batch, session.pattern, session.data)
    if not inplace:
        session = session.copy()
    stats = QueryStats(method=method.value, batch_size=len(batch))
    run = {
        Method.SCRATCH: _scratch,
        Method.INC_PER_UPDATE: _inc_per_update,
        Method.EH_DATA_ONLY: _eh_data_only,
        Method.UA_NO_PARTITION: lambda s, b, st: _updates_aware(s, b, st, partitioned=False),
        Method.UA: lambda s, b, st: _updates_aware(s, b, st, partitioned=True),
    }[method]
    result = run(session, batch, stats)
    session.iquery = result
    session.stats = stats
    return result, session


def _scratch(s: QuerySession, batch: UpdateBatch, stats: QueryStats) -> MatchResult:
    with stats.phase("apply"):
        for up in batch:
            apply_update(s.pattern if up.is_pattern else s.data, up)
        s.slen = apsp_baseline(s.data)
    with stats.phase("match"):
        return match_nodes(s.pattern, s.data, s.slen)


def _inc_per_update(s: QuerySession, batch: UpdateBatch, stats: QueryStats) -> MatchResult:
    result = s.iquery
    for up in batch:
        if up.is_pattern:
            with stats.phase("apply"):
                apply_update(s.pattern, up)
            touched = ()
        else:
            with stats.phase("apply"):
                s.slen, delta = apply_data_update(s.slen, s.data, up)
            touched = delta.sources() | delta.added
        with stats.phase("match"):
            result = incremental_match(s.pattern, s.data, s.slen, result, up, touched)
        stats.passes += 1
    return result


def _eh_data_only(s: QuerySession, batch: UpdateBatch, stats: QueryStats) -> MatchResult:
    data_ups = batch.data_updates
    base = s.slen
    with stats.phase("sets"):
        affs = batch_affected_sets(data_ups, base, s.data)
    with stats.phase("detect"):
        plan = plan_elimination({}, affs, None, s.iquery, s.data, s.pattern, cross=False)
    with stats.phase("apply"):
        slen = base.copy()
        for up in data_ups:
            slen, _ = apply_data_update(slen, s.data, up)
        s.slen = slen
        touched = _changed_rows(base.values, slen.values, s.data.alive_mask())
    stats.eliminated = len(plan.eliminated)
    stats.relations = plan.counts
    stats.residual = int(touched.size)
    result = s.iquery
    if data_ups:
        with stats.phase("match"):
            result = incremental_match(s.pattern, s.data, s.slen, result, None, touched.tolist())
        stats.passes += 1
    for up in batch.pattern_updates:
        with stats.phase("apply"):
            apply_update(s.pattern, up)
        with stats.phase("match"):
            result = incremental_match(s.pattern, s.data, s.slen, result, up, ())
        stats.passes += 1
    return result


def _updates_aware(s: QuerySession, batch: UpdateBatch, stats: QueryStats, partitioned: bool) -> MatchResult:
    pattern0, data0, base, iquery = s.pattern, s.data, s.slen, s.iquery
    if not len(batch):
        return iquery
    with stats.phase("sets"):
        cands = batch_candidate_sets(batch.pattern_updates, base, iquery, data0, pattern0)
        affs = batch_affected_sets(batch.data_updates, base, data0)
        ext = _extended_pattern(pattern0, batch.pattern_updates)
        data_ref = _LabelView(data0, {ext.label[x] for x in ext.nodes})
    with stats.phase("apply"):
        for up in batch:
            apply_update(pattern0 if up.is_pattern else data0, up)
        if batch.data_updates:
            s.slen = partitioned_apsp(data0) if partitioned else apsp_baseline(data0)
        touched = _changed_rows(base.values, s.slen.values, data0.alive_mask())
    with stats.phase("detect"):
        plan = plan_elimination(cands, affs, s.slen, iquery, data_ref, ext)
    stats.eliminated = len(plan.eliminated)
    stats.relations = plan.counts
    stats.residual = int(touched.size)
    # one amendment covers every uneliminated update plus whatever the
    # eliminated ones changed; the pattern diff is taken from the snapshot
    with stats.phase("match"):
        result = incremental_match(s.pattern, s.data, s.slen, iquery, None, touched.tolist())
    if result is not iquery:
        stats.passes = 1
    return result
