"""Elimination relationships among the updates of one batch and the
hierarchy tree that indexes them.

Pattern updates are summarised by candidate nodes (data nodes that may
enter or leave the answer), data updates by affected nodes (endpoints of
pairs whose distance changes).  Containment between these sets, and the
cross-graph check against the post-batch distances, decide which updates
need no maintenance pass of their own.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .distance import DistanceChange, DistanceMatrix, isolated_affected, update_distances
from .errors import ContractError
from .graph import DataGraph, Kind, PatternGraph, Update
from .matcher import MatchResult

__all__ = [
    "CandidateSet", "AffectedSet", "RelationKind", "EliminationRelation", "EhTree", "TreeNode",
    "candidate_nodes", "affected_nodes", "detect_type1", "detect_type2", "detect_type3",
    "type1_relations", "type2_relations", "type3_relations", "build_eh_tree",
    "batch_candidate_sets", "batch_affected_sets",
]


@dataclass(frozen=True)
class CandidateSet:
    update: Update
    add_candidates: frozenset[int] = frozenset()
    remove_candidates: frozenset[int] = frozenset()

    @property
    def nodes(self) -> frozenset[int]:
        return self.add_candidates | self.remove_candidates


@dataclass(frozen=True)
class AffectedSet:
    update: Update
    nodes: frozenset[int]
    changes: frozenset[DistanceChange] | None = None


class RelationKind(enum.Enum):
    TYPE_I = "I"
    TYPE_II = "II"
    TYPE_III = "III"


@dataclass(frozen=True)
class EliminationRelation:
    kind: RelationKind
    eliminator: Update
    eliminated: Update

    def __post_init__(self):
        a, b = self.eliminator, self.eliminated
        if self.kind is RelationKind.TYPE_I and not (a.is_pattern and b.is_pattern):
            raise ContractError("type I relates two pattern updates")
        if self.kind is RelationKind.TYPE_II and not (a.is_data and b.is_data):
            raise ContractError("type II relates two data updates")
        if self.kind is RelationKind.TYPE_III and not (a.is_data and b.is_pattern):
            raise ContractError("type III is stored as (data update, pattern update)")


# ---------------------------------------------------------------------------
# candidate nodes

def _matches(iquery: MatchResult, data: DataGraph, pattern: PatternGraph, node: int) -> set[int]:
    if node in iquery.matches:
        return set(iquery.matches[node])
    return set(data.nodes_with_label(pattern.label[node]))


def _witnessed(S: np.ndarray, rows: Sequence[int], cols: Sequence[int], k: int) -> np.ndarray:
    if not len(rows):
        return np.zeros(0, dtype=np.bool_)
    if not len(cols):
        return np.zeros(len(rows), dtype=np.bool_)
    return (S[np.ix_(np.asarray(rows), np.asarray(cols))] <= k).any(axis=1)


def _cascade(pattern: PatternGraph, S: np.ndarray, M: dict[int, set[int]]) -> dict[int, set[int]]:
    """Simulation fixpoint over ``M`` (copied); returns the removed pairs."""
    cur = {u: set(vs) for u, vs in M.items()}
    removed: dict[int, set[int]] = {u: set() for u in cur}
    changed = True
    while changed:
        changed = False
        for (u, u2), bound in pattern.bounds.items():
            rows = sorted(cur[u])
            ok = _witnessed(S, rows, sorted(cur[u2]), bound.limit)
            bad = {v for v, good in zip(rows, ok) if not good}
            if bad:
                cur[u] -= bad
                removed[u] |= bad
                changed = True
    return removed


def candidate_nodes(u: Update, slen: DistanceMatrix, iquery: MatchResult, data: DataGraph,
                    pattern: PatternGraph) -> CandidateSet:
    """Data nodes whose membership in the answer ``u`` may change.

    ``pattern`` is the pattern ``u`` applies to; pattern nodes missing from
    ``iquery`` (inserted earlier in the batch) match every label-compatible
    data node.
    """
    if not u.is_pattern:
        raise ContractError(f"{u} does not target the pattern graph")
    S = slen.values
    kind = u.kind
    if kind is Kind.INSERT_NODE:
        lab = next(iter(u.labels))
        return CandidateSet(u, remove_candidates=frozenset(data.nodes_with_label(lab)))
    if kind is Kind.DELETE_NODE:
        return CandidateSet(u, add_candidates=frozenset(data.nodes_with_label(pattern.label[u.u])))
    p, q = u.u, u.v
    if kind is Kind.INSERT_EDGE:
        k = u.bound.limit
        M = {x: _matches(iquery, data, pattern, x) for x in pattern.nodes}
        src, dst = sorted(M[p]), sorted(M[q])
        src_ok = _witnessed(S, src, dst, k)
        dst_ok = _witnessed(S.T, dst, src, k)
        source_bad = {v for v, ok in zip(src, src_ok) if not ok}
        target_bad = {w for w, ok in zip(dst, dst_ok) if not ok}
        # follow the loss of source_bad through the rest of the pattern
        trial = {x: set(vs) for x, vs in M.items()}
        trial[p] -= source_bad
        removed = _cascade(pattern, S, trial)
        remove = source_bad | target_bad
        for vs in removed.values():
            remove |= vs
        left = {x: trial[x] - removed[x] for x in trial}
        if any(not vs for vs in left.values()):
            remove = set().union(*M.values())
        return CandidateSet(u, remove_candidates=frozenset(remove))
    # edge delete: label-compatible non-members that fail the dropped bound
    k = pattern.bounds[(p, q)].limit
    if iquery.is_empty:
        every = set()
        for x in pattern.nodes:
            every |= data.nodes_with_label(pattern.label[x])
        return CandidateSet(u, add_candidates=frozenset(every))
    M = {x: _matches(iquery, data, pattern, x) for x in pattern.nodes}
    outside = sorted(data.nodes_with_label(pattern.label[p]) - M[p])
    ok = _witnessed(S, outside, sorted(M[q]), k)
    add = {v for v, good in zip(outside, ok) if not good}
    frontier = {p: set(add)}
    while frontier:
        x, fresh = frontier.popitem()
        cols = sorted(fresh)
        for r in pattern.pred[x]:
            if (r, x) == (p, q):
                continue
            rows = sorted(data.nodes_with_label(pattern.label[r]) - M[r] - add)
            hit = _witnessed(S, rows, cols, pattern.bounds[(r, x)].limit)
            new = {v for v, h in zip(rows, hit) if h}
            if new:
                add |= new
                frontier.setdefault(r, set()).update(new)
    return CandidateSet(u, add_candidates=frozenset(add))


# ---------------------------------------------------------------------------
# affected nodes

def affected_nodes(u: Update, slen: DistanceMatrix, data: DataGraph) -> tuple[AffectedSet, DistanceMatrix]:
    """Affected nodes of one data update together with the updated matrix.

    The set holds the endpoints of every changed pair, plus the node itself
    for node inserts and deletes.  Inputs are not modified.
    """
    if not u.is_data:
        raise ContractError(f"{u} does not target the data graph")
    new, changes = update_distances(slen, data, u)
    nodes = {c.source for c in changes} | {c.target for c in changes}
    if not u.kind.is_edge:
        nodes.add(u.u)
    return AffectedSet(u, frozenset(nodes), frozenset(changes)), new


# ---------------------------------------------------------------------------
# batch-level set computation

def _extended_pattern(pattern: PatternGraph, updates: Iterable[Update]) -> PatternGraph:
    ext = pattern.copy()
    for up in updates:
        if up.kind is Kind.INSERT_NODE and up.u not in ext:
            ext.add_node(up.u, next(iter(up.labels)))
    return ext


def batch_candidate_sets(pattern_updates: Sequence[Update], slen: DistanceMatrix, iquery: MatchResult,
                         data: DataGraph, pattern: PatternGraph) -> dict[Update, CandidateSet]:
    """Candidate sets of each pattern update in isolation against the batch start."""
    ext = _extended_pattern(pattern, pattern_updates)
    out = {}
    for up in pattern_updates:
        if up.kind is Kind.INSERT_EDGE:
            trial = ext.copy()
            if trial.has_edge(up.u, up.v):
                trial.remove_edge(up.u, up.v)
            trial.add_edge(up.u, up.v, up.bound)
            out[up] = candidate_nodes(up, slen, iquery, data, trial)
        else:
            out[up] = candidate_nodes(up, slen, iquery, data, ext)
    return out


def batch_affected_sets(data_updates: Sequence[Update], slen: DistanceMatrix,
                        data: DataGraph) -> dict[Update, AffectedSet]:
    """Affected sets of each data update in isolation against the batch start."""
    return {up: AffectedSet(up, isolated_affected(slen, data, up)) for up in data_updates}


# ---------------------------------------------------------------------------
# relation detection

class _SetTable:
    """Updates sorted by canonical key with their node sets as bool rows."""

    def __init__(self, sets: Mapping[Update, frozenset[int]], n: int | None = None):
        self.updates = sorted(sets, key=lambda u: u.sort_key())
        self.sets = [sets[u] for u in self.updates]
        if n is None:
            n = 1 + max((max(s) for s in self.sets if s), default=-1)
        self.n = n
        self.masks = np.zeros((len(self.updates), n), dtype=np.bool_)
        for i, s in enumerate(self.sets):
            if s:
                self.masks[i, np.fromiter(s, dtype=np.int64, count=len(s))] = True
        self.sizes = self.masks.sum(axis=1)

    def __len__(self) -> int:
        return len(self.updates)


def _covers(big: _SetTable, small: _SetTable) -> np.ndarray:
    """``out[a, b]`` is True when set ``a`` of ``big`` contains set ``b`` of ``small``."""
    if not len(big) or not len(small):
        return np.zeros((len(big), len(small)), dtype=np.bool_)
    missing = small.masks.astype(np.float32) @ (~big.masks).T.astype(np.float32)
    return (missing == 0).T


def _self_containment(table: _SetTable, same_class: bool) -> np.ndarray:
    """Eliminator matrix within one table; equal sets go to the smaller key."""
    C = _covers(table, table)
    k = len(table)
    if not k:
        return C
    equal = C & C.T
    idx = np.arange(k)
    C &= ~equal | (idx[:, None] < idx[None, :])
    if same_class:
        ins = np.array([u.kind.is_insert for u in table.updates])
        C &= ins[:, None] == ins[None, :]
    return C


def _relations(table_a: _SetTable, table_b: _SetTable, M: np.ndarray,
               kind: RelationKind) -> set[EliminationRelation]:
    return {EliminationRelation(kind, table_a.updates[i], table_b.updates[j])
            for i, j in zip(*np.nonzero(M))}


def _containment(sets: Mapping[Update, frozenset[int]], kind: RelationKind,
                 same_class: bool) -> set[EliminationRelation]:
    table = _SetTable(sets)
    return _relations(table, table, _self_containment(table, same_class), kind)


def type1_relations(cands: Mapping[Update, CandidateSet]) -> set[EliminationRelation]:
    return _containment({u: c.nodes for u, c in cands.items()}, RelationKind.TYPE_I, True)


def type2_relations(affs: Mapping[Update, AffectedSet]) -> set[EliminationRelation]:
    return _containment({u: a.nodes for u, a in affs.items()}, RelationKind.TYPE_II, False)


def detect_type1(pattern_updates: Sequence[Update], slen: DistanceMatrix, iquery: MatchResult,
                 data: DataGraph, pattern: PatternGraph) -> set[EliminationRelation]:
    for up in pattern_updates:
        if not up.is_pattern:
            raise ContractError(f"{up} does not target the pattern graph")
    return type1_relations(batch_candidate_sets(pattern_updates, slen, iquery, data, pattern))


def detect_type2(data_updates: Sequence[Update], slen: DistanceMatrix,
                 data: DataGraph) -> set[EliminationRelation]:
    for up in data_updates:
        if not up.is_data:
            raise ContractError(f"{up} does not target the data graph")
    return type2_relations(batch_affected_sets(data_updates, slen, data))


def _bound_holds(up: Update, cand: CandidateSet, S: np.ndarray, iquery: MatchResult,
                 data: DataGraph, pattern: PatternGraph) -> bool:
    p, q, k = up.u, up.v, up.bound.limit
    n = S.shape[0]
    src = sorted(x for x in _matches(iquery, data, pattern, p) if x < n)
    dst = sorted(x for x in _matches(iquery, data, pattern, q) if x < n)
    src_set, dst_set = set(src), set(dst)
    for c in sorted(cand.nodes):
        if c >= n:
            return False
        if c in src_set and not _witnessed(S, [c], dst, k)[0]:
            return False
        if c in dst_set and not _witnessed(S.T, [c], src, k)[0]:
            return False
    return True


def type3_relations(cands: Mapping[Update, CandidateSet], affs: Mapping[Update, AffectedSet],
                    slen_new: DistanceMatrix, iquery: MatchResult, data: DataGraph,
                    pattern: PatternGraph) -> set[EliminationRelation]:
    """Pattern-edge inserts whose candidates a data update covers and re-satisfies.

    ``pattern`` must contain every node the pattern updates reference.
    """
    out = set()
    S = slen_new.values
    for up, cand in cands.items():
        if up.kind is not Kind.INSERT_EDGE:
            continue
        holds = None
        for ud, aff in affs.items():
            if not aff.nodes or not aff.nodes >= cand.nodes:
                continue
            if holds is None:
                holds = _bound_holds(up, cand, S, iquery, data, pattern)
            if holds:
                out.add(EliminationRelation(RelationKind.TYPE_III, ud, up))
    return out


def detect_type3(pattern_updates: Sequence[Update], data_updates: Sequence[Update],
                 candidate_sets: Mapping[Update, CandidateSet], affected_sets: Mapping[Update, AffectedSet],
                 slen_new: DistanceMatrix, pattern: PatternGraph, iquery: MatchResult,
                 data: DataGraph) -> set[EliminationRelation]:
    cands = {u: candidate_sets[u] for u in pattern_updates}
    affs = {u: affected_sets[u] for u in data_updates}
    return type3_relations(cands, affs, slen_new, iquery, data, _extended_pattern(pattern, pattern_updates))


# ---------------------------------------------------------------------------
# EH-Tree

@dataclass
class TreeNode:
    update: Update
    nodes: frozenset[int]
    children: list["TreeNode"] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def shape(self) -> tuple:
        return (self.update.sort_key(), tuple(sorted(c.shape() for c in self.children)))


class EhTree:
    """Forest under a virtual root; children are ordered like roots."""

    def __init__(self, roots: list[TreeNode], parent: dict[Update, Update | None]):
        self.roots = roots
        self.parent = parent

    def __len__(self) -> int:
        return len(self.parent)

    def walk(self):
        """Tree nodes root-first, depth-first."""
        stack = list(reversed(self.roots))
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def shape(self) -> tuple:
        return tuple(sorted(r.shape() for r in self.roots))

    def children_of(self, update: Update) -> list[Update]:
        return [u for u, par in self.parent.items() if par == update]

    def dump(self, name=str) -> str:
        lines = ["*"]

        def emit(node: TreeNode, depth: int):
            tag = "Aff" if node.update.is_data else "Can"
            lines.append(f"{'  ' * depth}{name(node.update)}  |{tag}|={node.size}")
            for c in node.children:
                emit(c, depth + 1)

        for r in self.roots:
            emit(r, 1)
        return "\n".join(lines) + "\n"


def _order(node: TreeNode):
    return (-node.size, node.update.sort_key())


def _assemble(nodes: dict[Update, TreeNode], parent: dict[Update, Update | None]) -> EhTree:
    roots = []
    for u, node in nodes.items():
        par = parent[u]
        if par is None:
            roots.append(node)
        else:
            nodes[par].children.append(node)
    for node in nodes.values():
        node.children.sort(key=_order)
    roots.sort(key=_order)
    return EhTree(roots, parent)


def build_eh_tree(sets: Mapping[Update, CandidateSet | AffectedSet],
                  relations: Iterable[EliminationRelation]) -> EhTree:
    """Attach each update below its smallest eliminator.

    Same-graph containment gives child links; a type-III pair puts the
    pattern update below the data update.  Using only the smallest
    eliminator drops transitive edges.  Ties are broken by the canonical
    update key, so the shape does not depend on batch order.
    """
    nodes = {u: TreeNode(u, s.nodes) for u, s in sets.items()}
    best: dict[Update, Update] = {}
    for rel in relations:
        a, b = rel.eliminator, rel.eliminated
        if a not in nodes or b not in nodes:
            continue
        cur = best.get(b)
        if cur is None or _order_key(nodes[a]) < _order_key(nodes[cur]):
            best[b] = a
    return _assemble(nodes, {u: best.get(u) for u in nodes})


def _order_key(node: TreeNode):
    return (node.size, node.update.sort_key())


@dataclass
class EliminationPlan:
    """Everything the batch query needs from detection, without relation objects."""

    tree: EhTree
    counts: dict[str, int]
    type3_pairs: set[tuple[Update, Update]]

    @property
    def eliminated(self) -> set[Update]:
        out = {u for u, par in self.tree.parent.items() if par is not None}
        for d, p in self.type3_pairs:
            out.update((d, p))
        return out


def plan_elimination(cands: Mapping[Update, CandidateSet], affs: Mapping[Update, AffectedSet],
                     slen_new: DistanceMatrix | None, iquery: MatchResult, data: DataGraph,
                     pattern: PatternGraph, cross: bool = True) -> EliminationPlan:
    """Type I/II/III detection and tree construction on bool set matrices.

    Produces the same tree as :func:`build_eh_tree` over the relation sets.
    ``pattern`` must contain every node the pattern updates reference;
    ``cross=False`` skips type III.
    """
    n = slen_new.n if slen_new is not None else 0
    for s in [c.nodes for c in cands.values()] + [a.nodes for a in affs.values()]:
        if s:
            n = max(n, max(s) + 1)
    ptab = _SetTable({u: c.nodes for u, c in cands.items()}, n)
    dtab = _SetTable({u: a.nodes for u, a in affs.items()}, n)
    C1 = _self_containment(ptab, True)
    C2 = _self_containment(dtab, False)
    C3 = np.zeros((len(dtab), len(ptab)), dtype=np.bool_)
    if cross and len(dtab) and len(ptab):
        C3 = _covers(dtab, ptab) & (dtab.sizes > 0)[:, None]
        for j, up in enumerate(ptab.updates):
            if up.kind is not Kind.INSERT_EDGE or not C3[:, j].any():
                C3[:, j] = False
            elif not _bound_holds(up, cands[up], slen_new.values, iquery, data, pattern):
                C3[:, j] = False
    updates = dtab.updates + ptab.updates
    sizes = np.concatenate([dtab.sizes, ptab.sizes])
    k, kd = len(updates), len(dtab)
    R = np.zeros((k, k), dtype=np.bool_)
    R[:kd, :kd] = C2
    R[:kd, kd:] = C3
    R[kd:, kd:] = C1
    order = sorted(range(k), key=lambda i: (int(sizes[i]), updates[i].sort_key()))
    ranked = R[order]
    has = ranked.any(axis=0)
    first = ranked.argmax(axis=0) if k else np.zeros(0, dtype=np.int64)
    parent = {updates[j]: (updates[order[first[j]]] if has[j] else None) for j in range(k)}
    nodes = {u: TreeNode(u, s) for u, s in zip(updates, dtab.sets + ptab.sets)}
    pairs = {(dtab.updates[i], ptab.updates[j]) for i, j in zip(*np.nonzero(C3))}
    counts = {"type1": int(C1.sum()), "type2": int(C2.sum()), "type3": int(C3.sum())}
    return EliminationPlan(_assemble(nodes, parent), counts, pairs)
