"""Data graphs, pattern graphs, typed updates and their text formats.

Node ids are dense non-negative integers.  A deleted id is retired for the
life of the graph object and may not be inserted again, so distance
matrices indexed by id stay aligned across updates.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ContractError, IdempotencyError, ParseError, ValidationError
from .kernels import INF

log = logging.getLogger(__name__)

DEFAULT_LABEL = "UNK"


@dataclass(frozen=True)
class PathBound:
    """Hop bound on a pattern edge; ``k is None`` is the unbounded ``*``."""

    k: int | None = None

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise ValidationError(f"path bound must be >= 1, got {self.k}")

    @classmethod
    def parse(cls, token: str) -> "PathBound":
        if token == "*":
            return cls(None)
        try:
            k = int(token)
        except ValueError:
            raise ParseError(f"bad path bound {token!r}") from None
        return cls(k)

    @property
    def unbounded(self) -> bool:
        return self.k is None

    @property
    def limit(self) -> int:
        # Largest admissible distance. '*' still needs a path to exist.
        return INF - 1 if self.k is None else self.k

    def allows(self, dist: int) -> bool:
        return dist <= self.limit

    def __str__(self) -> str:
        return "*" if self.k is None else str(self.k)


UNBOUNDED = PathBound(None)


class Target(enum.Enum):
    PATTERN = "P"
    DATA = "D"


class Kind(enum.Enum):
    INSERT_EDGE = "+E"
    DELETE_EDGE = "-E"
    INSERT_NODE = "+N"
    DELETE_NODE = "-N"

    @property
    def is_insert(self) -> bool:
        return self in (Kind.INSERT_EDGE, Kind.INSERT_NODE)

    @property
    def is_edge(self) -> bool:
        return self in (Kind.INSERT_EDGE, Kind.DELETE_EDGE)


@dataclass(frozen=True)
class Update:
    """One insertion or deletion against the pattern or the data graph.

    ``ordinal`` is the position inside its batch and is ignored by equality
    and hashing, so the same update in a permuted batch compares equal.
    """

    target: Target
    kind: Kind
    u: int
    v: int | None = None
    bound: PathBound | None = None
    labels: frozenset[str] = frozenset()
    ordinal: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.kind.is_edge:
            if self.v is None:
                raise ValidationError("edge update needs two endpoints")
            if self.u == self.v:
                raise ValidationError(f"self-loop ({self.u}, {self.v}) not allowed")
        elif self.v is not None:
            raise ValidationError("node update takes a single node id")
        if self.kind is Kind.INSERT_EDGE and self.target is Target.PATTERN:
            if self.bound is None:
                raise ValidationError("pattern edge insert needs a path bound")
        elif self.bound is not None:
            raise ValidationError(f"{self.target.value} {self.kind.value} carries no path bound")
        if self.kind is Kind.INSERT_NODE:
            if not self.labels or any(not lab for lab in self.labels):
                raise ValidationError("node insert needs at least one non-empty label")
            if self.target is Target.PATTERN and len(self.labels) != 1:
                raise ValidationError("pattern nodes carry exactly one label")
        elif self.labels:
            raise ValidationError(f"{self.kind.value} carries no labels")

    # constructors -------------------------------------------------------
    @classmethod
    def insert_edge(cls, target: Target, u: int, v: int, bound: PathBound | int | None = None,
                    ordinal: int = 0) -> "Update":
        if isinstance(bound, int):
            bound = PathBound(bound)
        return cls(target, Kind.INSERT_EDGE, u, v, bound=bound, ordinal=ordinal)

    @classmethod
    def delete_edge(cls, target: Target, u: int, v: int, ordinal: int = 0) -> "Update":
        return cls(target, Kind.DELETE_EDGE, u, v, ordinal=ordinal)

    @classmethod
    def insert_node(cls, target: Target, u: int, labels: Iterable[str] | str,
                    ordinal: int = 0) -> "Update":
        if isinstance(labels, str):
            labels = [labels]
        return cls(target, Kind.INSERT_NODE, u, labels=frozenset(labels), ordinal=ordinal)

    @classmethod
    def delete_node(cls, target: Target, u: int, ordinal: int = 0) -> "Update":
        return cls(target, Kind.DELETE_NODE, u, ordinal=ordinal)

    # derived ------------------------------------------------------------
    @property
    def is_pattern(self) -> bool:
        return self.target is Target.PATTERN

    @property
    def is_data(self) -> bool:
        return self.target is Target.DATA

    @property
    def element(self) -> tuple:
        """Identity of the graph element the update touches."""
        if self.kind.is_edge:
            return (self.target, "E", self.u, self.v)
        return (self.target, "N", self.u)

    def sort_key(self) -> tuple:
        """Order-independent canonical key, used for deterministic tie-breaks."""
        return (self.target.value, self.kind.value, self.u,
                -1 if self.v is None else self.v,
                -1 if self.bound is None else (0 if self.bound.k is None else self.bound.k),
                tuple(sorted(self.labels)))

    def with_ordinal(self, ordinal: int) -> "Update":
        return Update(self.target, self.kind, self.u, self.v, self.bound, self.labels, ordinal)

    def to_line(self) -> str:
        head = f"{self.target.value} {self.kind.value} {self.u}"
        if self.kind is Kind.INSERT_EDGE:
            return f"{head} {self.v}" + (f" {self.bound}" if self.bound is not None else "")
        if self.kind is Kind.DELETE_EDGE:
            return f"{head} {self.v}"
        if self.kind is Kind.INSERT_NODE:
            return f"{head} {','.join(sorted(self.labels))}"
        return head

    def __str__(self) -> str:
        return self.to_line()


class UpdateBatch(Sequence[Update]):
    """Ordered updates against both graphs, annihilating pairs removed.

    An insert followed by a delete of the same element (and, for data
    edges, a delete followed by a re-insert) cancels out.  When an inserted
    node is deleted again inside the batch, updates in between that touch
    the node are dropped with the pair.  Pattern-edge delete/re-insert pairs
    are kept because the re-insert may carry a different bound.
    """

    def __init__(self, updates: Iterable[Update] = ()):
        kept = _annihilate(list(updates))
        self._updates = tuple(up.with_ordinal(i) for i, up in enumerate(kept[0]))
        self.annihilated = kept[1]

    def __getitem__(self, i):
        return self._updates[i]

    def __len__(self) -> int:
        return len(self._updates)

    def __iter__(self) -> Iterator[Update]:
        return iter(self._updates)

    def __repr__(self) -> str:
        return f"UpdateBatch({len(self)} updates, {self.annihilated} annihilated)"

    @property
    def pattern_updates(self) -> list[Update]:
        return [up for up in self._updates if up.is_pattern]

    @property
    def data_updates(self) -> list[Update]:
        return [up for up in self._updates if up.is_data]

    def to_text(self) -> str:
        return "".join(up.to_line() + "\n" for up in self._updates)


def _annihilate(updates: list[Update]) -> tuple[list[Update], int]:
    alive = [True] * len(updates)
    pending: dict[tuple, int] = {}
    removed = 0
    for i, up in enumerate(updates):
        key = up.element
        j = pending.get(key)
        if j is not None and updates[j].kind.is_insert != up.kind.is_insert:
            first = updates[j]
            cancels = first.kind.is_insert or (first.kind.is_edge and first.is_data)
            if cancels:
                alive[i] = alive[j] = False
                removed += 2
                del pending[key]
                if not first.kind.is_edge:
                    # drop updates between the pair that reference the node
                    for m in range(j + 1, i):
                        other = updates[m]
                        if alive[m] and other.target is up.target and up.u in (other.u, other.v):
                            alive[m] = False
                            removed += 1
                            pending.pop(other.element, None)
                continue
        pending[key] = i
    return [up for up, ok in zip(updates, alive) if ok], removed


class DataGraph:
    """Directed graph whose nodes carry non-empty label sets."""

    def __init__(self):
        self.labels: dict[int, frozenset[str]] = {}
        self.succ: dict[int, set[int]] = {}
        self.pred: dict[int, set[int]] = {}
        self.retired: set[int] = set()
        self._capacity = 0
        self._n_edges = 0
        self._csr = None
        self._by_label: dict[str, set[int]] | None = None

    @classmethod
    def from_edges(cls, labels: dict[int, Iterable[str] | str],
                   edges: Iterable[tuple[int, int]] = ()) -> "DataGraph":
        g = cls()
        for node, labs in labels.items():
            g.add_node(node, labs)
        for u, v in edges:
            g.add_edge(u, v)
        return g

    # queries ------------------------------------------------------------
    @property
    def nodes(self):
        return self.labels.keys()

    @property
    def capacity(self) -> int:
        """One past the largest id ever used (live or retired)."""
        return self._capacity

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return self._n_edges

    def __contains__(self, node) -> bool:
        return node in self.labels

    def has_edge(self, u: int, v: int) -> bool:
        s = self.succ.get(u)
        return s is not None and v in s

    def edges(self) -> Iterator[tuple[int, int]]:
        for u in sorted(self.succ):
            for v in sorted(self.succ[u]):
                yield u, v

    def edge_set(self) -> set[tuple[int, int]]:
        return {(u, v) for u, vs in self.succ.items() for v in vs}

    def nodes_with_label(self, label: str) -> set[int]:
        if self._by_label is None:
            index: dict[str, set[int]] = {}
            for node, labs in self.labels.items():
                for lab in labs:
                    index.setdefault(lab, set()).add(node)
            self._by_label = index
        return self._by_label.get(label, set())

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Out-adjacency as (indptr, indices) over ``capacity`` slots.

        Kept up to date across mutations without a rebuild: a removed edge
        (u, v) leaves ``u`` itself in its slot, and rows of removed nodes
        are left as they were.  Breadth-first search is unaffected as long
        as removed nodes are masked out, which every caller does.
        """
        if self._csr is None:
            n = self._capacity
            deg = np.zeros(n + 1, dtype=np.int64)
            for u, vs in self.succ.items():
                deg[u + 1] = len(vs)
            indptr = np.cumsum(deg)
            indices = np.empty(indptr[-1], dtype=np.int64)
            for u, vs in self.succ.items():
                indices[indptr[u]:indptr[u + 1]] = sorted(vs)
            self._csr = (indptr, indices)
        return self._csr

    def alive_mask(self) -> np.ndarray:
        mask = np.zeros(self._capacity, dtype=np.bool_)
        if self.labels:
            mask[np.fromiter(self.labels.keys(), dtype=np.int64)] = True
        return mask

    # mutation -----------------------------------------------------------
    def _csr_grow(self, n: int) -> None:
        if self._csr is not None:
            indptr, indices = self._csr
            if indptr.size - 1 < n:
                indptr = np.concatenate([indptr, np.full(n + 1 - indptr.size, indptr[-1])])
            self._csr = (indptr, indices)

    def _csr_insert(self, u: int, v: int) -> None:
        if self._csr is not None:
            indptr, indices = self._csr
            pad = np.flatnonzero(indices[indptr[u]:indptr[u + 1]] == u)
            if pad.size:
                # copies may share the arrays
                indices = indices.copy()
                indices[indptr[u] + pad[0]] = v
                self._csr = (indptr, indices)
                return
            indices = np.insert(indices, indptr[u + 1], v)
            indptr = indptr.copy()
            indptr[u + 1:] += 1
            self._csr = (indptr, indices)

    def _csr_remove(self, u: int, v: int) -> None:
        if self._csr is not None:
            indptr, indices = self._csr
            indices = indices.copy()
            row = indices[indptr[u]:indptr[u + 1]]
            row[np.flatnonzero(row == v)[0]] = u
            self._csr = (indptr, indices)

    def add_node(self, node: int, labels: Iterable[str] | str) -> None:
        if isinstance(labels, str):
            labels = [labels]
        labs = frozenset(labels)
        if node < 0:
            raise ValidationError(f"node id must be non-negative, got {node}")
        if not labs or any(not lab for lab in labs):
            raise ValidationError(f"node {node} needs at least one non-empty label")
        if node in self.labels:
            raise IdempotencyError(f"node {node} already present")
        if node in self.retired:
            raise IdempotencyError(f"node id {node} was deleted and cannot be reused")
        self.labels[node] = labs
        self.succ[node] = set()
        self.pred[node] = set()
        self._capacity = max(self._capacity, node + 1)
        self._by_label = None
        self._csr_grow(self._capacity)

    def remove_node(self, node: int) -> list[tuple[int, int]]:
        if node not in self.labels:
            raise IdempotencyError(f"node {node} not present")
        dropped = [(node, w) for w in self.succ[node]] + [(w, node) for w in self.pred[node]]
        for w in self.succ.pop(node):
            self.pred[w].discard(node)
        for w in self.pred.pop(node):
            self.succ[w].discard(node)
        self._n_edges -= len(dropped)
        del self.labels[node]
        self.retired.add(node)
        self._by_label = None
        return dropped

    def add_edge(self, u: int, v: int) -> None:
        if u == v:
            raise ValidationError(f"self-loop ({u}, {v}) not allowed")
        for x in (u, v):
            if x not in self.labels:
                raise ValidationError(f"edge ({u}, {v}) references unknown node {x}")
        if v in self.succ[u]:
            raise IdempotencyError(f"edge ({u}, {v}) already present")
        self.succ[u].add(v)
        self.pred[v].add(u)
        self._n_edges += 1
        self._csr_insert(u, v)

    def remove_edge(self, u: int, v: int) -> None:
        if not self.has_edge(u, v):
            raise IdempotencyError(f"edge ({u}, {v}) not present")
        self.succ[u].discard(v)
        self.pred[v].discard(u)
        self._n_edges -= 1
        self._csr_remove(u, v)

    def copy(self) -> "DataGraph":
        g = DataGraph()
        g.labels = dict(self.labels)
        g.succ = {u: set(vs) for u, vs in self.succ.items()}
        g.pred = {u: set(vs) for u, vs in self.pred.items()}
        g.retired = set(self.retired)
        g._capacity = self._capacity
        g._n_edges = self._n_edges
        g._csr = self._csr
        return g

    def subgraph(self, keep: Iterable[int]) -> "DataGraph":
        """Induced subgraph on ``keep``, ids preserved."""
        keep = set(keep) & set(self.labels)
        g = DataGraph()
        for node in sorted(keep):
            g.add_node(node, self.labels[node])
        for u in sorted(keep):
            for v in self.succ[u]:
                if v in keep:
                    g.add_edge(u, v)
        return g

    def __eq__(self, other) -> bool:
        if not isinstance(other, DataGraph):
            return NotImplemented
        return self.labels == other.labels and self.edge_set() == other.edge_set()

    def __repr__(self) -> str:
        return f"DataGraph({len(self)} nodes, {self.n_edges} edges)"


class PatternGraph:
    """Directed pattern with one label per node and a bound per edge."""

    def __init__(self):
        self.label: dict[int, str] = {}
        self.bounds: dict[tuple[int, int], PathBound] = {}
        self.succ: dict[int, set[int]] = {}
        self.pred: dict[int, set[int]] = {}
        self.retired: set[int] = set()

    @classmethod
    def from_spec(cls, labels: dict[int, str],
                  edges: Iterable[tuple[int, int, PathBound | int | None]] = ()) -> "PatternGraph":
        p = cls()
        for node, lab in labels.items():
            p.add_node(node, lab)
        for u, v, b in edges:
            p.add_edge(u, v, b)
        return p

    @property
    def nodes(self):
        return self.label.keys()

    def __len__(self) -> int:
        return len(self.label)

    def __contains__(self, node) -> bool:
        return node in self.label

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.bounds

    def edges(self) -> Iterator[tuple[int, int, PathBound]]:
        for (u, v) in sorted(self.bounds):
            yield u, v, self.bounds[(u, v)]

    def add_node(self, node: int, label: str) -> None:
        if node < 0:
            raise ValidationError(f"node id must be non-negative, got {node}")
        if not label:
            raise ValidationError(f"pattern node {node} needs a label")
        if node in self.label:
            raise IdempotencyError(f"pattern node {node} already present")
        if node in self.retired:
            raise IdempotencyError(f"pattern node id {node} was deleted and cannot be reused")
        self.label[node] = label
        self.succ[node] = set()
        self.pred[node] = set()

    def remove_node(self, node: int) -> None:
        if node not in self.label:
            raise IdempotencyError(f"pattern node {node} not present")
        for w in self.succ.pop(node):
            self.pred[w].discard(node)
            del self.bounds[(node, w)]
        for w in self.pred.pop(node):
            self.succ[w].discard(node)
            del self.bounds[(w, node)]
        del self.label[node]
        self.retired.add(node)

    def add_edge(self, u: int, v: int, bound: PathBound | int | None) -> None:
        if not isinstance(bound, PathBound):
            bound = PathBound(bound)
        if u == v:
            raise ValidationError(f"self-loop ({u}, {v}) not allowed in a pattern")
        for x in (u, v):
            if x not in self.label:
                raise ValidationError(f"pattern edge ({u}, {v}) references unknown node {x}")
        if (u, v) in self.bounds:
            raise IdempotencyError(f"pattern edge ({u}, {v}) already present")
        self.bounds[(u, v)] = bound
        self.succ[u].add(v)
        self.pred[v].add(u)

    def remove_edge(self, u: int, v: int) -> PathBound:
        if (u, v) not in self.bounds:
            raise IdempotencyError(f"pattern edge ({u}, {v}) not present")
        self.succ[u].discard(v)
        self.pred[v].discard(u)
        return self.bounds.pop((u, v))

    def copy(self) -> "PatternGraph":
        p = PatternGraph()
        p.label = dict(self.label)
        p.bounds = dict(self.bounds)
        p.succ = {u: set(vs) for u, vs in self.succ.items()}
        p.pred = {u: set(vs) for u, vs in self.pred.items()}
        p.retired = set(self.retired)
        return p

    def is_weakly_connected(self) -> bool:
        if not self.label:
            return True
        start = next(iter(self.label))
        seen, stack = {start}, [start]
        while stack:
            x = stack.pop()
            for y in self.succ[x] | self.pred[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == len(self.label)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PatternGraph):
            return NotImplemented
        return self.label == other.label and self.bounds == other.bounds

    def __repr__(self) -> str:
        return f"PatternGraph({len(self)} nodes, {len(self.bounds)} edges)"


# ---------------------------------------------------------------------------
# text formats

def _content_lines(text: str) -> Iterator[tuple[int, list[str]]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line.split()


def load_data_graph(edge_list_text: str, label_text: str = "", *, strict: bool = False,
                    default_label: str = DEFAULT_LABEL) -> DataGraph:
    """Build a data graph from a SNAP-style edge list and a label file.

    Nodes that appear only in the edge list get ``default_label``; with
    ``strict`` set such edges are rejected instead.  Repeated edges and
    self-loops are dropped and counted on the result as
    ``duplicate_edges`` / ``self_loops``.
    """
    labels: dict[int, frozenset[str]] = {}
    for lineno, parts in _content_lines(label_text):
        if len(parts) != 2:
            raise ParseError(f"expected 'node label[,label...]', got {' '.join(parts)!r}", lineno)
        node = _parse_id(parts[0], lineno)
        labs = parts[1].split(",")
        if any(not lab for lab in labs):
            raise ParseError("empty label", lineno)
        if node in labels:
            raise ParseError(f"node {node} labelled twice", lineno)
        labels[node] = frozenset(labs)

    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    duplicates = loops = 0
    for lineno, parts in _content_lines(edge_list_text):
        if len(parts) != 2:
            raise ParseError(f"expected 'u v', got {' '.join(parts)!r}", lineno)
        u, v = _parse_id(parts[0], lineno), _parse_id(parts[1], lineno)
        for x in (u, v):
            if x not in labels:
                if strict:
                    raise ValidationError(f"line {lineno}: edge references unlabelled node {x}")
                labels[x] = frozenset([default_label])
        if u == v:
            loops += 1
            continue
        if (u, v) in seen:
            duplicates += 1
            continue
        seen.add((u, v))
        edges.append((u, v))
    if duplicates or loops:
        log.warning("edge list: dropped %d duplicate edges and %d self-loops", duplicates, loops)

    g = DataGraph()
    for node in sorted(labels):
        g.add_node(node, labels[node])
    for u, v in edges:
        g.add_edge(u, v)
    g.duplicate_edges = duplicates
    g.self_loops = loops
    return g


def _parse_id(token: str, lineno: int) -> int:
    try:
        node = int(token)
    except ValueError:
        raise ParseError(f"bad node id {token!r}", lineno) from None
    if node < 0:
        raise ParseError(f"negative node id {node}", lineno)
    return node


def dump_edge_list(graph: DataGraph) -> str:
    return "".join(f"{u} {v}\n" for u, v in graph.edges())


def dump_labels(graph: DataGraph) -> str:
    return "".join(f"{node} {','.join(sorted(graph.labels[node]))}\n" for node in sorted(graph.labels))


def load_pattern_graph(pattern_text: str) -> PatternGraph:
    nodes: list[tuple[int, int, str]] = []
    edges: list[tuple[int, int, int, PathBound]] = []
    for lineno, parts in _content_lines(pattern_text):
        if parts[0] == "node" and len(parts) == 3:
            nodes.append((lineno, _parse_id(parts[1], lineno), parts[2]))
        elif parts[0] == "edge" and len(parts) == 4:
            try:
                bound = PathBound.parse(parts[3])
            except ValidationError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from None
            except ParseError as exc:
                raise ParseError(str(exc), lineno) from None
            edges.append((lineno, _parse_id(parts[1], lineno), _parse_id(parts[2], lineno), bound))
        else:
            raise ParseError(f"expected 'node <id> <label>' or 'edge <u> <v> <k|*>', "
                             f"got {' '.join(parts)!r}", lineno)
    p = PatternGraph()
    for lineno, node, lab in nodes:
        try:
            p.add_node(node, lab)
        except IdempotencyError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
    for lineno, u, v, bound in edges:
        try:
            p.add_edge(u, v, bound)
        except (ValidationError, IdempotencyError) as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
    return p


def dump_pattern(pattern: PatternGraph) -> str:
    lines = [f"node {n} {pattern.label[n]}\n" for n in sorted(pattern.label)]
    lines += [f"edge {u} {v} {b}\n" for u, v, b in pattern.edges()]
    return "".join(lines)


def parse_updates(text: str) -> UpdateBatch:
    """Parse ``P|D +E u v [k]``, ``-E u v``, ``+N u labels``, ``-N u`` lines."""
    updates = []
    for lineno, parts in _content_lines(text):
        if len(parts) < 3 or parts[0] not in ("P", "D"):
            raise ParseError(f"bad update line {' '.join(parts)!r}", lineno)
        target = Target(parts[0])
        try:
            kind = Kind(parts[1])
        except ValueError:
            raise ParseError(f"unknown update kind {parts[1]!r}", lineno) from None
        u = _parse_id(parts[2], lineno)
        rest = parts[3:]
        try:
            if kind is Kind.INSERT_EDGE:
                want = 2 if target is Target.PATTERN else 1
                if len(rest) != want:
                    raise ParseError("edge insert arity", lineno)
                bound = PathBound.parse(rest[1]) if target is Target.PATTERN else None
                up = Update(target, kind, u, _parse_id(rest[0], lineno), bound=bound)
            elif kind is Kind.DELETE_EDGE:
                if len(rest) != 1:
                    raise ParseError("edge delete arity", lineno)
                up = Update(target, kind, u, _parse_id(rest[0], lineno))
            elif kind is Kind.INSERT_NODE:
                if len(rest) != 1:
                    raise ParseError("node insert arity", lineno)
                up = Update(target, kind, u, labels=frozenset(rest[0].split(",")))
            else:
                if rest:
                    raise ParseError("node delete arity", lineno)
                up = Update(target, kind, u)
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        updates.append(up)
    return UpdateBatch(updates)


# ---------------------------------------------------------------------------
# update application

def apply_update(graph: DataGraph | PatternGraph, update: Update):
    """Apply ``update`` to ``graph`` in place and return the graph."""
    is_pattern = isinstance(graph, PatternGraph)
    if is_pattern != update.is_pattern:
        raise ContractError(f"{update} does not target a {type(graph).__name__}")
    kind = update.kind
    if kind is Kind.INSERT_EDGE:
        if is_pattern:
            graph.add_edge(update.u, update.v, update.bound)
        else:
            graph.add_edge(update.u, update.v)
    elif kind is Kind.DELETE_EDGE:
        graph.remove_edge(update.u, update.v)
    elif kind is Kind.INSERT_NODE:
        if is_pattern:
            graph.add_node(update.u, next(iter(update.labels)))
        else:
            graph.add_node(update.u, update.labels)
    else:
        graph.remove_node(update.u)
    return graph


def inverse(update: Update, graph: DataGraph | PatternGraph | None = None) -> Update:
    """Update that undoes ``update``.  Node deletes need the pre-state graph for labels."""
    if update.kind is Kind.INSERT_EDGE:
        return Update.delete_edge(update.target, update.u, update.v)
    if update.kind is Kind.INSERT_NODE:
        return Update.delete_node(update.target, update.u)
    if update.kind is Kind.DELETE_EDGE:
        if update.is_pattern:
            if graph is None:
                raise ContractError("inverting a pattern edge delete needs the pattern")
            return Update.insert_edge(update.target, update.u, update.v, graph.bounds[(update.u, update.v)])
        return Update.insert_edge(update.target, update.u, update.v)
    if graph is None:
        raise ContractError("inverting a node delete needs the graph")
    labels = graph.label[update.u] if update.is_pattern else graph.labels[update.u]
    return Update.insert_node(update.target, update.u, labels)


class _Shadow:
    """Existence overlay used to dry-run a batch without copying the graph."""

    def __init__(self, graph: DataGraph | PatternGraph):
        self.graph = graph
        self.base_nodes = graph.label if isinstance(graph, PatternGraph) else graph.labels
        self.added_nodes: set[int] = set()
        self.removed_nodes: set[int] = set()
        self.added_edges: set[tuple[int, int]] = set()
        self.removed_edges: set[tuple[int, int]] = set()

    def has_node(self, x: int) -> bool:
        if x in self.removed_nodes:
            return False
        return x in self.base_nodes or x in self.added_nodes

    def retired(self, x: int) -> bool:
        return x in self.graph.retired or x in self.removed_nodes

    def has_edge(self, u: int, v: int) -> bool:
        if not (self.has_node(u) and self.has_node(v)):
            return False
        if (u, v) in self.added_edges:
            return True
        return self.graph.has_edge(u, v) and (u, v) not in self.removed_edges

    def step(self, up: Update) -> str | None:
        kind = up.kind
        if kind is Kind.INSERT_NODE:
            if self.has_node(up.u):
                return f"node {up.u} already present"
            if self.retired(up.u):
                return f"node id {up.u} was deleted and cannot be reused"
            self.added_nodes.add(up.u)
        elif kind is Kind.DELETE_NODE:
            if not self.has_node(up.u):
                return f"node {up.u} not present"
            self.removed_nodes.add(up.u)
        elif kind is Kind.INSERT_EDGE:
            for x in (up.u, up.v):
                if not self.has_node(x):
                    return f"edge ({up.u}, {up.v}) references unknown node {x}"
            if self.has_edge(up.u, up.v):
                return f"edge ({up.u}, {up.v}) already present"
            self.added_edges.add((up.u, up.v))
            self.removed_edges.discard((up.u, up.v))
        else:
            if not self.has_edge(up.u, up.v):
                return f"edge ({up.u}, {up.v}) not present"
            self.added_edges.discard((up.u, up.v))
            self.removed_edges.add((up.u, up.v))
        return None


def batch_problems(batch: Iterable[Update], pattern: PatternGraph, data: DataGraph) -> list[str]:
    """Every precondition violation in ``batch``, checked in batch order."""
    shadows = {Target.PATTERN: _Shadow(pattern), Target.DATA: _Shadow(data)}
    problems = []
    for up in batch:
        msg = shadows[up.target].step(up)
        if msg is not None:
            problems.append(f"update #{up.ordinal} ({up}): {msg}")
    return problems


def validate_batch(batch: Iterable[Update], pattern: PatternGraph, data: DataGraph) -> None:
    problems = batch_problems(batch, pattern, data)
    if problems:
        raise ValidationError("; ".join(problems))
