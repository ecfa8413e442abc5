"""Benchmark protocol: labelled datasets, random patterns and update
batches, and a cross-method timing report with result digests."""

from __future__ import annotations

import csv
import io
import json
import logging
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .engine import Method, answer_initial_query, answer_subsequent_query
from .errors import ValidationError
from .graph import DataGraph, PatternGraph, Target, Update, UpdateBatch, load_data_graph

log = logging.getLogger(__name__)

DEFAULT_SCALES = [(6, 200), (7, 400), (8, 600), (9, 800), (10, 1000)]
DESK_SCALES = [(6, 40), (7, 80), (8, 120), (9, 160), (10, 200)]
COLUMNS = ["dataset", "method", "pattern_nodes", "data_updates", "pattern_seed", "rep", "seed",
           "batch", "sets_us", "detect_us", "apply_us", "match_us", "total_us",
           "eliminated", "passes", "digest"]


class DigestMismatch(RuntimeError):
    """Two methods disagreed on the answer for the same inputs."""


@dataclass
class BenchConfig:
    dataset: str | None = None
    labels: str | None = None
    synthetic_nodes: int = 1000
    synthetic_edges: int = 25000
    label_count: int = 8
    label_seed: int = 0
    pattern_edges_extra: int = 2
    bound_min: int = 1
    bound_max: int = 3
    pattern_seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    scales: list[tuple[int, int]] = field(default_factory=lambda: list(DEFAULT_SCALES))
    m_p: int = 1
    n_p: int = 1
    wire_degree: int = 2
    methods: list[str] = field(default_factory=lambda: [m.value for m in Method])
    reps: int = 5
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.bound_min < 1 or self.bound_max < self.bound_min:
            raise ValidationError("bound range must satisfy 1 <= min <= max")
        for m in self.methods:
            Method.parse(m)

    def echo(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


# ---------------------------------------------------------------------------
# datasets

def assign_labels(graph: DataGraph, label_count: int, seed: int) -> DataGraph:
    """Same edges, each node labelled with one of ``L0..L{label_count-1}``."""
    rng = random.Random(seed)
    universe = label_universe(label_count)
    labels = {node: rng.choice(universe) for node in sorted(graph.nodes)}
    return DataGraph.from_edges(labels, graph.edges())


def label_universe(label_count: int) -> list[str]:
    return [f"L{i}" for i in range(label_count)]


def synthetic_graph(nodes: int, edges: int, label_count: int = 8, seed: int = 0) -> DataGraph:
    """Directed graph with skewed degrees, as a stand-in for a SNAP edge list."""
    if edges > nodes * (nodes - 1):
        raise ValidationError("too many edges for a simple directed graph")
    rng = np.random.default_rng(seed)
    weight = 1.0 / np.arange(1, nodes + 1) ** 0.6
    weight = rng.permutation(weight / weight.sum())
    chosen: set[tuple[int, int]] = set()
    while len(chosen) < edges:
        k = 2 * (edges - len(chosen))
        src = rng.choice(nodes, size=k, p=weight)
        dst = rng.choice(nodes, size=k, p=weight[::-1])
        for a, b in zip(src.tolist(), dst.tolist()):
            if a != b:
                chosen.add((a, b))
                if len(chosen) == edges:
                    break
    pyrng = random.Random(seed)
    universe = label_universe(label_count)
    labels = {i: pyrng.choice(universe) for i in range(nodes)}
    return DataGraph.from_edges(labels, sorted(chosen))


def load_dataset(cfg: BenchConfig) -> tuple[str, DataGraph]:
    if cfg.dataset is None:
        name = f"synthetic-{cfg.synthetic_nodes}-{cfg.synthetic_edges}"
        return name, synthetic_graph(cfg.synthetic_nodes, cfg.synthetic_edges, cfg.label_count, cfg.label_seed)
    path = Path(cfg.dataset)
    label_text = Path(cfg.labels).read_text() if cfg.labels else ""
    graph = load_data_graph(path.read_text(), label_text)
    if not cfg.labels:
        graph = assign_labels(graph, cfg.label_count, cfg.label_seed)
    return path.stem, graph


# ---------------------------------------------------------------------------
# generators

def generate_pattern(labels: list[str], nodes: int, edges: int | None = None, seed: int = 0,
                     bounds: tuple[int, int] = (1, 3)) -> PatternGraph:
    """Weakly connected random pattern: a random spanning tree plus extra edges."""
    if edges is None:
        edges = min(nodes + 2, nodes * (nodes - 1))
    if nodes < 1:
        raise ValidationError("a pattern needs at least one node")
    if edges < nodes - 1:
        raise ValidationError(f"{edges} edges cannot connect {nodes} nodes")
    if edges > nodes * (nodes - 1):
        raise ValidationError(f"{edges} edges do not fit on {nodes} nodes")
    rng = random.Random(seed)
    p = PatternGraph()
    for i in range(nodes):
        p.add_node(i, rng.choice(labels))
    for i in range(1, nodes):
        j = rng.randrange(i)
        a, b = (i, j) if rng.random() < 0.5 else (j, i)
        p.add_edge(a, b, rng.randint(*bounds))
    free = [(a, b) for a in range(nodes) for b in range(nodes) if a != b and not p.has_edge(a, b)]
    rng.shuffle(free)
    for a, b in free[: edges - (nodes - 1)]:
        p.add_edge(a, b, rng.randint(*bounds))
    return p


def _interleave(rng: random.Random, first: list, second: list) -> list:
    slots = [0] * len(first) + [1] * len(second)
    rng.shuffle(slots)
    it = (iter(first), iter(second))
    return [next(it[s]) for s in slots]


def _data_updates(data: DataGraph, m: int, n: int, labels: list[str], wire: int,
                  rng: random.Random) -> list[Update]:
    live = sorted(data.nodes)
    base_edges = sorted(data.edge_set())
    if m > len(live) or m > len(base_edges):
        raise ValidationError(f"cannot delete {m} nodes/edges from a graph with "
                              f"{len(live)} nodes and {len(base_edges)} edges")
    kinds = ["-E"] * m + ["-N"] * m + ["+N"] * n + ["+E"] * n
    rng.shuffle(kinds)
    alive = set(live)
    edges = set(base_edges)
    deleted_edges: set[tuple[int, int]] = set()
    fresh: list[int] = []
    wired: dict[int, int] = {}
    next_id = data.capacity
    out = []
    for kind in kinds:
        if kind == "-E":
            cand = [e for e in base_edges if e in edges]
            if not cand:
                raise ValidationError(f"no edge left for deletion {len(deleted_edges) + 1} of {m}")
            e = rng.choice(cand)
            edges.discard(e)
            deleted_edges.add(e)
            out.append(Update.delete_edge(Target.DATA, *e))
        elif kind == "-N":
            pool = sorted(alive - set(fresh))
            if not pool:
                raise ValidationError("no original node left to delete")
            x = rng.choice(pool)
            alive.discard(x)
            edges = {e for e in edges if x not in e}
            out.append(Update.delete_node(Target.DATA, x))
        elif kind == "+N":
            x = next_id
            next_id += 1
            alive.add(x)
            fresh.append(x)
            wired[x] = 0
            out.append(Update.insert_node(Target.DATA, x, rng.choice(labels)))
        else:
            pool = sorted(alive)
            pending = [x for x in fresh if x in alive and wired[x] < wire]
            for _ in range(1000):
                if pending:
                    x = pending[0]
                    y = rng.choice(pool)
                    e = (x, y) if rng.random() < 0.5 else (y, x)
                else:
                    e = (rng.choice(pool), rng.choice(pool))
                if e[0] != e[1] and e not in edges and e not in deleted_edges:
                    break
            else:
                raise ValidationError("could not place an edge insertion")
            if pending:
                wired[pending[0]] += 1
            edges.add(e)
            out.append(Update.insert_edge(Target.DATA, *e))
    return out


def _pattern_updates(pattern: PatternGraph, m: int, n: int, labels: list[str],
                     bounds: tuple[int, int], rng: random.Random) -> list[Update]:
    if m >= len(pattern):
        raise ValidationError("pattern node deletions would empty the pattern")
    kinds = ["-E"] * m + ["-N"] * m + ["+N"] * n + ["+E"] * n
    rng.shuffle(kinds)
    alive = set(pattern.nodes)
    edges = set(pattern.bounds)
    base_edges = sorted(pattern.bounds)
    deleted: set[tuple[int, int]] = set()
    fresh: list[int] = []
    next_id = max(pattern.nodes, default=-1) + 1 + len(pattern.retired)
    out = []
    for kind in kinds:
        if kind == "-E":
            cand = [e for e in base_edges if e in edges]
            if not cand:
                kind = "+E"
            else:
                e = rng.choice(cand)
                edges.discard(e)
                deleted.add(e)
                out.append(Update.delete_edge(Target.PATTERN, *e))
                continue
        if kind == "-N":
            x = rng.choice(sorted(alive - set(fresh)))
            alive.discard(x)
            edges = {e for e in edges if x not in e}
            out.append(Update.delete_node(Target.PATTERN, x))
        elif kind == "+N":
            x = next_id
            next_id += 1
            alive.add(x)
            fresh.append(x)
            out.append(Update.insert_node(Target.PATTERN, x, rng.choice(labels)))
        else:
            pool = sorted(alive)
            loose = [x for x in fresh if x in alive and not any(x in e for e in edges)]
            choices = [(a, b) for a in pool for b in pool
                       if a != b and (a, b) not in edges and (a, b) not in deleted
                       and (not loose or loose[0] in (a, b))]
            if not choices:
                continue
            e = rng.choice(choices)
            edges.add(e)
            out.append(Update.insert_edge(Target.PATTERN, e[0], e[1], rng.randint(*bounds)))
    return out


def generate_updates(data: DataGraph, pattern: PatternGraph, m_g: int, n_g: int, m_p: int = 1,
                     n_p: int = 1, labels: list[str] | None = None, seed: int = 0,
                     wire_degree: int = 2, bounds: tuple[int, int] = (1, 3)) -> UpdateBatch:
    """Random valid batch: ``m_g`` edge and node deletions and ``n_g`` edge and
    node insertions on the data graph, likewise ``m_p``/``n_p`` on the pattern.

    New data nodes are wired with up to ``wire_degree`` of the edge
    insertions.  No generated pair cancels out.
    """
    rng = random.Random(seed)
    if labels is None:
        labels = sorted({lab for labs in data.labels.values() for lab in labs})
    data_ups = _data_updates(data, m_g, n_g, labels, wire_degree, rng)
    pat_ups = _pattern_updates(pattern, m_p, n_p, labels, bounds, rng)
    batch = UpdateBatch(_interleave(rng, data_ups, pat_ups))
    assert batch.annihilated == 0
    return batch


# ---------------------------------------------------------------------------
# runner

@dataclass
class BenchRow:
    dataset: str
    method: str
    pattern_nodes: int
    data_updates: int
    pattern_seed: int
    rep: int
    seed: int
    batch: int
    sets_us: float
    detect_us: float
    apply_us: float
    match_us: float
    total_us: float
    eliminated: int
    passes: int
    digest: str


@dataclass
class BenchReport:
    config: BenchConfig
    rows: list[BenchRow] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# config {self.config.echo()}\n")
        buf.write("# scale = (pattern_nodes, data_updates); data updates split evenly over "
                  "edge/node deletions and insertions\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([getattr(r, c) if not c.endswith("_us") else f"{getattr(r, c):.1f}" for c in COLUMNS])
        return buf.getvalue()

    def median_total(self, method: str) -> float:
        vals = [r.total_us for r in self.rows if r.method == method]
        return statistics.median(vals) if vals else float("nan")


def _warm_up() -> None:
    g = synthetic_graph(30, 120, 3, 1)
    p = generate_pattern(label_universe(3), 4, seed=1)
    s = answer_initial_query(p, g)
    b = generate_updates(g, p, 3, 3, labels=label_universe(3), seed=1)
    for m in Method:
        answer_subsequent_query(s, b, m)


def run_case(session, batch: UpdateBatch, methods: list[str]):
    """Run every method from the same initial session; returns (method, stats, digest) triples."""
    out = []
    for name in methods:
        result, after = answer_subsequent_query(session, batch, name)
        out.append((Method.parse(name).value, after.stats, result.digest()))
    return out


def _run_group(cfg: BenchConfig, dataset: str, graph: DataGraph, labels: list[str],
               pseed: int, p_nodes: int, n_updates: int) -> list[BenchRow]:
    pattern = generate_pattern(labels, p_nodes, p_nodes + cfg.pattern_edges_extra,
                               seed=cfg.seed * 1000 + pseed, bounds=(cfg.bound_min, cfg.bound_max))
    session = answer_initial_query(pattern, graph)
    rows = []
    for rep in range(cfg.reps):
        seed = cfg.seed * 1_000_000 + pseed * 10_000 + n_updates * 10 + rep
        k = n_updates // 4
        batch = generate_updates(graph, pattern, k, k, cfg.m_p, cfg.n_p, labels, seed,
                                 cfg.wire_degree, (cfg.bound_min, cfg.bound_max))
        results = run_case(session, batch, cfg.methods)
        if len({d for _, _, d in results}) > 1:
            raise DigestMismatch(f"methods disagree on pattern seed {pseed}, scale "
                                 f"({p_nodes}, {n_updates}), rep {rep}: "
                                 + ", ".join(f"{m}={d}" for m, _, d in results))
        for method, st, digest in results:
            t = st.timings_us
            rows.append(BenchRow(
                dataset, method, p_nodes, n_updates, pseed, rep, seed, st.batch_size,
                t.get("sets", 0.0), t.get("detect", 0.0), t.get("apply", 0.0), t.get("match", 0.0),
                st.total_us, st.eliminated, st.passes, digest))
    log.info("pattern seed %d scale (%d, %d) done", pseed, p_nodes, n_updates)
    return rows


def _run_group_star(args):
    _warm_up()
    return _run_group(*args)


def run_benchmark(cfg: BenchConfig, workers: int = 1) -> BenchReport:
    """Full protocol: one initial query per (pattern seed, scale), then every
    method on ``reps`` update batches.  Raises :class:`DigestMismatch` when
    methods disagree."""
    report = BenchReport(cfg)
    if not cfg.methods:
        if cfg.out:
            Path(cfg.out).write_text(report.to_csv())
        return report
    dataset, graph = load_dataset(cfg)
    labels = sorted({lab for labs in graph.labels.values() for lab in labs})
    jobs = [(cfg, dataset, graph, labels, pseed, p, n)
            for pseed in cfg.pattern_seeds for p, n in cfg.scales]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            for rows in pool.map(_run_group_star, jobs):
                report.rows.extend(rows)
    else:
        _warm_up()
        for job in jobs:
            report.rows.extend(_run_group(*job))
    if cfg.out:
        Path(cfg.out).write_text(report.to_csv())
    return report


def desk_config(**overrides) -> BenchConfig:
    """Reduced grid that finishes in about a minute on one core."""
    base = dict(synthetic_nodes=300, synthetic_edges=3000, scales=list(DESK_SCALES))
    base.update(overrides)
    return BenchConfig(**base)
