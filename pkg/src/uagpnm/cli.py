"""Command-line entry point: ``uagpnm bench|query|gen-pattern|gen-updates|verify``."""

from __future__ import annotations

import argparse
import logging
import random
import sys
import time
from pathlib import Path

from .bench import (DEFAULT_SCALES, DESK_SCALES, BenchConfig, DigestMismatch, generate_pattern,
                    generate_updates, label_universe, load_dataset, run_benchmark, synthetic_graph)
from .engine import Method, answer_initial_query, answer_subsequent_query
from .errors import GraphError
from .graph import apply_update, dump_pattern, load_data_graph, load_pattern_graph, parse_updates
from .matcher import brute_force_match

log = logging.getLogger("uagpnm")


def _scale(text: str) -> tuple[int, int]:
    try:
        p, n = (int(x) for x in text.strip("()").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'pattern_nodes,updates', got {text!r}") from None
    return p, n


def _methods(text: str) -> list[str]:
    names = [t for t in text.split(",") if t.strip()]
    try:
        return [Method.parse(t.strip()).value for t in names]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", help="SNAP-style edge list; a synthetic graph is used when omitted")
    p.add_argument("--labels", help="label file 'node label[,label...]'; random labels when omitted")
    p.add_argument("--label-count", type=int, default=8, help="number of random labels (default 8)")
    p.add_argument("--label-seed", type=int, default=0)
    p.add_argument("--synthetic", type=_scale, default=(1000, 25000), metavar="NODES,EDGES",
                   help="size of the synthetic graph (default 1000,25000)")


def _dataset_config(args, **extra) -> BenchConfig:
    return BenchConfig(dataset=args.dataset, labels=args.labels, label_count=args.label_count,
                       label_seed=args.label_seed, synthetic_nodes=args.synthetic[0],
                       synthetic_edges=args.synthetic[1], **extra)


def cmd_bench(args) -> int:
    scales = args.scale or (list(DESK_SCALES) if args.desk else list(DEFAULT_SCALES))
    cfg = _dataset_config(args, methods=args.methods, scales=scales, reps=args.reps, seed=args.seed,
                          pattern_seeds=list(range(args.pattern_seeds)), m_p=args.m_p, n_p=args.n_p,
                          out=args.out)
    try:
        report = run_benchmark(cfg, workers=args.workers)
    except DigestMismatch as exc:
        log.error("%s", exc)
        return 3
    if not args.out:
        sys.stdout.write(report.to_csv())
    for m in cfg.methods:
        log.info("%-14s median total %.1f ms", m, report.median_total(m) / 1000)
    return 0


def cmd_query(args) -> int:
    data = load_data_graph(Path(args.dataset).read_text(),
                           Path(args.labels).read_text() if args.labels else "")
    pattern = load_pattern_graph(Path(args.pattern).read_text())
    batch = parse_updates(Path(args.updates).read_text()) if args.updates else parse_updates("")
    session = answer_initial_query(pattern, data)
    lines = []
    result = session.iquery
    for m in args.methods:
        result, after = answer_subsequent_query(session, batch, m)
        st = after.stats
        phases = " ".join(f"{k}={v:.0f}" for k, v in sorted(st.timings_us.items()))
        lines.append(f"# method={st.method} batch={st.batch_size} eliminated={st.eliminated} "
                     f"passes={st.passes} {phases} digest={result.digest()}\n")
    _write("".join(lines) + result.to_text(), args.out)
    return 0


def cmd_gen_pattern(args) -> int:
    labels = sorted(set(args.label_names.split(","))) if args.label_names else label_universe(args.label_count)
    p = generate_pattern(labels, args.nodes, args.edges, seed=args.seed, bounds=(args.bound_min, args.bound_max))
    _write(dump_pattern(p), args.out)
    return 0


def cmd_gen_updates(args) -> int:
    _, data = load_dataset(_dataset_config(args))
    pattern = load_pattern_graph(Path(args.pattern).read_text())
    k = args.scale[1] // 4
    batch = generate_updates(data, pattern, k, k, args.m_p, args.n_p, seed=args.seed,
                             wire_degree=args.wire_degree)
    _write(batch.to_text(), args.out)
    return 0


def cmd_verify(args) -> int:
    """Compare every method with the brute-force oracle on random small instances."""
    t0 = time.perf_counter()
    bad = 0
    for i in range(args.count):
        rng = random.Random(args.seed * 100_003 + i)
        n = rng.randint(8, 50)
        labels = label_universe(rng.randint(2, 5))
        data = synthetic_graph(n, rng.randint(n, 4 * n), len(labels), rng.randrange(1 << 30))
        pattern = generate_pattern(labels, rng.randint(4, 8), seed=rng.randrange(1 << 30))
        k = rng.randint(0, 2)
        batch = generate_updates(data, pattern, k, rng.randint(0, 2), rng.randint(0, 1), rng.randint(0, 1),
                                 labels, seed=rng.randrange(1 << 30))
        session = answer_initial_query(pattern.copy(), data.copy())
        for up in batch:
            apply_update(pattern if up.is_pattern else data, up)
        expected = brute_force_match(pattern, data)
        for m in args.methods:
            got, _ = answer_subsequent_query(session, batch, m)
            if got != expected:
                bad += 1
                print(f"mismatch: instance {i} method {m}")
    print(f"{args.count} instances, {bad} mismatches, {time.perf_counter() - t0:.1f}s")
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uagpnm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    all_methods = ",".join(m.value for m in Method)

    p = sub.add_parser("bench", help="run the benchmark protocol and write CSV")
    _add_dataset_args(p)
    p.add_argument("--methods", type=_methods, default=_methods(all_methods))
    p.add_argument("--scale", type=_scale, action="append",
                   help="(pattern_nodes,data_updates); repeatable. Default: (6,200) up to (10,1000)")
    p.add_argument("--desk", action="store_true", help="use the reduced desk-scale update counts")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--pattern-seeds", type=int, default=5)
    p.add_argument("--m-p", type=int, default=1, help="pattern deletions of each kind")
    p.add_argument("--n-p", type=int, default=1, help="pattern insertions of each kind")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("query", help="answer one subsequent query from files")
    p.add_argument("--dataset", required=True, help="edge list")
    p.add_argument("--labels")
    p.add_argument("--pattern", required=True)
    p.add_argument("--updates")
    p.add_argument("--methods", type=_methods, default=["Ua"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("gen-pattern", help="write a random connected pattern")
    p.add_argument("--nodes", type=int, default=6)
    p.add_argument("--edges", type=int)
    p.add_argument("--label-count", type=int, default=8)
    p.add_argument("--label-names", help="comma separated label universe")
    p.add_argument("--bound-min", type=int, default=1)
    p.add_argument("--bound-max", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_pattern)

    p = sub.add_parser("gen-updates", help="write a random update batch")
    _add_dataset_args(p)
    p.add_argument("--pattern", required=True)
    p.add_argument("--scale", type=_scale, default=(6, 200))
    p.add_argument("--m-p", type=int, default=1)
    p.add_argument("--n-p", type=int, default=1)
    p.add_argument("--wire-degree", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_updates)

    p = sub.add_parser("verify", help="differential run of every method against the oracle")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--methods", type=_methods, default=_methods(all_methods))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (GraphError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
