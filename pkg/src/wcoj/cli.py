"""Command line driver.

    wcoj serial --graph g.txt --query 'tri(a1,a2,a3) := e(a1,a2), e(a2,a3), e(a3,a1)'
    wcoj static --graph g.txt --query q.txt --workers 4 --batch 16 --metrics-out m.json
    wcoj delta --graph empty --updates stream.txt --query q.txt --count-only

Subcommands pick the engine: serial (single process), static (distributed),
static-balanced (distributed, skew resilient), delta (incremental over an
update stream), oracle (brute force reference). The graph file may be the
literal word "empty". --opt sym renumbers and deduplicates an undirected
graph, --opt tri additionally exposes the ternary triangle relation under the
name "tri", --opt factor (serial only) reports the factorized result.
"""

from __future__ import annotations

import argparse
import os
import sys
from collections import Counter

from .balanced import run_static_balanced
from .dataflow import run_static
from .delta import run_delta_batch
from .errors import EngineError
from .extindex import IndexCatalog
from .generic_join import JoinStats, run as run_serial
from .graphio import read_edges, read_updates
from .mvindex import DynamicGraphStore
from .optimize import (
    build_triangle_relation,
    factorizable_order,
    run_factorized,
    symmetry_break,
)
from .queryparse import materialize_derived, parse_query
from .runtime import WorkerConfig, metrics_json
from .testkit import oracle_join

_COMMANDS = ("static", "static-balanced", "delta", "serial", "oracle")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", required=True,
                        help="edge list file, or the word 'empty'")
    common.add_argument("--updates", help="update stream file (delta only)")
    common.add_argument("--query", required=True,
                        help="query file or literal query text")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--batch", type=int, default=16,
                        help="per-worker batch size")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for the partitioning hash")
    common.add_argument("--count-only", action="store_true",
                        help="print only the result count")
    common.add_argument("--metrics-out", help="write run metrics as JSON lines")
    common.add_argument("--opt", action="append", choices=("sym", "tri", "factor"),
                        default=[], help="repeatable: sym, tri, factor")

    parser = argparse.ArgumentParser(
        prog="wcoj", description="Worst-case optimal joins for subgraph queries."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _load_query_text(arg: str) -> str:
    if os.path.isfile(arg):
        with open(arg, encoding="utf-8") as fh:
            return fh.read()
    return arg


def _emit(lines, out):
    for line in lines:
        print(line, file=out)


def _write_metrics(path: str | None, reports: list[dict]) -> None:
    if path is None:
        return
    with open(path, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(metrics_json(report))


def _run(args, out) -> int:
    edges = [] if args.graph == "empty" else read_edges(args.graph)
    if "sym" in args.opt:
        edges, _ = symmetry_break(edges)
    relations = {"e": edges}
    arities = {"e": 2}
    if "tri" in args.opt:
        relations["tri"] = build_triangle_relation(edges)
        arities["tri"] = 3
    if "factor" in args.opt and args.command != "serial":
        raise ValueError("--opt factor applies to the serial command only")
    if args.updates and args.command != "delta":
        raise ValueError("--updates applies to the delta command only")

    parsed = parse_query(_load_query_text(args.query), arities)
    relations = materialize_derived(relations, parsed.derived)
    cfg = WorkerConfig(
        workers=args.workers, batch_per_worker=args.batch, seed=args.seed
    )
    q, filters = parsed.query, parsed.filters

    if args.command == "delta":
        if not args.updates:
            raise ValueError("delta needs --updates")
        batches = read_updates(args.updates)
        if not batches:
            if args.count_only:
                print(0, file=out)
            _write_metrics(args.metrics_out, [])
            return 0
        store = DynamicGraphStore(edges, load_time=batches[0][0].time - 1)
        acc: Counter = Counter()
        reports = []
        for batch in batches:
            res = run_delta_batch(q, store, batch, cfg, filters=filters)
            acc.update(res.changes)
            reports.append(res.metrics)
            if not args.count_only:
                t = batch[0].time
                for tup in sorted(res.changes):
                    sign = "+" if res.changes[tup] > 0 else "-"
                    _emit([f"{t} {sign} " + " ".join(map(str, tup))], out)
        _write_metrics(args.metrics_out, reports)
        total = sum(acc.values())
        if args.count_only:
            print(total, file=out)
        return 0

    if args.command == "serial" and "factor" in args.opt:
        stats = JoinStats()
        q = q.with_order(factorizable_order(q, filters))
        fres = run_factorized(q, relations, filters=filters, stats=stats)
        if args.count_only:
            print(fres.flat_count, file=out)
        else:
            _emit(
                (" ".join(map(str, t)) for t in sorted(fres.flatten())), out
            )
        _write_metrics(
            args.metrics_out,
            [{"outputs": fres.flat_count, "records": len(fres.records),
              "probes": stats.as_dict()}],
        )
        return 0

    if args.command == "serial":
        stats = JoinStats()
        tuples = run_serial(q, relations, filters=filters, stats=stats)
        report = {"outputs": len(tuples), "probes": stats.as_dict()}
    elif args.command == "oracle":
        counted = oracle_join(q, relations, filters=filters)
        tuples = sorted(counted.elements())
        report = {"outputs": len(tuples)}
    elif args.command == "static":
        res = run_static(q, relations, cfg, filters=filters)
        tuples = res.tuples
        report = res.metrics
    else:
        res = run_static_balanced(q, relations, cfg, filters=filters)
        tuples = res.tuples
        report = res.metrics

    if args.count_only:
        print(len(tuples), file=out)
    else:
        _emit((" ".join(map(str, t)) for t in sorted(tuples)), out)
    _write_metrics(args.metrics_out, [report])
    return 0


def main(argv=None, out=None) -> int:
    args = _build_parser().parse_args(argv)
    out = out if out is not None else sys.stdout
    try:
        return _run(args, out)
    except (EngineError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
