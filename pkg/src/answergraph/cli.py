"""Command-line front end: load, catalog, plan, run, mine, verify."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from typing import Optional, Sequence

from . import engine
from .catalog import build_catalog, load_catalog, save_catalog
from .planner import plan_edgifier, plan_triangulation, plans_json
from .query import analyze_shape, get_template, parse_query
from .testkit import mine_queries, oracle_evaluate
from .triplestore import ParseError, TripleStore, open_store

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_MISMATCH = 3

log = logging.getLogger("answergraph")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _counts(store: TripleStore) -> str:
    st = store.stats()
    return f"{st['triples']} triples, {st['nodes']} nodes, {st['predicates']} predicates"


def _read_query(path: str):
    with open(path, encoding="utf-8") as fp:
        return parse_query(fp.read())


def _read_catalog(path: str):
    with open(path, encoding="utf-8") as fp:
        return load_catalog(fp)


def cmd_load(args) -> int:
    store = open_store(args.data)
    with open(args.store_out, "w", encoding="utf-8") as fp:
        store.dump_snapshot(fp)
    print(_counts(store))
    return EXIT_OK


def cmd_catalog(args) -> int:
    store = open_store(args.store)
    cat = build_catalog(store)
    with open(args.catalog_out, "w", encoding="utf-8") as fp:
        save_catalog(cat, fp)
    print(f"{len(cat.onegrams)} 1-grams, {len(cat.twograms)} 2-grams over {cat.total_triples} triples")
    return EXIT_OK


def cmd_plan(args) -> int:
    cat = _read_catalog(args.catalog)
    q = _read_query(args.query)
    shape = analyze_shape(q)
    tplan = plan_triangulation(q, shape, cat) if shape.cycles else None
    print(plans_json(plan_edgifier(q, cat), tplan))
    return EXIT_OK


def _decode_row(store: TripleStore, row) -> str:
    return "\t".join(store.nodes.decode(n) for n in row)


def cmd_run(args) -> int:
    store = open_store(args.store)
    cat = _read_catalog(args.catalog)
    q = _read_query(args.query)
    start = time.perf_counter()
    result = engine.evaluate(q, store, cat, edge_burnback=args.edge_burnback, factorize=not args.no_factorize)
    total_ms = (time.perf_counter() - start) * 1000
    for warning in result.plan.warnings:
        log.warning(warning)
    rows = sorted(result.embeddings)
    if args.emit_results:
        for row in rows:
            print(_decode_row(store, row))
    if args.stats_json:
        print(result.stats_json())
        return EXIT_OK
    stats = result.stats_dict()
    stats["totalMs"] = round(total_ms, 3)
    print("query:")
    for line in str(q).splitlines():
        print(f"  {line}")
    print("plan: " + json.dumps(result.plan.to_json()))
    print("stats: " + json.dumps(stats))
    print(f"results: {len(rows)}")
    if not args.emit_results and rows:
        print("sample:")
        print("  " + "\t".join(q.vars))
        for row in rows[:5]:
            print("  " + _decode_row(store, row))
    return EXIT_OK


def cmd_mine(args) -> int:
    store = open_store(args.store)
    cat = _read_catalog(args.catalog)
    tmpl = get_template(args.template)
    if args.limit < 0:
        raise UsageError("limit must be non-negative")
    for mined in mine_queries(tmpl, store, cat, args.limit):
        print(mined.to_json())
    return EXIT_OK


def cmd_verify(args) -> int:
    store = open_store(args.store)
    q = _read_query(args.query)
    cat = build_catalog(store)
    result = engine.evaluate(q, store, cat, edge_burnback=args.edge_burnback)
    got = result.embeddings
    if args.corrupt:
        got = _corrupted(q, result)
    want = oracle_evaluate(q, store)
    if got == want:
        print(f"MATCH {len(got)} = {len(want)}")
        return EXIT_OK
    print(f"MISMATCH {len(got)} != {len(want)}")
    for row in sorted(got - want):
        print("+\t" + _decode_row(store, row))
    for row in sorted(want - got):
        print("-\t" + _decode_row(store, row))
    return EXIT_MISMATCH


def _corrupted(q, result) -> set:
    """Negative-control hook: drop one answer edge pair and re-defactorize."""
    ag = result.ag
    victim = next((e for e in q.edges if ag.size(e)), None)
    if victim is None:
        return result.embeddings | {tuple(-1 for _ in q.vars)}
    rel = ag.rels[victim]
    rel.pairs.discard(*min(rel.pairs))
    return set(engine.generate_embeddings(q, ag))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="answergraph", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("load", help="parse a triple file and write a store snapshot")
    p.add_argument("data")
    p.add_argument("store_out")
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("catalog", help="compute 1-gram/2-gram statistics")
    p.add_argument("store")
    p.add_argument("catalog_out")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("plan", help="print the edge-extension plan (and chords) as JSON")
    p.add_argument("catalog")
    p.add_argument("query")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", help="evaluate a query")
    p.add_argument("store")
    p.add_argument("catalog")
    p.add_argument("query")
    p.add_argument("--edge-burnback", action="store_true")
    p.add_argument("--no-factorize", action="store_true", help="direct-join baseline without an answer graph")
    p.add_argument("--emit-results", action="store_true")
    p.add_argument("--stats-json", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("mine", help="instantiate a template into non-empty queries")
    p.add_argument("store")
    p.add_argument("catalog")
    p.add_argument("template", help="snowflake9 or diamond4")
    p.add_argument("limit", type=int)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("verify", help="compare the pipeline with the brute-force oracle")
    p.add_argument("store")
    p.add_argument("query")
    p.add_argument("--edge-burnback", action="store_true")
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
