"""``supc`` command line: compose, check, gen, bench."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .composer import CapacityError, FlowTable, compose
from .conflict import check_all, workers_from_env
from .generator import GenSpec, generate, render_corpus, run_bench
from .ingest import parse_firewall_file, parse_ids_file

log = logging.getLogger("supc")

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_ERROR = 2


def _write(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_compose(args) -> int:
    rules = []
    for paths, parse in ((args.fw, parse_firewall_file), (args.ids, parse_ids_file)):
        for path in paths:
            parsed, diagnostics = parse(Path(path).read_bytes(), path)
            for d in diagnostics:
                print(d, file=sys.stderr)
            rules.extend(parsed)
    table = compose(rules)
    _write(args.output, table.to_json())
    log.info("composed %d rules into %d flow rules", len(rules), len(table))
    return EXIT_OK if len(table) else EXIT_FINDINGS


def cmd_check(args) -> int:
    table = FlowTable.from_json(Path(args.table).read_text(encoding="utf-8"))
    workers = workers_from_env(args.workers)
    report = check_all(table, workers=workers)
    _write(args.output, report.to_json(table))
    return EXIT_FINDINGS if report.conflicts else EXIT_OK


def cmd_gen(args) -> int:
    spec = GenSpec(args.total, args.distinct, args.fw_fraction, args.seed, args.overlap)
    fw_text, ids_text = render_corpus(generate(spec))
    _write(args.output, fw_text)
    _write(args.ids_output, ids_text)
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = GenSpec(args.total, args.distinct, args.fw_fraction, args.seed, args.overlap)
    result = run_bench(spec, workers=workers_from_env(args.workers))
    if args.json:
        sys.stdout.write(json.dumps(result.to_dict(), indent=2) + "\n")
        return EXIT_OK
    rows = [
        ("input rules", result.input_rule_count),
        ("composed rules", result.composed_rule_count),
        ("compose (ms)", f"{result.compose_duration:.2f}"),
        ("check (ms)", f"{result.check_duration:.2f}"),
    ]
    rows += [(f"{kind} conflicts", n) for kind, n in result.conflicts.items()]
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        print(f"{name:<{width}}  {value}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="supc", description="Flow rule composition and conflict analysis")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compose", help="parse SF rule files and write a flow table")
    p.add_argument("--fw", nargs="+", action="extend", default=[], metavar="FILE")
    p.add_argument("--ids", nargs="+", action="extend", default=[], metavar="FILE")
    p.add_argument("-o", dest="output", required=True, metavar="TABLE_JSON")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("check", help="detect conflicts in a flow table")
    p.add_argument("table")
    p.add_argument("-o", dest="output", required=True, metavar="REPORT_JSON")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_check)

    def corpus_args(p, with_overlap_default=0.0):
        p.add_argument("--total", type=int, required=True)
        p.add_argument("--distinct", type=int, required=True)
        p.add_argument("--fw-fraction", type=float, default=0.5)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--overlap", type=float, default=with_overlap_default)

    p = sub.add_parser("gen", help="write a synthetic firewall/IDS corpus")
    corpus_args(p)
    p.add_argument("-o", dest="output", required=True, metavar="FW_RULES")
    p.add_argument("-o-ids", dest="ids_output", required=True, metavar="IDS_RULES")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="time generate -> compose -> check")
    corpus_args(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (OSError, UnicodeDecodeError, ValueError, KeyError, CapacityError) as exc:
        print(f"supc: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
