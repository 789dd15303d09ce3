"""``aegispat`` command-line interface.

Exit codes: 0 clean, 1 violations or hazards above threshold, 2 usage or
schema error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import assurance, geometry
from .harness import compare_patterns, load_scenario, run_scenario
from .harness.report import json_lines, report_table, table
from .patterns import CATALOGUE, PatternError, describe
from .schemas import ARCHITECTURE_SCHEMA, SCHEMA_VERSION, TRADE_MATRIX_SCHEMA, SchemaError, load_json

EXIT_OK, EXIT_FINDINGS, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2 on usage errors already; keep the message terse
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    report, _ = run_scenario(scenario, trials=args.trials, jobs=args.jobs)
    if args.max_hazards is not None:
        report.hazard_threshold = args.max_hazards
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    if args.json:
        _out(text)
    else:
        _out(report_table(report.to_dict()))
    return EXIT_FINDINGS if report.exceeds_threshold else EXIT_OK


def cmd_validate(args) -> int:
    data = load_json(args.architecture, ARCHITECTURE_SCHEMA)
    try:
        root = assurance.node_from_dict(data["root"])
        findings = assurance.validate_tree(root, relief=int(data.get("relief_levels", 2)))
    except (assurance.ArchitectureError, assurance.KindMismatch, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    records = [f.to_dict() for f in findings]
    sys.stdout.write(json_lines(records))
    if records:
        _out(table(records, ["severity", "rule", "location", "message"]))
    violations = sum(f.severity is assurance.Severity.VIOLATION for f in findings)
    _out(f"{violations} violation(s), {len(findings) - violations} other finding(s)")
    return EXIT_FINDINGS if violations else EXIT_OK


def cmd_patterns(args) -> int:
    if args.action == "list":
        rows = [{"kind": e.kind, "summary": e.summary} for e in CATALOGUE.values()]
        _out(table(rows, ["kind", "summary"]))
        return EXIT_OK
    if not args.kind:
        raise UsageError("patterns describe needs a pattern kind")
    try:
        entry = describe(args.kind)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc
    _out(json.dumps(entry.to_dict(), indent=2))
    return EXIT_OK


def cmd_oracle(args) -> int:
    try:
        closed = geometry.min_enlargement(args.iou)
        found, witness = geometry.oracle_witness(args.iou, grid=args.grid, refine=args.refine)
    except (geometry.InvalidIoUBound, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    tolerance = 2.0 / args.grid
    result = {
        "schema_version": SCHEMA_VERSION,
        "iou": args.iou,
        "grid": args.grid,
        "refine": args.refine,
        "closed_form": closed,
        "oracle": found,
        "difference": abs(closed - found),
        "tolerance": tolerance,
        "witness": list(witness.as_tuple()),
        "agree": abs(closed - found) <= tolerance,
    }
    _out(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK if result["agree"] else EXIT_FINDINGS


def cmd_tradeoff(args) -> int:
    data = load_json(args.matrix, TRADE_MATRIX_SCHEMA)
    try:
        matrix = assurance.TradeMatrix.from_dict(data)
    except ValueError as exc:
        raise SchemaError("", str(exc)) from exc
    rows = [{"rank": r.rank, "option": r.option, "total": r.total} for r in assurance.score_tradeoffs(matrix)]
    sys.stdout.write(json_lines(rows))
    _out(table(rows, ["rank", "option", "total"]))
    return EXIT_OK


def cmd_compare(args) -> int:
    scenario = load_scenario(args.scenario)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    if not kinds:
        raise UsageError("--kinds needs at least one pattern kind")
    rows = compare_patterns(scenario, kinds, trials=args.trials, jobs=args.jobs)
    sys.stdout.write(json_lines(rows))
    columns = ["kind", "hazard_count", "loss_ticks", "availability", "backup_active", "switch_events",
               "overrides", "failure_rate", "error"]
    _out(table(rows, [c for c in columns if any(c in r for r in rows)]))
    if all("error" in r for r in rows):
        return EXIT_USAGE
    threshold = scenario.hazard_threshold if args.max_hazards is None else args.max_hazards
    return EXIT_FINDINGS if any(r.get("hazard_count", 0) > threshold for r in rows) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aegispat", description="Safety architecture pattern workbench.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a scenario and report hazards, availability and failure rate")
    p.add_argument("scenario")
    p.add_argument("--trials", type=int)
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--json", action="store_true", help="print the JSON report instead of a table")
    p.add_argument("--max-hazards", type=int, help="exit 1 when hazards exceed this (default: scenario value)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for Monte Carlo trials")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="check a DAL allocation file against the rule table")
    p.add_argument("architecture")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("patterns", help="list the pattern catalogue or describe one kind")
    p.add_argument("action", choices=["list", "describe"])
    p.add_argument("kind", nargs="?")
    p.set_defaults(func=cmd_patterns)

    p = sub.add_parser("oracle", help="grid-search oracles")
    p.add_argument("what", choices=["enlargement"])
    p.add_argument("--iou", type=float, required=True)
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--refine", type=int, default=4)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("tradeoff", help="rank options of a weighted trade-off matrix")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("compare", help="run the same scenario under several pattern kinds")
    p.add_argument("scenario")
    p.add_argument("--kinds", required=True, help="comma-separated pattern kinds")
    p.add_argument("--trials", type=int)
    p.add_argument("--max-hazards", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        sys.stderr.write(f"schema error at {exc.pointer or '/'}: {exc.detail}\n")
    except (UsageError, PatternError) as exc:
        sys.stderr.write(f"error: {exc}\n")
    except ValueError as exc:  # construction errors surfacing from scenario content
        sys.stderr.write(f"error: {exc}\n")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
