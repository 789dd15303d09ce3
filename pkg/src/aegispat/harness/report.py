"""Plain-text rendering of reports, findings and tables."""

from __future__ import annotations

import json
from typing import Any, Iterable, Mapping, Sequence


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if value is None:
        return "-"
    return str(value)


def table(rows: Sequence[Mapping[str, Any]], columns: Sequence[str]) -> str:
    """Aligned text table; numeric columns are right-aligned."""
    cells = [[_cell(r.get(c)) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    numeric = [all(isinstance(r.get(c), (int, float)) or r.get(c) is None for r in rows) for c in columns]

    def fmt(row):
        return "  ".join(v.rjust(w) if num else v.ljust(w) for v, w, num in zip(row, widths, numeric)).rstrip()

    lines = [fmt(list(columns)), fmt(["-" * w for w in widths])]
    lines += [fmt(row) for row in cells]
    return "\n".join(lines)


def json_lines(records: Iterable[Mapping[str, Any]]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def report_table(report: Mapping[str, Any]) -> str:
    rate = report["failure_rate_per_hour"]
    rows = [
        {"metric": "pattern", "value": report["pattern"]},
        {"metric": "trials", "value": str(report["trials"])},
        {"metric": "ticks", "value": str(report["total_ticks"])},
        {"metric": "hazards", "value": str(report["hazard_count"])},
        {"metric": "loss ticks", "value": str(report["loss_ticks"])},
        {"metric": "availability", "value": f"{report['availability']:.6f}"},
        {"metric": "backup active", "value": f"{report['backup_active']:.6f}"},
        {"metric": "switch events", "value": str(report["switch_events"])},
        {"metric": "overrides", "value": str(report["overrides"])},
        {"metric": "failure rate / hour",
         "value": f"{rate['rate']:.6g} [{rate['lower']:.6g}, {rate['upper']:.6g}] over {rate['hours']} h"},
    ]
    return f"scenario {report['scenario']} (seed {report['seed']})\n" + table(rows, ["metric", "value"])
