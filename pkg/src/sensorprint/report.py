"""Text and CSV rendering of experiment result records.

CSV output is the experiment's main table (columns listed in README.md),
one header row then one row per entry. Floats use ``repr`` so the CSV is
exact and byte-stable; text output rounds for reading.
"""

from __future__ import annotations

import csv
import io

from sensorprint.experiments import MAIN_TABLE

FORMATS = ("text", "csv")


def _fmt(value, digits: int = 4) -> str:
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def _metric_line(name: str, value) -> str:
    # entropies are always shown in bits with three decimals
    digits = 3 if name.startswith("entropy") else 4
    unit = " bits" if name.startswith("entropy") else ""
    return f"  {name}: {_fmt(value, digits)}{unit}"


def text_report(result: dict) -> str:
    lines = [f"experiment: {result['experiment']}", f"seed: {result['seed']}", "metrics:"]
    lines += [_metric_line(k, v) for k, v in result["metrics"].items()]
    for name, table in result["tables"].items():
        cols = table["columns"]
        cells = [[_fmt(v) for v in row] for row in table["rows"]]
        widths = [max([len(c)] + [len(r[i]) for r in cells]) for i, c in enumerate(cols)]
        lines.append(f"table {name}:")
        lines.append("  " + "  ".join(c.rjust(w) for c, w in zip(cols, widths)))
        lines += ["  " + "  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


def csv_report(result: dict, table: str | None = None) -> str:
    name = table or MAIN_TABLE[result["experiment"]]
    t = result["tables"][name]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(t["columns"])
    for row in t["rows"]:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def emit_report(result: dict, fmt: str = "text") -> str:
    if fmt == "text":
        return text_report(result)
    if fmt == "csv":
        return csv_report(result)
    raise ValueError(f"unknown report format {fmt!r}; choose text or csv")
