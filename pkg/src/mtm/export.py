"""CSV/JSON rendering shared by the library and the CLI."""
from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from typing import Iterable, Sequence


def format_value(x) -> str:
    """Reduced fraction ``p/q`` for rationals, 17 significant digits otherwise."""
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return f"{x}/1"
    return format(float(x), ".17g")


def json_value(x):
    if isinstance(x, (Fraction, int)) and not isinstance(x, bool):
        return format_value(x)
    return float(x)


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([format_value(v) if isinstance(v, (Fraction, float)) else v for v in r])
    return buf.getvalue()


def render_json(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    recs = [{h: json_value(v) if isinstance(v, (Fraction, float)) else v for h, v in zip(header, r)} for r in rows]
    return json.dumps(recs, indent=1, sort_keys=False) + "\n"


def render(header: Sequence[str], rows: Iterable[Sequence], fmt: str = "csv") -> str:
    rows = list(rows)
    return render_json(header, rows) if fmt == "json" else render_csv(header, rows)


def point_table(dist: dict, fmt: str = "csv") -> str:
    return render(("point_id", "probability"), sorted(dist.items()), fmt)


def grid_table(dist: dict, coords: Sequence, fmt: str = "csv") -> str:
    """``i,j,probability`` rows for models whose points carry coordinates."""
    rows = sorted((coords[u][0], coords[u][1], p) for u, p in dist.items())
    return render(("i", "j", "probability"), rows, fmt)


def destination_table(dist: dict, at, fmt: str = "csv") -> str:
    return render(("dest_id", f"probability_at_{at}"), sorted(dist.items()), fmt)
