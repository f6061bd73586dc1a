"""CSV and JSON serialization helpers shared by the artifact writers.

All floating-point cells are written with 17 significant digits so that
round-tripping through text preserves the double exactly and identical runs
produce byte-identical files.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence


def fmt(value: float | int | str | None) -> str:
    """One CSV cell: 17-significant-digit floats, empty for None/NaN."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, int)) and not isinstance(value, float):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    return "%.17g" % v


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Join header and rows into CSV text with a trailing newline."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(cell) for cell in row))
    return "\n".join(lines) + "\n"


def vector_columns(prefix: str, dim: int) -> list[str]:
    return [f"{prefix}_{i}" for i in range(dim)]
