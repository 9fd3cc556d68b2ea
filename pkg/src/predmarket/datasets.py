"""CSV tables behind the burn-curve, value-surface and capped-CFD plots.

Comma-separated, header row, LF line endings, 6-decimal renderings of
exact values.  Same parameters give byte-identical output.
"""
from __future__ import annotations

import csv
import io
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence

from . import cfd, glove
from .numeric import Number, fmt_decimal, to_fraction

FIGURES = ("fig2", "fig4", "fig6")


class DatasetError(ValueError):
    pass


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_decimal(x) if isinstance(x, Fraction) else x for x in row])
    return buf.getvalue()


def fig2(n: int = 100, p: Number = 0, initial: Optional[int] = None) -> str:
    """Total value of a "+" holder keeping m of ``initial`` shares against n "−" shares."""
    initial = n if initial is None else initial
    if initial < 1 or n < 1:
        raise DatasetError("fig2 needs n >= 1 and at least one share")
    rows = glove.burn_curve(glove.Side.PLUS, initial, n, p)
    return _csv(["m", "total_value"], rows)


def fig4(n: int = 100, ms: Optional[Iterable[int]] = None, ps: Optional[Iterable[Number]] = None) -> str:
    ms = list(range(1, n + 1)) if ms is None else list(ms)
    ps = [Fraction(i, 4) for i in range(5)] if ps is None else [to_fraction(p) for p in ps]
    if any(m < 1 for m in ms):
        raise DatasetError("m grid values must be positive")
    try:
        rows = glove.value_surface(n, ms, ps)
    except glove.GloveError as exc:
        raise DatasetError(str(exc)) from exc
    return _csv(["p", "m", "total_value"], rows)


def fig6(low: Number = 20, high: Number = 40, grid: Optional[Iterable[Number]] = None) -> str:
    low, high = to_fraction(low), to_fraction(high)
    if grid is None:
        if (high - low).denominator != 1:
            raise DatasetError("default grid needs integer-spaced barriers; pass an explicit grid")
        grid = [low + i for i in range(int(high - low) + 1)]
    try:
        rows = cfd.capped_cfd_curve(low, high, grid)
    except cfd.CfdError as exc:
        raise DatasetError(str(exc)) from exc
    return _csv(["c", "yes", "no"], rows)


_BUILDERS: Dict[str, Callable[..., str]] = {"fig2": fig2, "fig4": fig4, "fig6": fig6}


def emit_dataset(which: str, out_path: Optional[str] = None, **params) -> str:
    """Build the table for ``which``; write it to ``out_path`` when given."""
    try:
        builder = _BUILDERS[which]
    except KeyError:
        raise DatasetError(f"unknown dataset {which!r}; choose from {list(FIGURES)}") from None
    text = builder(**params)
    if out_path is not None:
        with open(out_path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    return text


def parse_rows(text: str) -> List[Dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))
