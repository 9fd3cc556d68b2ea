"""Exact-number helpers shared by every module.

All amounts, probabilities and prices are :class:`fractions.Fraction`.
Floats are refused on input so that nothing inexact leaks into a result path.
"""
from __future__ import annotations

from decimal import Decimal
from fractions import Fraction
from typing import Union

Number = Union[int, str, Fraction, Decimal]


def to_fraction(value: Number) -> Fraction:
    """Parse ``value`` into an exact rational.

    Accepts ints, Fractions, Decimals and strings in decimal (``"0.1"``) or
    fraction (``"1/10"``) syntax.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not amounts")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Decimal)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational number: {value!r}") from exc
    if isinstance(value, float):
        raise TypeError(f"float {value!r} is inexact; pass a string such as '0.1' or '1/10'")
    raise TypeError(f"cannot interpret {type(value).__name__} as a rational")


def fmt_decimal(value: Fraction | int, places: int = 6) -> str:
    """Render ``value`` with ``places`` fractional digits, rounding half to even."""
    value = Fraction(value)
    scaled = round(value * 10**places)  # Fraction.__round__ is half-even
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(places + 1, "0")
    if places == 0:
        return sign + digits
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def fmt_fraction(value: Fraction | int) -> str:
    return str(Fraction(value))
