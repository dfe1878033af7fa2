"""Exact rational helpers.

Everything in the package is a :class:`fractions.Fraction`. This module only
adds strict parsing, canonical text output and a small dispatch helper.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Union

Rational = Fraction

_RATIONAL_RE = re.compile(r"-?\d+(/\d+)?")


class RationalParseError(ValueError):
    """Raised for text that is not an exact rational literal."""


def parse_rational(text: str) -> Fraction:
    """Parse ``[-]digits`` or ``[-]digits/digits`` into a canonical Fraction."""
    token = text.strip()
    if not _RATIONAL_RE.fullmatch(token):
        raise RationalParseError(f"malformed rational: {token!r}")
    if "/" in token:
        num, den = token.split("/")
        if int(den) == 0:
            raise RationalParseError(f"zero denominator in {token!r}")
        return Fraction(int(num), int(den))
    return Fraction(int(token))


def format_rational(r: Fraction, decimal: bool = False) -> str:
    """Return ``num/den`` (always with a denominator), optionally with a decimal."""
    r = Fraction(r)
    text = f"{r.numerator}/{r.denominator}"
    if decimal:
        text += f" ~{float(r):.16g}"
    return text


def to_float_text(r: Fraction, digits: int = 16) -> str:
    return f"{float(r):.{digits}g}"


_OPS = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
    "min": min,
    "max": max,
    "cmp": lambda a, b: (a > b) - (a < b),
}


def rational_arithmetic(lhs: Fraction, rhs: Fraction, op: str) -> Union[Fraction, int]:
    """Apply ``op`` exactly. ``cmp`` returns -1, 0 or 1."""
    try:
        fn = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    if op == "div" and rhs == 0:
        raise ZeroDivisionError("division by zero rational")
    return fn(Fraction(lhs), Fraction(rhs))
