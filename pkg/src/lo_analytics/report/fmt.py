"""Fixed-precision number formatting shared by tables and charts."""

from __future__ import annotations

import math
from decimal import ROUND_HALF_EVEN, Decimal

_QUANTUM = Decimal("0.000001")


def fmt6(value: float) -> str:
    """Six decimals, round-half-even on the exact binary value."""
    if value is None or not math.isfinite(value):
        return ""
    text = str(Decimal(value).quantize(_QUANTUM, rounding=ROUND_HALF_EVEN))
    return "0.000000" if text == "-0.000000" else text


def round6(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return float(fmt6(value))
