"""Correlation, Student-t significance and box-plot summaries in pure Python."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DegenerateInput, EmptyInput

_CF_EPS = 1e-15
_CF_TINY = 1e-300
_CF_MAX_ITER = 10_000


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    p: float
    n: int
    method: str = "pearson"


@dataclass(frozen=True)
class BoxStats:
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    lower_whisker: float
    upper_whisker: float
    outliers: tuple[float, ...] = field(default_factory=tuple)

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample product-moment correlation (mean-centred, compensated sums)."""
    n = len(x)
    if n != len(y):
        raise DegenerateInput(f"length mismatch: {n} vs {len(y)}")
    if n < 3:
        raise DegenerateInput(f"need at least 3 pairs, got {n}")
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise DegenerateInput("zero variance")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    if len(x) != len(y):
        raise DegenerateInput(f"length mismatch: {len(x)} vs {len(y)}")
    return pearson(average_ranks(x), average_ranks(y))


def _beta_cf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def regularized_beta(a: float, b: float, x: float, one_minus_x: float | None = None) -> float:
    """I_x(a, b). Pass ``one_minus_x`` when it is known more precisely than ``1 - x``."""
    y = 1.0 - x if one_minus_x is None else one_minus_x
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log(y))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_cf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_cf(b, a, y) / b


def student_t_two_tailed(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise DegenerateInput("degrees of freedom must be positive")
    t2 = t * t
    if t2 == 0:
        return 1.0
    denom = df + t2
    return regularized_beta(df / 2.0, 0.5, df / denom, t2 / denom)


def p_value_two_tailed(r: float, n: int) -> float:
    if n < 3:
        raise DegenerateInput(f"need n >= 3, got {n}")
    if not -1.0 <= r <= 1.0:
        raise DegenerateInput(f"r must lie in [-1, 1], got {r}")
    # a perfect fit has no finite t statistic; its two-tailed p is 0
    if abs(r) == 1.0:
        return 0.0
    if r == 0:
        return 1.0
    df = n - 2
    t = r * math.sqrt(df / ((1.0 - r) * (1.0 + r)))
    return min(1.0, student_t_two_tailed(t, df))


def correlate(x: Sequence[float], y: Sequence[float], method: str = "pearson") -> CorrelationResult:
    if method == "pearson":
        r = pearson(x, y)
    elif method == "spearman":
        r = spearman(x, y)
    else:
        raise ValueError(f"unknown correlation method {method!r}")
    return CorrelationResult(r=r, p=p_value_two_tailed(r, len(x)), n=len(x), method=method)


def quantile_linear(sorted_values: Sequence[float], prob: float) -> float:
    """Quantile by linear interpolation between order statistics (R type 7)."""
    n = len(sorted_values)
    if n == 0:
        raise EmptyInput("no values")
    h = (n - 1) * prob
    lo = math.floor(h)
    if lo + 1 >= n:
        return sorted_values[-1]
    frac = h - lo
    a, b = sorted_values[lo], sorted_values[lo + 1]
    return a if frac == 0 else a + frac * (b - a)


def box_stats(values: Sequence[float], whisker_k: float = 1.5) -> BoxStats:
    """Tukey box summary: type-7 quartiles, whiskers at the furthest points within k*IQR."""
    data = sorted(float(v) for v in values)
    if not data:
        raise EmptyInput("box_stats needs at least one value")
    if any(not math.isfinite(v) for v in data):
        raise ValueError("box_stats values must be finite")
    q1 = quantile_linear(data, 0.25)
    median = quantile_linear(data, 0.5)
    q3 = quantile_linear(data, 0.75)
    iqr = q3 - q1
    low_fence = q1 - whisker_k * iqr
    high_fence = q3 + whisker_k * iqr
    inside = [v for v in data if low_fence <= v <= high_fence]
    lower = min(inside[0], q1) if inside else q1
    upper = max(inside[-1], q3) if inside else q3
    outliers = tuple(v for v in data if v < lower or v > upper)
    return BoxStats(n=len(data), min=data[0], q1=q1, median=median, q3=q3, max=data[-1],
                    lower_whisker=lower, upper_whisker=upper, outliers=outliers)
