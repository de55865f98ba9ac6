"""Circuit-size thresholds past which a classical solver is certified to win.

Given an entropy-density threshold ``c`` (the output entropy density at
which a classical solver already matches the best achievable quantum
energy), the global-depolarising model turns ``S2/n >= c`` into a condition
on width and depth. The earlier relative-entropy-contraction condition,
``D >= ln(1/(1-c)) / (2 p2)``, is provided for comparison.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable

LN2 = math.log(2.0)


def _check_c(c: float, allow_one: bool = False):
    upper_ok = c <= 1.0 if allow_one else c < 1.0
    if not (0.0 < c and upper_ok):
        raise ValueError(f"entropy-density threshold c={c} outside (0, 1)")


def _log_mixedness_ratio(n: int, c: float) -> float:
    """``ln((2^n - 1) / (2^(n(1-c)) - 1))`` without forming 2^n."""
    a = n * LN2
    b = n * (1.0 - c) * LN2
    if b <= 0:
        raise ValueError("threshold undefined: 2^(n(1-c)) must exceed 1")
    return a + math.log1p(-math.exp(-a)) - b - math.log(-math.expm1(-b))


def depth_threshold(n: int, c: float, alpha1: float, alpha2: float) -> float:
    """Smallest depth at which a width-``n`` circuit reaches entropy density ``c``."""
    if n < 1:
        raise ValueError("width must be at least 1")
    _check_c(c)
    coefficient = 2.0 * (2.0 * alpha1 * n + alpha2 * (n - 1))
    if coefficient <= 0:
        raise ValueError("threshold undefined without gate noise")
    return _log_mixedness_ratio(n, c) / coefficient


def depth_threshold_asymptotic(c: float, p2: float) -> float:
    """Large-width limit of :func:`depth_threshold` with only two-qubit noise: ``c ln2 / (2 p2)``."""
    _check_c(c, allow_one=True)
    if p2 <= 0:
        raise ValueError("p2 must be positive")
    return c * LN2 / (2.0 * p2)


def prior_threshold(c: float, p2: float) -> float:
    """Relative-entropy-contraction condition ``ln(1/(1-c)) / (2 p2)``."""
    _check_c(c)
    if p2 <= 0:
        raise ValueError("p2 must be positive")
    return -math.log1p(-c) / (2.0 * p2)


def dominance_gap(c: float) -> float:
    """``c ln2 + ln(1 - c)``; non-positive means the new bound is the tighter one."""
    if not 0.0 <= c < 1.0:
        raise ValueError(f"c={c} outside [0, 1)")
    return c * LN2 + math.log1p(-c)


@dataclass(frozen=True)
class ThresholdReport:
    n: int | None  # None for the large-width limit
    c: float
    this_work_depth: float
    prior_depth: float

    @property
    def asymptotic(self) -> bool:
        return self.n is None

    def certified_classical(self, depth: float) -> bool:
        """True when ``depth`` already guarantees no quantum advantage."""
        return depth >= self.this_work_depth


def threshold_report(c: float, p2: float, n: int | None = None, alpha1: float = 0.0) -> ThresholdReport:
    prior = prior_threshold(c, p2)
    if n is None:
        this = depth_threshold_asymptotic(c, p2)
    else:
        this = depth_threshold(n, c, alpha1, p2)
    return ThresholdReport(n, c, this, prior)


def frontier_curve(c: float, p2: float, n_range: Iterable[int]) -> list[tuple[int, float, float]]:
    """Rows ``(n, this_work_depth, prior_depth)``; widths with zero noise coefficient are skipped."""
    widths = list(n_range)
    if not widths:
        raise ValueError("empty width range")
    prior = prior_threshold(c, p2)
    rows = []
    for n in widths:
        if n < 2:
            continue
        rows.append((n, depth_threshold(n, c, 0.0, p2), prior))
    return rows


def frontier_csv(rows: Iterable[tuple[int, float, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "depth_this_work", "depth_prior"])
    for n, this, prior in rows:
        writer.writerow([n, repr(this), repr(prior)])
    return buf.getvalue()
