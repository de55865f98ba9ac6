from __future__ import annotations

import math

# a handful of rounding steps (log, products, a quotient) separate the
# computed value from the exact one
_ULPS = 16


def round_up(x: float) -> int:
    """Ceiling that ignores float noise just above an integer."""
    # ln(2 / (2 / e**2)) evaluates to 2.0000000000000004
    nearest = round(x)
    if abs(x - nearest) <= _ULPS * math.ulp(nearest):
        return int(nearest)
    return math.ceil(x)
