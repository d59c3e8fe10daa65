"""Sorted-order linear-interpolation quantiles.

Shared by the drift percentile in the audit and the bootstrap interval so both
use one convention. Positive infinity is allowed in the sample: interpolating
towards an infinite neighbour yields infinity instead of NaN.
"""
from __future__ import annotations

import math
from typing import Iterable


def quantile(values: Iterable[float], q: float) -> float:
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile level must lie in [0, 1], got {q}")
    xs = sorted(float(v) for v in values)
    if not xs:
        raise ValueError("quantile of an empty sample")
    pos = q * (len(xs) - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, len(xs) - 1)
    frac = pos - lo
    a, b = xs[lo], xs[hi]
    if frac == 0.0 or a == b:
        return a
    if math.isinf(b):
        return b
    return a + (b - a) * frac
