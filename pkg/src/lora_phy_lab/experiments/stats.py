from __future__ import annotations

import math
from typing import Sequence, Tuple

from scipy.stats import norm


def z_value(confidence: float = 0.95) -> float:
    return float(norm.ppf(1.0 - (1.0 - confidence) / 2.0))


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    z = z_value(confidence)
    rate = successes / trials
    denom = 1.0 + z * z / trials
    centre = (rate + z * z / (2 * trials)) / denom
    spread = z * math.sqrt(rate * (1.0 - rate) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - spread), min(1.0, centre + spread)


def wilson_half_width(successes: int, trials: int, confidence: float = 0.95) -> float:
    low, high = wilson_interval(successes, trials, confidence)
    return (high - low) / 2.0


def intervals_overlap(a: Tuple[float, float], b: Tuple[float, float]) -> bool:
    return a[0] <= b[1] and b[0] <= a[1]


def rate(count: int, total: int) -> float:
    return count / total if total else 0.0


def log_crossing(x: Sequence[float], y: Sequence[float], target: float) -> float:
    """First x at which y falls to `target`, interpolating log10(y) linearly between points.

    Points are taken in ascending x; y must be positive. Returns nan when no pair brackets the target.
    """
    if target <= 0.0:
        raise ValueError(f"target must be positive, got {target}")
    points = sorted(zip((float(value) for value in x), (float(value) for value in y)))
    goal = math.log10(target)
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        if y0 <= 0.0 or y1 <= 0.0:
            raise ValueError("log_crossing needs positive y values")
        if y0 >= target > y1:
            l0, l1 = math.log10(y0), math.log10(y1)
            return x0 + (goal - l0) * (x1 - x0) / (l1 - l0)
    return math.nan


__all__ = ["z_value", "wilson_interval", "wilson_half_width", "intervals_overlap", "rate", "log_crossing"]
