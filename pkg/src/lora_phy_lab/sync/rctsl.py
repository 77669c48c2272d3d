from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RctslConstants:
    """Interpolation weights of the three-spectral-line estimator for symbol size n."""

    n: int

    @property
    def u(self) -> float:
        return 64.0 * self.n / (math.pi**5 + 32.0 * math.pi)

    @property
    def v(self) -> float:
        return self.u * math.pi**2 / 4.0


def rctsl_offset(power: np.ndarray, k_max: int, constants: RctslConstants) -> float:
    """Offset of the true peak from `k_max`, in bins of a 2x zero-padded spectrum.

    `power` holds |Y_k|^2; the neighbours of `k_max` wrap around the spectrum edges.
    """
    mags = np.asarray(power, dtype=np.float64)
    size = mags.size
    centre = mags[k_max % size]
    upper = mags[(k_max + 1) % size]
    lower = mags[(k_max - 1) % size]
    denominator = constants.u * (upper + lower) + constants.v * centre
    if denominator <= 0.0:
        return 0.0
    return float(constants.n / math.pi * (upper - lower) / denominator)


__all__ = ["RctslConstants", "rctsl_offset"]
