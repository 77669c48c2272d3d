from __future__ import annotations

import math

import numpy as np

from ..exceptions import ConfigurationError

FRACTIONAL_TAPS = 63


def fractional_delay_taps(mu: float, n_taps: int = FRACTIONAL_TAPS) -> np.ndarray:
    """Hann-windowed sinc interpolator for a delay of `mu` in [0, 1), unit DC gain."""
    if not 0.0 <= mu < 1.0:
        raise ConfigurationError(f"fractional delay must be in [0, 1), got {mu}")
    if n_taps % 2 == 0:
        raise ConfigurationError(f"fractional delay filter needs an odd tap count, got {n_taps}")
    half = n_taps // 2
    x = np.arange(-half, half + 1, dtype=np.float64) - mu
    taps = np.sinc(x) * np.cos(np.pi * x / (n_taps + 1)) ** 2
    return taps / taps.sum()


def _shift(samples: np.ndarray, steps: int) -> np.ndarray:
    out = np.zeros_like(samples)
    if abs(steps) >= samples.size:
        return out
    if steps >= 0:
        out[steps:] = samples[: samples.size - steps]
    else:
        out[:steps] = samples[-steps:]
    return out


def fractional_delay(samples: np.ndarray, delay: float, n_taps: int = FRACTIONAL_TAPS) -> np.ndarray:
    """Same-length output y[n] ~ x[n - delay] for any real delay; samples outside x count as zero."""
    x = np.asarray(samples, dtype=np.complex128)
    whole = math.floor(delay)
    mu = float(delay) - whole
    if mu >= 1.0:
        # tiny negative delays round up to a full sample
        whole, mu = whole + 1, 0.0
    if mu > 0.0 and x.size:
        half = n_taps // 2
        x = np.convolve(x, fractional_delay_taps(mu, n_taps))[half : half + x.size]
    return _shift(x, int(whole)) if whole else x.copy()


__all__ = ["FRACTIONAL_TAPS", "fractional_delay_taps", "fractional_delay"]
