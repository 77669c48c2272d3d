from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
from scipy.signal import resample_poly

from ..config import ChirpParams, ImpairmentSpec
from ..core.types import IqBuffer
from ..exceptions import ConfigurationError
from .fracdelay import fractional_delay

LOGGER = logging.getLogger(__name__)


def apply_sto(sig: IqBuffer, tau_sto: float) -> IqBuffer:
    """Delay by tau_sto samples: an L-sample zero prefix, then the fractional part by FIR.

    The output holds len(sig) + L samples, plus one more when the fractional part is
    non-zero so the delayed tail is kept.
    """
    if tau_sto < 0:
        raise ConfigurationError(f"tau_sto must be >= 0, got {tau_sto}")
    whole = int(math.floor(tau_sto))
    frac = float(tau_sto) - whole
    padded = np.concatenate(
        [
            np.zeros(whole, dtype=np.complex128),
            sig.samples,
            np.zeros(1 if frac > 0 else 0, dtype=np.complex128),
        ]
    )
    return sig.with_samples(fractional_delay(padded, frac))


def frequency_shift(samples: np.ndarray, cycles_per_sample: float, start_index: float = 0.0) -> np.ndarray:
    """Multiply by exp(j 2 pi f n) with n counted from `start_index`."""
    x = np.asarray(samples, dtype=np.complex128)
    n = start_index + np.arange(x.size, dtype=np.float64)
    return x * np.exp(2j * np.pi * cycles_per_sample * n)


def apply_cfo(sig: IqBuffer, delta_fc_hz: float, sample_rate_hz: float) -> IqBuffer:
    return sig.with_samples(frequency_shift(sig.samples, delta_fc_hz / sample_rate_hz, sig.origin_index))


def apply_gain(sig: IqBuffer, h: complex) -> IqBuffer:
    return sig.with_samples(sig.samples * complex(h))


def complex_awgn(size: int, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    scale = math.sqrt(sigma2 / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def apply_awgn(sig: IqBuffer, sigma2: float, rng: np.random.Generator) -> IqBuffer:
    if sigma2 < 0:
        raise ConfigurationError(f"noise variance must be >= 0, got {sigma2}")
    if sigma2 == 0:
        return sig
    return sig.with_samples(sig.samples + complex_awgn(len(sig), sigma2, rng))


def transmit_through(
    sig: IqBuffer,
    spec: ImpairmentSpec,
    p: ChirpParams,
    rng: Optional[np.random.Generator] = None,
) -> IqBuffer:
    """Delay, carrier offset, flat gain and AWGN, in that order.

    With oversampling the delay and offset are applied at the sample rate and the
    result is decimated back to the chip rate before the noise is added.
    """
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    factor = p.oversampling
    if factor > 1:
        wide = IqBuffer(resample_poly(sig.samples, factor, 1), sig.origin_index * factor)
        wide = apply_sto(wide, spec.tau_sto * factor)
        wide = apply_cfo(wide, spec.delta_fc_hz, p.sample_rate_hz)
        shaped = sig.with_samples(resample_poly(wide.samples, 1, factor))
    else:
        shaped = apply_sto(sig, spec.tau_sto)
        shaped = apply_cfo(shaped, spec.delta_fc_hz, p.bandwidth_hz)
    shaped = apply_gain(shaped, spec.h)
    sigma2 = spec.noise.variance(p.n)
    LOGGER.debug(
        "Channel: tau_sto=%.4f cfo=%.4f bins sigma2=%.3g", spec.tau_sto, spec.tau_cfo(p), sigma2
    )
    return apply_awgn(shaped, sigma2, rng)


__all__ = [
    "apply_sto",
    "frequency_shift",
    "apply_cfo",
    "apply_gain",
    "complex_awgn",
    "apply_awgn",
    "transmit_through",
]
