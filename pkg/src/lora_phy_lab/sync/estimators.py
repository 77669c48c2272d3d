from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..channel.impairments import frequency_shift
from ..config import ChirpParams
from ..core.chirp import dechirp_power, reference_upchirp
from ..core.types import SpectrumResult
from ..exceptions import SyncFailure
from .rctsl import RctslConstants, rctsl_offset

# Residual power below this fraction of the peak counts as a noiseless spectrum.
NOISELESS_FLOOR = 1e-12


def wrap_unit(value: float) -> float:
    """value mod 1 in [0, 1), safe against round-up to 1.0."""
    wrapped = float(value) % 1.0
    return 0.0 if wrapped >= 1.0 else wrapped


def signed_fraction(value: float) -> float:
    """Map a fraction in [0, 1) to the nearest signed residual in [-0.5, 0.5)."""
    return value - 1.0 if value >= 0.5 else value


def signed_bin(value: int, n: int) -> int:
    value %= n
    return value - n if value >= n // 2 else value


def estimate_integer_offsets(upchirp_bin: int, downchirp_bin: int, n: int) -> Tuple[int, int]:
    """Split the preamble and downchirp bins into (l_sto mod n, l_cfo).

    A window that starts l_sto samples before a symbol boundary, under l_cfo bins
    of carrier offset, demodulates upchirps to l_cfo - l_sto and downchirps to
    l_cfo + l_sto. The carrier offset is resolved into (-n/4, n/4); a pair whose
    sum is odd disagrees by one bin and the lower candidate is kept.
    """
    up = int(upchirp_bin) % n
    down = int(downchirp_bin) % n
    half = ((up + down) % n) // 2
    quarter = n // 4
    if half == quarter:
        raise SyncFailure("integer", f"carrier offset aliases at +/-{quarter} bins (bins {up}, {down})")
    l_cfo = half if half < quarter else half - n // 2
    l_sto = (down - l_cfo) % n
    return l_sto, l_cfo


def _rows(windows, n: int) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(windows, dtype=np.complex128))
    if rows.shape[1] != n:
        raise SyncFailure("estimate", f"windows must hold N = {n} samples, got {rows.shape[1]}")
    return rows


def estimate_lambda_cfo(preamble_syms, p: ChirpParams) -> float:
    """Fractional carrier offset from a coherent, 2x zero-padded DFT over the preamble block."""
    n = p.n
    rows = _rows(preamble_syms, n)
    count = rows.shape[0]
    if count < 2:
        raise SyncFailure("lambda_cfo", f"need at least 2 preamble windows, got {count}")
    block = (rows * np.conj(reference_upchirp(p).samples)[None, :]).ravel()
    power = np.abs(np.fft.fft(block, n=2 * count * n)) ** 2
    k_max = int(np.argmax(power))
    k_alpha = rctsl_offset(power, k_max, RctslConstants(n))
    return wrap_unit((k_max + k_alpha) / (2 * count))


@dataclass(frozen=True, eq=False)
class CompensatedPreamble:
    """Preamble windows after carrier offset compensation; the only input the STO estimator takes."""

    windows: np.ndarray
    applied_cfo_bins: float


def compensate_cfo(windows, cfo_bins: float, p: ChirpParams, start_index: int = 0) -> CompensatedPreamble:
    """Remove `cfo_bins` of carrier offset from consecutive windows starting at `start_index`."""
    rows = _rows(windows, p.n)
    flat = frequency_shift(rows.ravel(), -float(cfo_bins) / p.n, start_index)
    return CompensatedPreamble(flat.reshape(rows.shape), float(cfo_bins))


def estimate_lambda_sto(preamble: CompensatedPreamble, p: ChirpParams) -> float:
    """Fractional sampling offset from noncoherently combined 2N-point DFTs."""
    if not isinstance(preamble, CompensatedPreamble):
        raise SyncFailure("lambda_sto", "the carrier offset must be compensated before estimating lambda_sto")
    n = p.n
    rows = _rows(preamble.windows, n)
    if rows.shape[0] < 1:
        raise SyncFailure("lambda_sto", "no preamble windows")
    power = dechirp_power(rows, reference_upchirp(p), k=2 * n).sum(axis=0)
    k_max = int(np.argmax(power))
    k_alpha = rctsl_offset(power, k_max, RctslConstants(n))
    # a delay of tau samples puts the dechirped tone at -tau bins
    return wrap_unit(-(k_max + k_alpha) / 2.0)


def estimate_snr(spectrum: SpectrumResult) -> float:
    """Peak-bin power over the power of every other bin, in dB.

    Returns +inf for a noiseless spectrum and nan for an all-zero one.
    """
    mags = np.asarray(spectrum.magnitudes_sq, dtype=np.float64)
    peak = float(mags[spectrum.k_max])
    rest = float(mags.sum() - peak)
    if peak <= 0.0:
        return math.nan
    if rest <= NOISELESS_FLOOR * peak:
        return math.inf
    return 10.0 * math.log10(peak / rest)


def calibrate_snr_db(raw_db: float, n: int) -> float:
    """Per-sample SNR (A^2 / sigma^2) implied by a peak-to-rest ratio of an N-point spectrum."""
    if math.isnan(raw_db) or math.isinf(raw_db):
        return raw_db
    ratio = 10.0 ** (raw_db / 10.0)
    linear = (ratio * (n - 1) - 1.0) / n
    if linear <= 0.0:
        return -math.inf
    return 10.0 * math.log10(linear)


__all__ = [
    "wrap_unit",
    "signed_fraction",
    "signed_bin",
    "estimate_integer_offsets",
    "estimate_lambda_cfo",
    "CompensatedPreamble",
    "compensate_cfo",
    "estimate_lambda_sto",
    "estimate_snr",
    "calibrate_snr_db",
]
