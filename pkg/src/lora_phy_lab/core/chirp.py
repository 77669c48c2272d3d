from __future__ import annotations

from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from ..config import ChirpParams
from ..exceptions import ConfigurationError
from .types import IqBuffer, SpectrumResult, Symbol, samples_of

Signal = Union[IqBuffer, np.ndarray]


def _phase_numerator(symbols: np.ndarray, n: int) -> np.ndarray:
    """Integer numerator m of the chirp phase 2*pi*m/(2N), reduced mod 2N."""
    idx = np.arange(n, dtype=np.int64)
    s = np.asarray(symbols, dtype=np.int64)[..., None]
    return (idx * idx + (2 * s - n) * idx) % (2 * n)


def _check_symbols(symbols: np.ndarray, n: int) -> None:
    if symbols.size and (symbols.min() < 0 or symbols.max() >= n):
        raise ConfigurationError(f"symbol values must be in [0, {n})")


def modulate_symbols(symbols: Sequence[Symbol], p: ChirpParams) -> np.ndarray:
    """Phase-continuous chirps for every symbol, concatenated."""
    values = np.asarray(symbols, dtype=np.int64).ravel()
    _check_symbols(values, p.n)
    if values.size == 0:
        return np.zeros(0, dtype=np.complex128)
    numerator = _phase_numerator(values, p.n)
    return np.exp(1j * np.pi * numerator / p.n).ravel()


def modulate_symbol(s: Symbol, p: ChirpParams) -> IqBuffer:
    return IqBuffer(modulate_symbols([s], p))


@lru_cache(maxsize=None)
def _reference(sf: int) -> np.ndarray:
    n = 1 << sf
    chirp = np.exp(1j * np.pi * _phase_numerator(np.array(0), n) / n).ravel()
    chirp.setflags(write=False)
    return chirp


def reference_upchirp(p: ChirpParams) -> IqBuffer:
    return IqBuffer(_reference(p.sf))


def reference_downchirp(p: ChirpParams) -> IqBuffer:
    return IqBuffer(np.conj(_reference(p.sf)))


def reference_quarter_downchirp(p: ChirpParams) -> IqBuffer:
    return IqBuffer(np.conj(_reference(p.sf))[: p.n // 4])


def dechirp_dft(window: Signal, ref: Signal, k: int) -> SpectrumResult:
    """Multiply `window` by conj(`ref`) (tiled over the window), zero-pad to `k`, DFT."""
    samples = samples_of(window)
    reference = samples_of(ref)
    if reference.size == 0 or not reference.size <= samples.size <= k:
        raise ConfigurationError(
            f"dechirp needs ref length <= window length <= K, got {reference.size}, {samples.size}, {k}"
        )
    if samples.size % reference.size:
        raise ConfigurationError(
            f"window length {samples.size} is not a multiple of reference length {reference.size}"
        )
    tiled = np.tile(reference, samples.size // reference.size)
    return SpectrumResult.from_bins(np.fft.fft(samples * np.conj(tiled), n=k))


def demodulate(window: Signal, ref: Optional[Signal], p: ChirpParams) -> Symbol:
    samples = samples_of(window)
    if samples.size != p.n:
        raise ConfigurationError(f"demodulation window must have N = {p.n} samples, got {samples.size}")
    reference = _reference(p.sf) if ref is None else samples_of(ref)
    return dechirp_dft(samples, reference, p.n).k_max


def dechirp_power(windows: np.ndarray, ref: Signal, k: Optional[int] = None) -> np.ndarray:
    """|DFT|^2 of every row of `windows` after dechirping, one row per window."""
    rows = np.atleast_2d(np.asarray(windows, dtype=np.complex128))
    reference = samples_of(ref)
    if rows.shape[1] != reference.size:
        raise ConfigurationError(f"window rows of {rows.shape[1]} samples do not match reference {reference.size}")
    if rows.shape[0] == 0:
        return np.zeros((0, k or rows.shape[1]), dtype=np.float64)
    bins = np.fft.fft(rows * np.conj(reference)[None, :], n=k or rows.shape[1], axis=1)
    return np.abs(bins) ** 2


def nearest_bins(power: np.ndarray, n: int) -> np.ndarray:
    """Nearest N-grid bin of each row's peak in a 2N-point (2x zero-padded) power spectrum.

    A peak on an odd (half-bin) index goes to whichever whole bin has the stronger neighbour.
    """
    rows = np.atleast_2d(np.asarray(power, dtype=np.float64))
    size = rows.shape[1]
    k2 = np.argmax(rows, axis=1)
    index = np.arange(rows.shape[0])
    left = rows[index, (k2 - 1) % size]
    right = rows[index, (k2 + 1) % size]
    half = np.where(right > left, (k2 + 1) // 2, (k2 - 1) // 2)
    return (np.where(k2 % 2 == 1, half, k2 // 2) % n).astype(np.int64)


def demodulate_windows(
    windows: np.ndarray,
    p: ChirpParams,
    ref: Optional[Signal] = None,
    zero_pad: bool = False,
) -> np.ndarray:
    """Hard decision per row; `zero_pad` decides on a 2N-point spectrum to cut the loss at fractional bins."""
    reference = _reference(p.sf) if ref is None else samples_of(ref)
    if zero_pad:
        return nearest_bins(dechirp_power(windows, reference, k=2 * p.n), p.n)
    return np.argmax(dechirp_power(windows, reference), axis=1).astype(np.int64)


__all__ = [
    "modulate_symbol",
    "modulate_symbols",
    "reference_upchirp",
    "reference_downchirp",
    "reference_quarter_downchirp",
    "dechirp_dft",
    "dechirp_power",
    "demodulate",
    "demodulate_windows",
    "nearest_bins",
]
