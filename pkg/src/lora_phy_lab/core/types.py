from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..exceptions import ConfigurationError

Symbol = int


@dataclass(frozen=True, eq=False)
class IqBuffer:
    """Complex baseband samples; `origin_index` is the global index of samples[0]."""

    samples: np.ndarray
    origin_index: int = 0

    def __post_init__(self) -> None:
        if self.origin_index < 0:
            raise ConfigurationError(f"origin_index must be >= 0, got {self.origin_index}")
        samples = np.array(self.samples, dtype=np.complex128).ravel()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "origin_index", int(self.origin_index))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def global_indices(self) -> np.ndarray:
        return self.origin_index + np.arange(self.samples.size, dtype=np.float64)

    def with_samples(self, samples: np.ndarray) -> "IqBuffer":
        return IqBuffer(samples, self.origin_index)

    def energy(self) -> float:
        return float(np.vdot(self.samples, self.samples).real)


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    magnitudes_sq: np.ndarray
    k_max: int
    complex_bins: Optional[np.ndarray] = None

    @classmethod
    def from_bins(cls, bins: np.ndarray, keep_complex: bool = True) -> "SpectrumResult":
        mags = np.abs(bins) ** 2
        return cls(mags, int(np.argmax(mags)), bins if keep_complex else None)

    @classmethod
    def from_power(cls, magnitudes_sq: np.ndarray) -> "SpectrumResult":
        mags = np.asarray(magnitudes_sq, dtype=np.float64)
        return cls(mags, int(np.argmax(mags)))

    @property
    def size(self) -> int:
        return int(self.magnitudes_sq.size)

    @property
    def peak_power(self) -> float:
        return float(self.magnitudes_sq[self.k_max])


def samples_of(signal) -> np.ndarray:
    if isinstance(signal, IqBuffer):
        return signal.samples
    return np.asarray(signal, dtype=np.complex128)


__all__ = ["Symbol", "IqBuffer", "SpectrumResult", "samples_of"]
