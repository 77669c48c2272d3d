from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from ..exceptions import ConfigurationError


class NoiseConvention(str, Enum):
    # sigma^2 per complex sample, SNR = 1 / sigma^2 for a unit-power signal
    PER_SAMPLE = "per_sample_inverse_sigma2"
    # sigma^2 = N0 / (2N), SNR = 1 / N0
    INVERSE_N0 = "paper_inverse_N0"

    @classmethod
    def parse(cls, value) -> "NoiseConvention":
        if isinstance(value, NoiseConvention):
            return value
        text = str(value).strip()
        aliases = {"per_sample": cls.PER_SAMPLE, "inverse_n0": cls.INVERSE_N0}
        if text in aliases:
            return aliases[text]
        try:
            return cls(text)
        except ValueError as exc:
            raise ConfigurationError(f"unknown noise convention: {value!r}") from exc


def sigma2_from_snr(snr_db: float, n: int, convention: NoiseConvention = NoiseConvention.PER_SAMPLE) -> float:
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    linear = 10.0 ** (-snr_db / 10.0)
    if convention is NoiseConvention.INVERSE_N0:
        return linear / (2 * n)
    return linear


def snr_from_sigma2(sigma2: float, n: int, convention: NoiseConvention = NoiseConvention.PER_SAMPLE) -> float:
    if sigma2 <= 0:
        return math.inf
    if convention is NoiseConvention.INVERSE_N0:
        return -10.0 * math.log10(2 * n * sigma2)
    return -10.0 * math.log10(sigma2)


def n0_snr_db(per_sample_snr_db: float, n: int) -> float:
    return per_sample_snr_db - 10.0 * math.log10(2 * n)


def per_sample_snr_db(n0_db: float, n: int) -> float:
    return n0_db + 10.0 * math.log10(2 * n)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise level as either an explicit per-sample variance or an SNR with its convention."""

    sigma2: Optional[float] = None
    snr_db: Optional[float] = None
    convention: NoiseConvention = NoiseConvention.PER_SAMPLE

    def __post_init__(self) -> None:
        object.__setattr__(self, "convention", NoiseConvention.parse(self.convention))
        for name in ("sigma2", "snr_db"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, float(value))
        if self.sigma2 is not None and self.snr_db is not None:
            raise ConfigurationError("noise takes either sigma2 or snr_db, not both")
        if self.sigma2 is not None and self.sigma2 < 0:
            raise ConfigurationError(f"noise sigma2 must be >= 0, got {self.sigma2}")

    @classmethod
    def from_snr(cls, snr_db: float, convention: NoiseConvention = NoiseConvention.PER_SAMPLE) -> "NoiseSpec":
        return cls(snr_db=float(snr_db), convention=convention)

    def variance(self, n: int) -> float:
        if self.sigma2 is not None:
            return float(self.sigma2)
        if self.snr_db is None:
            return 0.0
        return sigma2_from_snr(self.snr_db, n, self.convention)

    def as_dict(self) -> dict:
        return {"sigma2": self.sigma2, "snr_db": self.snr_db, "convention": self.convention.value}


__all__ = [
    "NoiseConvention",
    "NoiseSpec",
    "sigma2_from_snr",
    "snr_from_sigma2",
    "n0_snr_db",
    "per_sample_snr_db",
]
