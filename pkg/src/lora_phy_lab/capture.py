from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np

from .config import ChirpParams
from .core.types import IqBuffer, samples_of
from .exceptions import CaptureError, ConfigurationError
from .utils.io import ensure_dir, suffixed, write_json

LOGGER = logging.getLogger(__name__)

FORMAT_TAG = "cf32_le"
SIDECAR_SUFFIX = ".json"


def sidecar_path(path: Path) -> Path:
    return suffixed(path, SIDECAR_SUFFIX)


def write_cf32(path: Path, samples) -> Path:
    """Interleaved little-endian float32 I/Q pairs, no header."""
    values = samples_of(samples)
    interleaved = np.empty(2 * values.size, dtype="<f4")
    interleaved[0::2] = values.real
    interleaved[1::2] = values.imag
    path = Path(path)
    ensure_dir(path.parent)
    path.write_bytes(interleaved.tobytes())
    return path


def read_cf32(path: Path) -> np.ndarray:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) % 8:
        raise CaptureError(f"{path}: {len(raw)} bytes is not a whole number of cf32 samples")
    floats = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return floats[0::2] + 1j * floats[1::2]


@dataclass
class CaptureMetadata:
    sample_rate_hz: float
    sf: int
    bandwidth_hz: float
    n_samples: int
    format: str = FORMAT_TAG
    extras: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def for_params(cls, p: ChirpParams, n_samples: int, **extras: Any) -> "CaptureMetadata":
        # captures hold chip-rate samples; the channel decimates oversampled runs
        return cls(
            sample_rate_hz=float(p.bandwidth_hz),
            sf=p.sf,
            bandwidth_hz=float(p.bandwidth_hz),
            n_samples=int(n_samples),
            extras=dict(extras),
        )

    def check_params(self, p: ChirpParams) -> None:
        if self.sf != p.sf or float(self.bandwidth_hz) != float(p.bandwidth_hz):
            raise ConfigurationError(
                f"capture was recorded with sf={self.sf}, bandwidth_hz={self.bandwidth_hz}; "
                f"config has sf={p.sf}, bandwidth_hz={p.bandwidth_hz}"
            )

    def as_dict(self) -> Dict[str, Any]:
        return {
            "format": self.format,
            "sample_rate_hz": self.sample_rate_hz,
            "sf": self.sf,
            "bandwidth_hz": self.bandwidth_hz,
            "n_samples": self.n_samples,
            **self.extras,
        }


def write_sidecar(path: Path, metadata: CaptureMetadata) -> Path:
    return write_json(sidecar_path(path), metadata.as_dict(), sort_keys=True)


def read_sidecar(path: Path) -> CaptureMetadata:
    sidecar = sidecar_path(path)
    if not sidecar.exists():
        raise CaptureError(f"missing sidecar metadata {sidecar}")
    try:
        data = json.loads(sidecar.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CaptureError(f"{sidecar}: {exc}") from exc
    if data.get("format") != FORMAT_TAG:
        raise CaptureError(f"{sidecar}: unsupported format {data.get('format')!r}")
    try:
        core = {
            "sample_rate_hz": float(data.pop("sample_rate_hz")),
            "sf": int(data.pop("sf")),
            "bandwidth_hz": float(data.pop("bandwidth_hz")),
            "n_samples": int(data.pop("n_samples")),
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise CaptureError(f"{sidecar}: incomplete metadata ({exc})") from exc
    data.pop("format")
    return CaptureMetadata(**core, extras=data)


def write_capture(path: Path, buffer: IqBuffer, metadata: CaptureMetadata) -> Path:
    write_cf32(path, buffer)
    write_sidecar(path, metadata)
    LOGGER.info("Wrote %d samples to %s", len(buffer), path)
    return Path(path)


def read_capture(path: Path) -> Tuple[IqBuffer, CaptureMetadata]:
    metadata = read_sidecar(path)
    samples = read_cf32(path)
    if samples.size != metadata.n_samples:
        raise CaptureError(f"{path}: sidecar lists {metadata.n_samples} samples, file holds {samples.size}")
    return IqBuffer(samples), metadata


__all__ = [
    "FORMAT_TAG",
    "sidecar_path",
    "write_cf32",
    "read_cf32",
    "CaptureMetadata",
    "write_sidecar",
    "read_sidecar",
    "write_capture",
    "read_capture",
]
