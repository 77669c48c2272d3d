from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from .channel.noise import NoiseConvention, NoiseSpec
from .codec.hamming import CodingRate
from .exceptions import ConfigurationError, FrameError

STANDARD_BANDWIDTHS = (125e3, 250e3, 500e3)
SF_RANGE = range(7, 13)
MAX_PAYLOAD_BYTES = 255
DEFAULT_SYNC_WORD = 0x12


@dataclass(frozen=True)
class ChirpParams:
    sf: int = 7
    bandwidth_hz: float = 125e3
    sample_rate_hz: Optional[float] = None
    standard_compat: bool = True

    def __post_init__(self) -> None:
        if self.sf not in SF_RANGE:
            raise ConfigurationError(f"sf must be in 7..12, got {self.sf}")
        if self.bandwidth_hz <= 0:
            raise ConfigurationError(f"bandwidth_hz must be positive, got {self.bandwidth_hz}")
        if self.standard_compat and float(self.bandwidth_hz) not in STANDARD_BANDWIDTHS:
            raise ConfigurationError(
                f"bandwidth_hz {self.bandwidth_hz} is not one of {STANDARD_BANDWIDTHS} "
                "(set standard_compat: false to allow it)"
            )
        rate = float(self.bandwidth_hz if self.sample_rate_hz is None else self.sample_rate_hz)
        ratio = rate / float(self.bandwidth_hz)
        if rate <= 0 or ratio < 1 or abs(ratio - round(ratio)) > 1e-9:
            raise ConfigurationError(
                f"sample_rate_hz {rate} must be an integer multiple of bandwidth_hz {self.bandwidth_hz}"
            )
        object.__setattr__(self, "sample_rate_hz", rate)

    @property
    def n(self) -> int:
        return 1 << self.sf

    @property
    def oversampling(self) -> int:
        return int(round(self.sample_rate_hz / self.bandwidth_hz))

    @property
    def bin_hz(self) -> float:
        return self.bandwidth_hz / self.n

    def as_dict(self) -> Dict[str, Any]:
        return {
            "sf": self.sf,
            "bandwidth_hz": self.bandwidth_hz,
            "sample_rate_hz": self.sample_rate_hz,
            "standard_compat": self.standard_compat,
        }


@dataclass(frozen=True)
class CrcParams:
    poly: int = 0x1021
    init: int = 0x0000
    reflect_in: bool = False
    reflect_out: bool = False
    xor_out: int = 0x0000

    def __post_init__(self) -> None:
        for name in ("poly", "init", "xor_out"):
            value = getattr(self, name)
            if not 0 <= value <= 0xFFFF:
                raise ConfigurationError(f"crc {name} must fit in 16 bits, got {value:#x}")

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


class NetidMode(str, Enum):
    REPEATED = "repeated"
    PAIRED = "paired"


@dataclass
class FrameConfig:
    preamble_len: int = 8
    sync_word: int = DEFAULT_SYNC_WORD
    cr: CodingRate = CodingRate.CR48
    has_crc: bool = True
    payload: bytes = b""
    payload_len: Optional[int] = None
    netid_mode: NetidMode = NetidMode.REPEATED
    crc: CrcParams = field(default_factory=CrcParams)
    whitening_table: Optional[str] = None

    def __post_init__(self) -> None:
        self.cr = CodingRate.parse(self.cr)
        self.netid_mode = NetidMode(self.netid_mode)
        self.payload = bytes(self.payload)
        if not 6 <= self.preamble_len <= 65535:
            raise ConfigurationError(f"preamble_len must be in 6..65535, got {self.preamble_len}")
        if self.sync_word < 0:
            raise ConfigurationError(f"sync_word must be >= 0, got {self.sync_word}")
        if self.payload_len is None:
            self.payload_len = len(self.payload)
        elif self.payload and len(self.payload) != self.payload_len:
            raise ConfigurationError(
                f"payload has {len(self.payload)} bytes but payload_len is {self.payload_len}"
            )
        if not 0 <= self.payload_len <= MAX_PAYLOAD_BYTES:
            raise FrameError(f"payload length {self.payload_len} exceeds {MAX_PAYLOAD_BYTES} bytes")

    def with_payload(self, payload: bytes) -> "FrameConfig":
        return replace(self, payload=bytes(payload), payload_len=len(payload))

    def check_sync_word(self, n: int) -> None:
        if not 0 <= self.sync_word < n:
            raise ConfigurationError(f"sync_word {self.sync_word} must be < N = {n}")

    def as_dict(self) -> Dict[str, Any]:
        return {
            "preamble_len": self.preamble_len,
            "sync_word": self.sync_word,
            "cr": self.cr.label,
            "has_crc": self.has_crc,
            "payload_len": self.payload_len,
            "netid_mode": self.netid_mode.value,
            "crc": self.crc.as_dict(),
            "whitening_table": self.whitening_table,
        }


@dataclass(frozen=True)
class ImpairmentSpec:
    h: complex = 1 + 0j
    tau_sto: float = 0.0
    delta_fc_hz: float = 0.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.tau_sto < 0:
            raise ConfigurationError(f"tau_sto must be >= 0, got {self.tau_sto}")
        object.__setattr__(self, "h", complex(self.h))

    @classmethod
    def from_offsets(
        cls,
        p: ChirpParams,
        *,
        tau_sto: float = 0.0,
        tau_cfo: float = 0.0,
        h: complex = 1 + 0j,
        noise: Optional[NoiseSpec] = None,
        seed: int = 0,
    ) -> "ImpairmentSpec":
        return cls(h=h, tau_sto=tau_sto, delta_fc_hz=tau_cfo * p.bin_hz, noise=noise or NoiseSpec(), seed=seed)

    @property
    def l_sto(self) -> int:
        return int(math.floor(self.tau_sto))

    @property
    def lambda_sto(self) -> float:
        return self.tau_sto - self.l_sto

    def tau_cfo(self, p: ChirpParams) -> float:
        return self.delta_fc_hz / p.bin_hz

    def l_cfo(self, p: ChirpParams) -> int:
        return int(math.floor(self.tau_cfo(p)))

    def lambda_cfo(self, p: ChirpParams) -> float:
        tau = self.tau_cfo(p)
        return tau - math.floor(tau)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "h": [self.h.real, self.h.imag],
            "tau_sto": self.tau_sto,
            "delta_fc_hz": self.delta_fc_hz,
            "noise": self.noise.as_dict(),
            "seed": self.seed,
        }


@dataclass
class SyncConfig:
    detection_matches: Optional[int] = None
    validate_netid: bool = False
    netid_slack: int = 1
    integer_recheck: bool = True
    sto_refinements: int = 1

    def __post_init__(self) -> None:
        if self.netid_slack < 0:
            raise ConfigurationError(f"sync.netid_slack must be >= 0, got {self.netid_slack}")
        if not 0 <= self.sto_refinements <= 4:
            raise ConfigurationError(f"sync.sto_refinements must be in 0..4, got {self.sto_refinements}")

    @staticmethod
    def detection_span(preamble_len: int) -> int:
        return preamble_len - 1

    def matches_required(self, preamble_len: int) -> int:
        """Agreeing windows needed among the last N_pr - 1; a strict majority unless configured."""
        span = self.detection_span(preamble_len)
        required = span // 2 + 1 if self.detection_matches is None else self.detection_matches
        if not 2 <= required <= span:
            raise ConfigurationError(f"detection_matches must be in 2..{span}, got {required}")
        return required

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SweepConfig:
    snr_db: List[float] = field(default_factory=lambda: [10.0])
    convention: NoiseConvention = NoiseConvention.PER_SAMPLE
    trials: int = 100
    coded: bool = True
    sto_range: Tuple[float, float] = (0.0, 0.0)
    cfo_range: Tuple[float, float] = (0.0, 0.0)
    shared_oscillator: bool = False
    tail_symbols: int = 2

    def __post_init__(self) -> None:
        self.convention = NoiseConvention.parse(self.convention)
        self.snr_db = [float(value) for value in self.snr_db]
        self.sto_range = _pair(self.sto_range, "sto_range")
        self.cfo_range = _pair(self.cfo_range, "cfo_range")
        if not self.snr_db:
            raise ConfigurationError("sweep.snr_db must not be empty")
        if self.trials < 1:
            raise ConfigurationError(f"sweep.trials must be >= 1, got {self.trials}")
        if self.sto_range[0] < 0:
            raise ConfigurationError("sweep.sto_range must be non-negative")
        if self.tail_symbols < 1:
            raise ConfigurationError("sweep.tail_symbols must be >= 1")

    def as_dict(self) -> Dict[str, Any]:
        return {
            "snr_db": list(self.snr_db),
            "convention": self.convention.value,
            "trials": self.trials,
            "coded": self.coded,
            "sto_range": list(self.sto_range),
            "cfo_range": list(self.cfo_range),
            "shared_oscillator": self.shared_oscillator,
            "tail_symbols": self.tail_symbols,
        }


@dataclass
class ExperimentConfig:
    chirp: ChirpParams = field(default_factory=ChirpParams)
    frame: FrameConfig = field(default_factory=FrameConfig)
    impairment: ImpairmentSpec = field(default_factory=ImpairmentSpec)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    sync: SyncConfig = field(default_factory=SyncConfig)
    master_seed: int = 0
    threads: int = 1
    genie_sync: bool = False
    log_level: str = "INFO"

    def __post_init__(self) -> None:
        self.frame.check_sync_word(self.chirp.n)
        self.sync.matches_required(self.frame.preamble_len)
        limit = self.chirp.n / 4
        if max(abs(self.sweep.cfo_range[0]), abs(self.sweep.cfo_range[1])) >= limit:
            raise ConfigurationError(f"sweep.cfo_range must stay within |tau_cfo| < N/4 = {limit}")
        if abs(self.impairment.tau_cfo(self.chirp)) >= limit:
            raise ConfigurationError(f"impairment CFO must stay within |tau_cfo| < N/4 = {limit}")
        if self.threads == 0 or self.threads < -1:
            raise ConfigurationError(f"threads must be >= 1 or -1, got {self.threads}")
        if self.master_seed < 0:
            raise ConfigurationError("master_seed must be non-negative")

    @classmethod
    def load(cls, path: Optional[Path]) -> "ExperimentConfig":
        if path is None:
            return cls()
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Config file not found: {path}")
        if path.suffix.lower() in {".yaml", ".yml"}:
            return cls._load_yaml(path)
        if path.suffix.lower() == ".json":
            return cls._load_json(path)
        raise ConfigurationError("Config must be .json or .yaml/.yml")

    @classmethod
    def _load_json(cls, path: Path) -> "ExperimentConfig":
        with path.open("r", encoding="utf-8") as handle:
            try:
                payload = json.load(handle)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}: {exc}") from exc
        return cls.from_dict(payload or {})

    @classmethod
    def _load_yaml(cls, path: Path) -> "ExperimentConfig":
        import yaml

        with path.open("r", encoding="utf-8") as handle:
            try:
                payload = yaml.safe_load(handle)
            except yaml.YAMLError as exc:
                raise ConfigurationError(f"{path}: {exc}") from exc
        return cls.from_dict(payload or {})

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "ExperimentConfig":
        if not isinstance(payload, Mapping):
            raise ConfigurationError("config root must be a mapping")
        _check_keys(
            payload,
            {"chirp", "frame", "impairment", "sweep", "sync", "master_seed", "threads", "genie_sync", "log_level"},
            "config",
        )
        chirp = _build(ChirpParams, payload.get("chirp") or {}, "chirp")
        try:
            return cls(
                chirp=chirp,
                frame=_frame_from_dict(payload.get("frame") or {}),
                impairment=_impairment_from_dict(payload.get("impairment") or {}, chirp),
                sweep=_build(SweepConfig, payload.get("sweep") or {}, "sweep"),
                sync=_build(SyncConfig, payload.get("sync") or {}, "sync"),
                master_seed=int(payload.get("master_seed", 0)),
                threads=int(payload.get("threads", 1)),
                genie_sync=bool(payload.get("genie_sync", False)),
                log_level=str(payload.get("log_level", "INFO")),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(str(exc)) from exc

    def as_dict(self) -> Dict[str, Any]:
        return {
            "chirp": self.chirp.as_dict(),
            "frame": self.frame.as_dict(),
            "impairment": self.impairment.as_dict(),
            "sweep": self.sweep.as_dict(),
            "sync": self.sync.as_dict(),
            "master_seed": self.master_seed,
            "threads": self.threads,
            "genie_sync": self.genie_sync,
            "log_level": self.log_level,
        }


def _pair(value, name: str) -> Tuple[float, float]:
    items = list(value)
    if len(items) != 2:
        raise ConfigurationError(f"{name} must have exactly two values")
    low, high = float(items[0]), float(items[1])
    if low > high:
        raise ConfigurationError(f"{name} lower bound exceeds upper bound")
    return low, high


def _check_keys(data: Mapping[str, Any], allowed: set, section: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigurationError(f"unknown keys in {section}: {sorted(unknown)}")


def _build(cls, data: Mapping[str, Any], section: str):
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"{section} must be a mapping")
    _check_keys(data, {item.name for item in fields(cls)}, section)
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigurationError(f"{section}: {exc}") from exc


def _as_int(value) -> int:
    if isinstance(value, str):
        return int(value, 0)
    return int(value)


def _frame_from_dict(data: Mapping[str, Any]) -> FrameConfig:
    data = dict(data)
    if "payload_hex" in data:
        data["payload"] = bytes.fromhex(str(data.pop("payload_hex")))
    if "payload_text" in data:
        data["payload"] = str(data.pop("payload_text")).encode("utf-8")
    if "sync_word" in data:
        data["sync_word"] = _as_int(data["sync_word"])
    if "crc" in data:
        crc = dict(data["crc"] or {})
        for key in ("poly", "init", "xor_out"):
            if key in crc:
                crc[key] = _as_int(crc[key])
        data["crc"] = _build(CrcParams, crc, "frame.crc")
    return _build(FrameConfig, data, "frame")


def _impairment_from_dict(data: Mapping[str, Any], chirp: ChirpParams) -> ImpairmentSpec:
    data = dict(data)
    _check_keys(data, {"h", "tau_sto", "delta_fc_hz", "cfo_bins", "noise", "seed"}, "impairment")
    h = data.get("h", 1.0)
    if isinstance(h, Mapping):
        h = complex(float(h.get("re", 0.0)), float(h.get("im", 0.0)))
    elif isinstance(h, (list, tuple)):
        h = complex(float(h[0]), float(h[1]))
    delta_fc = float(data.get("delta_fc_hz", 0.0))
    if "cfo_bins" in data:
        if "delta_fc_hz" in data:
            raise ConfigurationError("impairment takes either delta_fc_hz or cfo_bins, not both")
        delta_fc = float(data["cfo_bins"]) * chirp.bin_hz
    noise = data.get("noise") or {}
    return ImpairmentSpec(
        h=complex(h),
        tau_sto=float(data.get("tau_sto", 0.0)),
        delta_fc_hz=delta_fc,
        noise=_build(NoiseSpec, noise, "impairment.noise"),
        seed=int(data.get("seed", 0)),
    )


__all__ = [
    "STANDARD_BANDWIDTHS",
    "MAX_PAYLOAD_BYTES",
    "ChirpParams",
    "CrcParams",
    "NetidMode",
    "FrameConfig",
    "ImpairmentSpec",
    "SyncConfig",
    "SweepConfig",
    "ExperimentConfig",
]
