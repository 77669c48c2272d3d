from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np

from ..exceptions import ConfigurationError
from .bits import BitBlock, as_bits

LOGGER = logging.getLogger(__name__)

DEFAULT_TABLE_PATH = Path(__file__).resolve().parent / "data" / "whitening_default.txt"

# x^8 + x^6 + x^5 + x^4 + 1, register started from all ones
LFSR_SEED = np.ones(8, dtype=np.uint8)
LFSR_FEEDBACK = np.array([0, 0, 0, 1, 1, 1, 0, 1], dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class WhiteningSequence:
    bits: np.ndarray
    source: str = "inline"

    def __post_init__(self) -> None:
        bits = as_bits(self.bits).copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return int(self.bits.size)


def lfsr_whitening_bits(n_bits: int) -> np.ndarray:
    """Whitening bits from the byte-wise LFSR: the register is emitted, then clocked once."""
    register = LFSR_SEED.copy()
    out = np.empty(((n_bits + 7) // 8) * 8, dtype=np.uint8)
    for step in range(out.size // 8):
        out[step * 8 : step * 8 + 8] = register
        feedback = np.sum(register * LFSR_FEEDBACK) % 2
        register = np.concatenate(([feedback], register[:-1])).astype(np.uint8)
    return out[:n_bits]


def parse_whitening_table(text: str, source: str = "inline") -> WhiteningSequence:
    stripped = "".join(text.split())
    if not stripped:
        raise ConfigurationError(f"whitening table {source} is empty")
    invalid = set(stripped) - {"0", "1"}
    if invalid:
        raise ConfigurationError(f"whitening table {source} contains non-bit characters: {sorted(invalid)}")
    return WhiteningSequence(np.frombuffer(stripped.encode("ascii"), dtype=np.uint8) - ord("0"), source)


@lru_cache(maxsize=8)
def load_whitening_table(path: Optional[str] = None) -> WhiteningSequence:
    table_path = Path(path) if path else DEFAULT_TABLE_PATH
    LOGGER.debug("Loading whitening table from %s", table_path)
    return parse_whitening_table(table_path.read_text(encoding="ascii"), str(table_path))


def whiten(data: BitBlock, seq: WhiteningSequence) -> BitBlock:
    bits = as_bits(data)
    if bits.size > len(seq):
        raise ConfigurationError(
            f"whitening sequence of {len(seq)} bits is shorter than the {bits.size}-bit block"
        )
    return bits ^ seq.bits[: bits.size]


__all__ = [
    "DEFAULT_TABLE_PATH",
    "WhiteningSequence",
    "lfsr_whitening_bits",
    "parse_whitening_table",
    "load_whitening_table",
    "whiten",
]
