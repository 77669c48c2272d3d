from __future__ import annotations

import numpy as np

from ..exceptions import ConfigurationError

# Bit arrays are 1-D uint8 arrays of 0/1, MSB-first within every byte and label.
BitBlock = np.ndarray


def as_bits(values) -> BitBlock:
    bits = np.asarray(values, dtype=np.uint8).ravel()
    if bits.size and bits.max() > 1:
        raise ConfigurationError("bit arrays may only contain 0 and 1")
    return bits


def bytes_to_bits(data: bytes) -> BitBlock:
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))


def bits_to_bytes(bits: BitBlock) -> bytes:
    bits = as_bits(bits)
    if bits.size % 8:
        raise ConfigurationError(f"bit count {bits.size} is not a whole number of bytes")
    return np.packbits(bits).tobytes()


def ints_to_bits(values, width: int) -> np.ndarray:
    """Rows of `width` bits, MSB first, one row per value."""
    values = np.asarray(values, dtype=np.int64).ravel()
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((values[:, None] >> shifts) & 1).astype(np.uint8)


def bits_to_ints(rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
    width = rows.shape[1]
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    return rows @ weights


def bits_to_nibbles(bits: BitBlock) -> np.ndarray:
    bits = as_bits(bits)
    if bits.size % 4:
        raise ConfigurationError(f"encoder input of {bits.size} bits is not nibble aligned")
    return bits.reshape(-1, 4)


__all__ = [
    "BitBlock",
    "as_bits",
    "bytes_to_bits",
    "bits_to_bytes",
    "ints_to_bits",
    "bits_to_ints",
    "bits_to_nibbles",
]
