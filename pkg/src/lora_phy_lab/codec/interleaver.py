from __future__ import annotations

from functools import lru_cache
from typing import Tuple

import numpy as np

from ..exceptions import ConfigurationError
from .hamming import CodingRate


@lru_cache(maxsize=None)
def _diagonal_index(sf: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Codeword row and bit column feeding output symbol i, bit j."""
    i = np.arange(n)[:, None]
    j = np.arange(sf)[None, :]
    rows = (i + j) % sf
    cols = np.broadcast_to(i, (n, sf))
    return rows, cols


def interleave(codewords: np.ndarray, sf: int, cr: CodingRate) -> np.ndarray:
    """(SF, n) codeword bits -> (n, SF) symbol bits; out[i, j] = codewords[(i + j) % SF, i]."""
    block = np.asarray(codewords, dtype=np.uint8)
    n = cr.codeword_len
    if block.shape != (sf, n):
        raise ConfigurationError(f"interleaver block must be {sf}x{n}, got {block.shape}")
    rows, cols = _diagonal_index(sf, n)
    return block[rows, cols]


def deinterleave(symbol_bits: np.ndarray, sf: int, cr: CodingRate) -> np.ndarray:
    block = np.asarray(symbol_bits, dtype=np.uint8)
    n = cr.codeword_len
    if block.shape != (n, sf):
        raise ConfigurationError(f"deinterleaver block must be {n}x{sf}, got {block.shape}")
    rows, cols = _diagonal_index(sf, n)
    out = np.empty((sf, n), dtype=np.uint8)
    out[rows, cols] = block
    return out


__all__ = ["interleave", "deinterleave"]
