from __future__ import annotations

import numpy as np


def gray_demap(s):
    """Symbol to SF-bit label: s ^ (s >> 1). Works on ints and integer arrays."""
    if isinstance(s, (int, np.integer)):
        return int(s) ^ (int(s) >> 1)
    values = np.asarray(s, dtype=np.int64)
    return values ^ (values >> 1)


def gray_map(label, sf: int):
    """Label to symbol, inverting gray_demap by prefix XOR over the SF bits."""
    scalar = isinstance(label, (int, np.integer))
    values = np.asarray(label, dtype=np.int64)
    out = values.copy()
    shift = 1
    while shift < sf:
        out ^= out >> shift
        shift <<= 1
    return int(out) if scalar else out


__all__ = ["gray_demap", "gray_map"]
