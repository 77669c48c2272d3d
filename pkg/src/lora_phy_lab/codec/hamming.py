from __future__ import annotations

from enum import Enum
from functools import lru_cache
from typing import Sequence, Tuple, Union

import numpy as np

from ..exceptions import ConfigurationError
from .bits import bits_to_ints, ints_to_bits

# Rows d1..d4, columns p1 p2 p3 of the systematic (7,4) code:
# p1 = d1^d2^d4, p2 = d1^d3^d4, p3 = d2^d3^d4.
_PARITY = np.array(
    [
        [1, 1, 0],
        [1, 0, 1],
        [0, 1, 1],
        [1, 1, 1],
    ],
    dtype=np.uint8,
)


class CodingRate(Enum):
    CR45 = 1
    CR46 = 2
    CR47 = 3
    CR48 = 4

    @property
    def data_len(self) -> int:
        return 4

    @property
    def codeword_len(self) -> int:
        return 4 + self.value

    @property
    def label(self) -> str:
        return f"4/{self.codeword_len}"

    @classmethod
    def parse(cls, value: Union["CodingRate", str, int]) -> "CodingRate":
        if isinstance(value, CodingRate):
            return value
        if isinstance(value, int) and not isinstance(value, bool):
            if value in (5, 6, 7, 8):
                return cls(value - 4)
            raise ConfigurationError(f"unknown coding rate: {value!r}")
        text = str(value).strip().upper().replace(" ", "")
        if text in cls.__members__:
            return cls[text]
        if text.startswith("4/") and text[2:] in {"5", "6", "7", "8"}:
            return cls(int(text[2:]) - 4)
        raise ConfigurationError(f"unknown coding rate: {value!r}")


class DecodeStatus(str, Enum):
    CLEAN = "clean"
    CORRECTED = "corrected"
    DETECTED = "detected_uncorrectable"


_STATUS_ORDER = (DecodeStatus.CLEAN, DecodeStatus.CORRECTED, DecodeStatus.DETECTED)


@lru_cache(maxsize=None)
def generator_matrix(cr: CodingRate) -> np.ndarray:
    eye = np.eye(4, dtype=np.uint8)
    if cr is CodingRate.CR45:
        matrix = np.hstack([eye, np.ones((4, 1), dtype=np.uint8)])
    else:
        g7 = np.hstack([eye, _PARITY])
        if cr is CodingRate.CR48:
            overall = g7.sum(axis=1, keepdims=True) % 2
            matrix = np.hstack([g7, overall.astype(np.uint8)])
        elif cr is CodingRate.CR47:
            matrix = g7
        else:
            matrix = g7[:, :6]
    matrix.setflags(write=False)
    return matrix


@lru_cache(maxsize=None)
def _check_matrix(n_parity: int) -> np.ndarray:
    """H = [A^T | I] for the first `n_parity` parity columns of the (7,4) code."""
    matrix = np.hstack([_PARITY[:, :n_parity].T, np.eye(n_parity, dtype=np.uint8)])
    matrix.setflags(write=False)
    return matrix


@lru_cache(maxsize=None)
def _syndrome_positions() -> np.ndarray:
    h7 = _check_matrix(3)
    table = np.full(8, -1, dtype=np.int64)
    for position, syndrome in enumerate(bits_to_ints(h7.T)):
        table[syndrome] = position
    table.setflags(write=False)
    return table


def _as_nibble_rows(nibbles) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(nibbles, dtype=np.uint8))
    if rows.shape[1] != 4:
        raise ConfigurationError(f"nibble rows must have 4 bits, got {rows.shape[1]}")
    return rows


def encode_nibbles(nibbles: np.ndarray, cr: CodingRate) -> np.ndarray:
    """Encode an (m, 4) array of nibble bits into (m, n) codewords."""
    rows = _as_nibble_rows(nibbles)
    return ((rows.astype(np.int64) @ generator_matrix(cr)) % 2).astype(np.uint8)


def decode_codewords(codewords: np.ndarray, cr: CodingRate) -> Tuple[np.ndarray, np.ndarray]:
    """Decode (m, n) codewords; returns (m, 4) data bits and per-row status codes 0/1/2."""
    words = np.atleast_2d(np.asarray(codewords, dtype=np.uint8)).copy()
    if words.shape[1] != cr.codeword_len:
        raise ConfigurationError(
            f"codeword length {words.shape[1]} does not match coding rate {cr.label}"
        )
    status = np.zeros(words.shape[0], dtype=np.int8)

    if cr is CodingRate.CR45:
        status[words.sum(axis=1) % 2 == 1] = 2
    elif cr is CodingRate.CR46:
        syndrome = (words.astype(np.int64) @ _check_matrix(2).T) % 2
        status[syndrome.any(axis=1)] = 2
    else:
        syndrome = bits_to_ints((words[:, :7].astype(np.int64) @ _check_matrix(3).T) % 2)
        positions = _syndrome_positions()[syndrome]
        if cr is CodingRate.CR47:
            flip = positions >= 0
        else:
            odd = words.sum(axis=1) % 2 == 1
            flip = (positions >= 0) & odd
            status[(positions < 0) & odd] = 1
            status[(positions >= 0) & ~odd] = 2
        rows = np.flatnonzero(flip)
        words[rows, positions[rows]] ^= 1
        status[rows] = 1
    return words[:, :4].copy(), status


def hamming_encode(nibble: Union[int, Sequence[int]], cr: CodingRate) -> np.ndarray:
    if isinstance(nibble, (int, np.integer)):
        if not 0 <= int(nibble) < 16:
            raise ConfigurationError(f"nibble out of range: {nibble}")
        rows = ints_to_bits([int(nibble)], 4)
    else:
        rows = _as_nibble_rows(np.asarray(nibble, dtype=np.uint8).reshape(1, 4))
    return encode_nibbles(rows, cr)[0]


def hamming_decode(codeword: Sequence[int], cr: CodingRate) -> Tuple[int, DecodeStatus]:
    data, status = decode_codewords(np.asarray(codeword, dtype=np.uint8).reshape(1, -1), cr)
    return int(bits_to_ints(data)[0]), _STATUS_ORDER[int(status[0])]


def status_counts(status: np.ndarray) -> dict:
    counts = np.bincount(np.asarray(status, dtype=np.int64), minlength=3)
    return {item.value: int(counts[index]) for index, item in enumerate(_STATUS_ORDER)}


__all__ = [
    "CodingRate",
    "DecodeStatus",
    "generator_matrix",
    "encode_nibbles",
    "decode_codewords",
    "hamming_encode",
    "hamming_decode",
    "status_counts",
]
