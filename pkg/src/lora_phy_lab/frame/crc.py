from __future__ import annotations

from functools import lru_cache
from typing import Tuple

from ..config import MAX_PAYLOAD_BYTES, CrcParams
from ..exceptions import FrameError

DEFAULT_CRC = CrcParams()


def _reflect(value: int, width: int) -> int:
    out = 0
    for _ in range(width):
        out = (out << 1) | (value & 1)
        value >>= 1
    return out


@lru_cache(maxsize=None)
def _table(poly: int) -> Tuple[int, ...]:
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ poly) if crc & 0x8000 else (crc << 1)
        table.append(crc & 0xFFFF)
    return tuple(table)


def crc16(payload: bytes, params: CrcParams = DEFAULT_CRC) -> int:
    if len(payload) > MAX_PAYLOAD_BYTES:
        raise FrameError(f"CRC input of {len(payload)} bytes exceeds {MAX_PAYLOAD_BYTES}")
    table = _table(params.poly)
    crc = params.init
    for byte in bytes(payload):
        if params.reflect_in:
            byte = _reflect(byte, 8)
        crc = ((crc << 8) & 0xFFFF) ^ table[((crc >> 8) ^ byte) & 0xFF]
    if params.reflect_out:
        crc = _reflect(crc, 16)
    return crc ^ params.xor_out


def crc_bytes(value: int) -> bytes:
    return int(value & 0xFFFF).to_bytes(2, "big")


__all__ = ["DEFAULT_CRC", "crc16", "crc_bytes"]
