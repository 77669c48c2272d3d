from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

from ..config import ChirpParams, FrameConfig, NetidMode


class SymbolRole(str, Enum):
    PREAMBLE = "preamble"
    NETID = "netid"
    DOWNCHIRP = "downchirp"
    QUARTER_DOWNCHIRP = "quarter_downchirp"
    PAYLOAD = "payload"


@dataclass(frozen=True)
class PlannedSymbol:
    role: SymbolRole
    start: int
    length: int
    value: int | None = None


@dataclass(frozen=True)
class FramePlan:
    n: int
    preamble_len: int
    n_payload_symbols: int
    symbols: Tuple[PlannedSymbol, ...]

    @property
    def downchirp_offset(self) -> int:
        return (self.preamble_len + 2) * self.n

    @property
    def payload_offset(self) -> int:
        return (self.preamble_len + 4) * self.n + self.n // 4

    @property
    def total_samples(self) -> int:
        return self.payload_offset + self.n_payload_symbols * self.n


def netid_symbols(cfg: FrameConfig, n: int) -> Tuple[int, int]:
    cfg.check_sync_word(n)
    x = cfg.sync_word
    if cfg.netid_mode is NetidMode.PAIRED:
        return x, (n - x) % n
    return x, x


def payload_nibble_count(cfg: FrameConfig) -> int:
    return 2 * (cfg.payload_len + (2 if cfg.has_crc else 0))


def payload_symbol_count(cfg: FrameConfig, p: ChirpParams) -> int:
    blocks = math.ceil(payload_nibble_count(cfg) / p.sf)
    return blocks * cfg.cr.codeword_len


def plan_frame(cfg: FrameConfig, p: ChirpParams, n_payload_symbols: int | None = None) -> FramePlan:
    n = p.n
    count = payload_symbol_count(cfg, p) if n_payload_symbols is None else int(n_payload_symbols)
    items = [PlannedSymbol(SymbolRole.PREAMBLE, i * n, n, 0) for i in range(cfg.preamble_len)]
    offset = cfg.preamble_len * n
    for value in netid_symbols(cfg, n):
        items.append(PlannedSymbol(SymbolRole.NETID, offset, n, value))
        offset += n
    for _ in range(2):
        items.append(PlannedSymbol(SymbolRole.DOWNCHIRP, offset, n))
        offset += n
    items.append(PlannedSymbol(SymbolRole.QUARTER_DOWNCHIRP, offset, n // 4))
    offset += n // 4
    for index in range(count):
        items.append(PlannedSymbol(SymbolRole.PAYLOAD, offset + index * n, n))
    return FramePlan(n=n, preamble_len=cfg.preamble_len, n_payload_symbols=count, symbols=tuple(items))


__all__ = [
    "SymbolRole",
    "PlannedSymbol",
    "FramePlan",
    "netid_symbols",
    "payload_nibble_count",
    "payload_symbol_count",
    "plan_frame",
]
