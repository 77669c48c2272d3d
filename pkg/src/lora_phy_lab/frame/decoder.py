from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..codec.bits import bits_to_bytes, ints_to_bits
from ..codec.gray import gray_demap
from ..codec.hamming import decode_codewords, status_counts
from ..codec.interleaver import deinterleave
from ..codec.whitening import load_whitening_table, whiten
from ..config import ChirpParams, FrameConfig
from ..exceptions import FrameError
from .crc import crc16
from .plan import payload_nibble_count, payload_symbol_count

LOGGER = logging.getLogger(__name__)


@dataclass
class PayloadDecodeResult:
    payload: bytes
    crc_ok: bool
    has_crc: bool = True
    received_crc: Optional[int] = None
    computed_crc: Optional[int] = None
    codeword_status: Dict[str, int] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "payload_hex": self.payload.hex(),
            "crc_ok": self.crc_ok,
            "has_crc": self.has_crc,
            "received_crc": self.received_crc,
            "computed_crc": self.computed_crc,
            "codeword_status": dict(self.codeword_status),
        }


def decode_payload_symbols(symbols: Sequence[int], cfg: FrameConfig, p: ChirpParams) -> PayloadDecodeResult:
    values = np.asarray(symbols, dtype=np.int64).ravel()
    expected = payload_symbol_count(cfg, p)
    if values.size != expected:
        raise FrameError(f"expected {expected} payload symbols, got {values.size}")
    n = cfg.cr.codeword_len
    labels = ints_to_bits(gray_demap(values), p.sf).reshape(-1, n, p.sf)
    blocks = [deinterleave(block, p.sf, cfg.cr) for block in labels]
    codewords = np.vstack(blocks) if blocks else np.zeros((0, n), dtype=np.uint8)
    data, status = decode_codewords(codewords, cfg.cr)

    n_bits = 4 * payload_nibble_count(cfg)
    whitened = data.ravel()[:n_bits]
    raw = bits_to_bytes(whiten(whitened, load_whitening_table(cfg.whitening_table)))
    counts = status_counts(status)
    if counts["detected_uncorrectable"]:
        LOGGER.debug("%d codewords flagged uncorrectable", counts["detected_uncorrectable"])

    payload = raw[: cfg.payload_len]
    if not cfg.has_crc:
        return PayloadDecodeResult(payload=payload, crc_ok=True, has_crc=False, codeword_status=counts)
    received = int.from_bytes(raw[cfg.payload_len : cfg.payload_len + 2], "big")
    computed = crc16(payload, cfg.crc)
    return PayloadDecodeResult(
        payload=payload,
        crc_ok=received == computed,
        received_crc=received,
        computed_crc=computed,
        codeword_status=counts,
    )


__all__ = ["PayloadDecodeResult", "decode_payload_symbols"]
