from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np

from ..codec.bits import bits_to_ints, bits_to_nibbles, bytes_to_bits
from ..codec.gray import gray_map
from ..codec.hamming import encode_nibbles
from ..codec.interleaver import interleave
from ..codec.whitening import load_whitening_table, whiten
from ..config import ChirpParams, FrameConfig
from ..core.chirp import modulate_symbols, reference_downchirp, reference_quarter_downchirp
from ..core.types import IqBuffer
from ..exceptions import FrameError
from .crc import crc16, crc_bytes
from .plan import netid_symbols, payload_symbol_count

LOGGER = logging.getLogger(__name__)


def frame_bytes(payload: bytes, cfg: FrameConfig) -> bytes:
    """Payload followed by its big-endian CRC16 when the frame carries one."""
    payload = bytes(payload)
    if len(payload) != cfg.payload_len:
        raise FrameError(f"payload has {len(payload)} bytes, frame expects {cfg.payload_len}")
    if cfg.has_crc:
        return payload + crc_bytes(crc16(payload, cfg.crc))
    return payload


def encode_payload_symbols(payload: bytes, cfg: FrameConfig, p: ChirpParams) -> np.ndarray:
    """CRC, whitening, Hamming, diagonal interleaving and Gray mapping of the payload."""
    bits = bytes_to_bits(frame_bytes(payload, cfg))
    whitened = whiten(bits, load_whitening_table(cfg.whitening_table))
    nibbles = bits_to_nibbles(whitened)
    remainder = (-nibbles.shape[0]) % p.sf
    if remainder:
        nibbles = np.vstack([nibbles, np.zeros((remainder, 4), dtype=np.uint8)])
    codewords = encode_nibbles(nibbles, cfg.cr)

    symbols = []
    for start in range(0, codewords.shape[0], p.sf):
        block = interleave(codewords[start : start + p.sf], p.sf, cfg.cr)
        symbols.append(gray_map(bits_to_ints(block), p.sf))
    out = np.concatenate(symbols).astype(np.int64) if symbols else np.zeros(0, dtype=np.int64)
    expected = payload_symbol_count(cfg, p)
    if out.size != expected:
        raise FrameError(f"encoder produced {out.size} symbols, expected {expected}")
    return out


def build_frame_from_symbols(cfg: FrameConfig, p: ChirpParams, payload_symbols: Sequence[int]) -> IqBuffer:
    """Preamble, two network-id symbols, 2.25 downchirps, then `payload_symbols`."""
    netid = netid_symbols(cfg, p.n)
    down = reference_downchirp(p).samples
    pieces = [
        modulate_symbols(np.zeros(cfg.preamble_len, dtype=np.int64), p),
        modulate_symbols(netid, p),
        down,
        down,
        reference_quarter_downchirp(p).samples,
        modulate_symbols(payload_symbols, p),
    ]
    return IqBuffer(np.concatenate(pieces))


def build_frame(cfg: FrameConfig, p: ChirpParams, payload: Optional[bytes] = None) -> IqBuffer:
    data = cfg.payload if payload is None else bytes(payload)
    symbols = encode_payload_symbols(data, cfg, p)
    LOGGER.debug(
        "Built frame: %d payload bytes, %d payload symbols, CR %s", len(data), symbols.size, cfg.cr.label
    )
    return build_frame_from_symbols(cfg, p, symbols)


__all__ = ["frame_bytes", "encode_payload_symbols", "build_frame_from_symbols", "build_frame"]
