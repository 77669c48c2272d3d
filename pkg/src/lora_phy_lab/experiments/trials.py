from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..channel.impairments import transmit_through
from ..channel.noise import NoiseSpec
from ..channel.seeds import trial_rng
from ..codec.bits import ints_to_bits
from ..codec.gray import gray_demap, gray_map
from ..config import ExperimentConfig, ImpairmentSpec, SweepConfig
from ..core.types import IqBuffer
from ..exceptions import SyncFailure
from ..frame.builder import build_frame_from_symbols, encode_payload_symbols
from ..frame.decoder import decode_payload_symbols
from ..frame.plan import payload_symbol_count
from ..sync.estimators import signed_fraction, wrap_unit
from ..sync.synchronizer import FrameSynchronizer, genie_synchronize

LOGGER = logging.getLogger(__name__)


@dataclass
class TrialOutcome:
    bits: int
    bit_errors: int
    symbols: int
    symbol_errors: int
    frame_error: bool
    sync_failed: bool
    tau_sto: float
    tau_cfo: float
    failure_stage: Optional[str] = None
    tau_sto_err: float = math.nan
    tau_cfo_err: float = math.nan
    lambda_sto_err: float = math.nan
    lambda_cfo_err: float = math.nan
    snr_est_db: float = math.nan

    @property
    def integer_exact(self) -> bool:
        if self.sync_failed:
            return False
        return abs(self.tau_sto_err) < 0.5 and abs(self.tau_cfo_err) < 0.5


def draw_offsets(sweep: SweepConfig, rng: np.random.Generator) -> Tuple[float, float]:
    tau_sto = float(rng.uniform(*sweep.sto_range))
    tau_cfo = float(rng.uniform(*sweep.cfo_range))
    if sweep.shared_oscillator:
        tau_cfo = 0.0
    return tau_sto, tau_cfo


def fraction_error(estimate: float, truth: float) -> float:
    """Signed distance between two fractions on the unit circle, in [-0.5, 0.5)."""
    return signed_fraction(wrap_unit(estimate - truth))


def popcount(values: np.ndarray, width: int = 8) -> int:
    return int(ints_to_bits(np.asarray(values, dtype=np.int64), width).sum())


def simulate_trial(
    cfg: ExperimentConfig,
    snr_db: float,
    point_index: int,
    trial_index: int,
    genie: Optional[bool] = None,
) -> TrialOutcome:
    """One frame through the channel and the receiver; randomness comes only from the trial seed."""
    p = cfg.chirp
    n = p.n
    rng = trial_rng(cfg.master_seed, point_index, trial_index)
    tau_sto, tau_cfo = draw_offsets(cfg.sweep, rng)

    frame_cfg = cfg.frame
    n_symbols = payload_symbol_count(frame_cfg, p)
    if cfg.sweep.coded:
        payload = np.frombuffer(rng.bytes(frame_cfg.payload_len), dtype=np.uint8)
        frame_cfg = frame_cfg.with_payload(payload.tobytes())
        tx_symbols = encode_payload_symbols(payload.tobytes(), frame_cfg, p)
        reference = payload.astype(np.int64)
        bits = 8 * payload.size
        width = 8
    else:
        reference = rng.integers(0, n, size=n_symbols, dtype=np.int64)
        tx_symbols = gray_map(reference, p.sf)
        bits = n_symbols * p.sf
        width = p.sf

    frame = build_frame_from_symbols(frame_cfg, p, tx_symbols)
    padded = IqBuffer(np.concatenate([frame.samples, np.zeros(cfg.sweep.tail_symbols * n, dtype=np.complex128)]))
    spec = ImpairmentSpec.from_offsets(
        p,
        tau_sto=tau_sto,
        tau_cfo=tau_cfo,
        h=cfg.impairment.h,
        noise=NoiseSpec.from_snr(snr_db, cfg.sweep.convention),
    )
    received = transmit_through(padded, spec, p, rng)

    use_genie = cfg.genie_sync if genie is None else genie
    try:
        if use_genie:
            result = genie_synchronize(received, spec, p, frame_cfg, n_symbols)
        else:
            result = FrameSynchronizer(p, frame_cfg, cfg.sync, n_symbols).synchronize(received)
    except SyncFailure as exc:
        LOGGER.debug("Trial %d/%d lost sync in %s", point_index, trial_index, exc.stage)
        # a lost frame counts as every symbol wrong and every bit read as zero
        return TrialOutcome(
            bits=bits,
            bit_errors=popcount(reference, width),
            symbols=n_symbols,
            symbol_errors=n_symbols,
            frame_error=True,
            sync_failed=True,
            tau_sto=tau_sto,
            tau_cfo=tau_cfo,
            failure_stage=exc.stage,
        )

    rx_symbols = result.symbols
    symbol_errors = int(np.count_nonzero(rx_symbols != tx_symbols))
    if cfg.sweep.coded:
        decoded = decode_payload_symbols(rx_symbols, frame_cfg, p)
        received_bytes = np.frombuffer(decoded.payload, dtype=np.uint8).astype(np.int64)
        bit_errors = popcount(reference ^ received_bytes, 8)
        frame_error = bit_errors > 0 or not decoded.crc_ok
    else:
        bit_errors = popcount(reference ^ gray_demap(rx_symbols), p.sf)
        frame_error = bit_errors > 0

    estimate = result.estimate
    return TrialOutcome(
        bits=bits,
        bit_errors=bit_errors,
        symbols=n_symbols,
        symbol_errors=symbol_errors,
        frame_error=frame_error,
        sync_failed=False,
        tau_sto=tau_sto,
        tau_cfo=tau_cfo,
        tau_sto_err=estimate.tau_sto - tau_sto,
        tau_cfo_err=estimate.tau_cfo - tau_cfo,
        lambda_sto_err=fraction_error(estimate.lambda_sto, wrap_unit(tau_sto)),
        lambda_cfo_err=fraction_error(estimate.lambda_cfo, wrap_unit(tau_cfo)),
        snr_est_db=estimate.snr_est_db,
    )


__all__ = ["TrialOutcome", "draw_offsets", "fraction_error", "popcount", "simulate_trial"]
