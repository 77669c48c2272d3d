from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from ..channel.noise import NoiseConvention, n0_snr_db, per_sample_snr_db
from ..config import ExperimentConfig
from .stats import log_crossing, rate, wilson_half_width
from .trials import TrialOutcome, simulate_trial

LOGGER = logging.getLogger(__name__)


@dataclass
class ResultRow:
    snr_db: float
    snr_db_n0: float
    ber: float
    ber_ci: float
    ser: float
    ser_ci: float
    fer: float
    fer_ci: float
    frames: int
    bits: int
    bit_errors: int
    symbols: int
    symbol_errors: int
    frame_errors: int
    sync_failures: int
    sync_failure_rate: float
    mean_lambda_sto_err: float
    mean_lambda_cfo_err: float
    mean_snr_est_db: float

    @classmethod
    def from_outcomes(cls, snr_db: float, snr_db_n0: float, outcomes: Sequence[TrialOutcome]) -> "ResultRow":
        frames = len(outcomes)
        bits = sum(item.bits for item in outcomes)
        bit_errors = sum(item.bit_errors for item in outcomes)
        symbols = sum(item.symbols for item in outcomes)
        symbol_errors = sum(item.symbol_errors for item in outcomes)
        frame_errors = sum(1 for item in outcomes if item.frame_error)
        sync_failures = sum(1 for item in outcomes if item.sync_failed)
        synced = [item for item in outcomes if not item.sync_failed]
        return cls(
            snr_db=snr_db,
            snr_db_n0=snr_db_n0,
            ber=rate(bit_errors, bits),
            ber_ci=wilson_half_width(bit_errors, bits),
            ser=rate(symbol_errors, symbols),
            ser_ci=wilson_half_width(symbol_errors, symbols),
            fer=rate(frame_errors, frames),
            fer_ci=wilson_half_width(frame_errors, frames),
            frames=frames,
            bits=bits,
            bit_errors=bit_errors,
            symbols=symbols,
            symbol_errors=symbol_errors,
            frame_errors=frame_errors,
            sync_failures=sync_failures,
            sync_failure_rate=rate(sync_failures, frames),
            mean_lambda_sto_err=_mean([abs(item.lambda_sto_err) for item in synced]),
            mean_lambda_cfo_err=_mean([abs(item.lambda_cfo_err) for item in synced]),
            mean_snr_est_db=_mean([item.snr_est_db for item in synced if not math.isnan(item.snr_est_db)]),
        )

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


RESULT_COLUMNS = list(ResultRow.__dataclass_fields__)


def _mean(values: List[float]) -> float:
    if not values:
        return math.nan
    return float(np.mean(values))


def snr_axes(snr_db: float, convention: NoiseConvention, n: int) -> tuple:
    """(per-sample dB, 1/N0 dB) for a sweep value given in `convention`."""
    if convention is NoiseConvention.INVERSE_N0:
        return per_sample_snr_db(snr_db, n), float(snr_db)
    return float(snr_db), n0_snr_db(snr_db, n)


def snr_at_ber(rows: Sequence[ResultRow], target: float = 1e-3) -> float:
    """Per-sample SNR where the BER curve crosses `target`; nan if the sweep does not bracket it.

    Error-free points count as half an error so the log-linear interpolation stays finite.
    """
    measured = [row for row in rows if row.bits]
    bers = [row.ber if row.bit_errors else 0.5 / row.bits for row in measured]
    return log_crossing([row.snr_db for row in measured], bers, target)


def run_point(
    cfg: ExperimentConfig,
    point_index: int,
    snr_db: float,
    parallel: Parallel,
    genie: Optional[bool] = None,
) -> List[TrialOutcome]:
    return parallel(
        delayed(simulate_trial)(cfg, snr_db, point_index, trial_index, genie)
        for trial_index in range(cfg.sweep.trials)
    )


def run_ber_sweep(cfg: ExperimentConfig, genie: Optional[bool] = None) -> List[ResultRow]:
    rows: List[ResultRow] = []
    mode = "genie" if (cfg.genie_sync if genie is None else genie) else "full sync"
    LOGGER.info(
        "BER sweep: %d SNR points x %d trials, %s, %s",
        len(cfg.sweep.snr_db),
        cfg.sweep.trials,
        "coded " + cfg.frame.cr.label if cfg.sweep.coded else "uncoded",
        mode,
    )
    with Parallel(n_jobs=cfg.threads, prefer="threads") as parallel:
        for point_index, snr_db in enumerate(cfg.sweep.snr_db):
            outcomes = run_point(cfg, point_index, snr_db, parallel, genie)
            per_sample, n0_axis = snr_axes(snr_db, cfg.sweep.convention, cfg.chirp.n)
            row = ResultRow.from_outcomes(per_sample, n0_axis, outcomes)
            LOGGER.info(
                "SNR %.2f dB: ber=%.3g ser=%.3g fer=%.3g sync_failures=%d",
                row.snr_db,
                row.ber,
                row.ser,
                row.fer,
                row.sync_failures,
            )
            rows.append(row)
    return rows


__all__ = ["ResultRow", "RESULT_COLUMNS", "snr_axes", "snr_at_ber", "run_point", "run_ber_sweep"]
