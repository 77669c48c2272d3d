from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Sequence

import numpy as np
from joblib import Parallel

from ..config import ExperimentConfig
from .ber import run_point, snr_axes
from .stats import rate, wilson_half_width
from .trials import TrialOutcome

LOGGER = logging.getLogger(__name__)


def _bias_rmse(errors: List[float]) -> tuple:
    if not errors:
        return math.nan, math.nan
    values = np.asarray(errors, dtype=np.float64)
    return float(values.mean()), float(np.sqrt(np.mean(values**2)))


@dataclass
class SyncBenchRow:
    snr_db: float
    snr_db_n0: float
    trials: int
    sync_failures: int
    sync_failure_rate: float
    sync_failure_rate_ci: float
    tau_sto_bias: float
    tau_sto_rmse: float
    tau_cfo_bias: float
    tau_cfo_rmse: float
    lambda_sto_bias: float
    lambda_sto_rmse: float
    lambda_cfo_bias: float
    lambda_cfo_rmse: float
    integer_exact_rate: float

    @classmethod
    def from_outcomes(cls, snr_db: float, snr_db_n0: float, outcomes: Sequence[TrialOutcome]) -> "SyncBenchRow":
        trials = len(outcomes)
        failures = sum(1 for item in outcomes if item.sync_failed)
        synced = [item for item in outcomes if not item.sync_failed]
        tau_sto = _bias_rmse([item.tau_sto_err for item in synced])
        tau_cfo = _bias_rmse([item.tau_cfo_err for item in synced])
        lambda_sto = _bias_rmse([item.lambda_sto_err for item in synced])
        lambda_cfo = _bias_rmse([item.lambda_cfo_err for item in synced])
        return cls(
            snr_db=snr_db,
            snr_db_n0=snr_db_n0,
            trials=trials,
            sync_failures=failures,
            sync_failure_rate=rate(failures, trials),
            sync_failure_rate_ci=wilson_half_width(failures, trials),
            tau_sto_bias=tau_sto[0],
            tau_sto_rmse=tau_sto[1],
            tau_cfo_bias=tau_cfo[0],
            tau_cfo_rmse=tau_cfo[1],
            lambda_sto_bias=lambda_sto[0],
            lambda_sto_rmse=lambda_sto[1],
            lambda_cfo_bias=lambda_cfo[0],
            lambda_cfo_rmse=lambda_cfo[1],
            integer_exact_rate=rate(sum(1 for item in outcomes if item.integer_exact), trials),
        )

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


SYNC_BENCH_COLUMNS = list(SyncBenchRow.__dataclass_fields__)


def run_sync_bench(cfg: ExperimentConfig) -> List[SyncBenchRow]:
    """Estimator error statistics per SNR point; always runs the full synchronizer."""
    rows: List[SyncBenchRow] = []
    LOGGER.info("Sync bench: %d SNR points x %d trials", len(cfg.sweep.snr_db), cfg.sweep.trials)
    with Parallel(n_jobs=cfg.threads, prefer="threads") as parallel:
        for point_index, snr_db in enumerate(cfg.sweep.snr_db):
            outcomes = run_point(cfg, point_index, snr_db, parallel, genie=False)
            per_sample, n0_axis = snr_axes(snr_db, cfg.sweep.convention, cfg.chirp.n)
            row = SyncBenchRow.from_outcomes(per_sample, n0_axis, outcomes)
            LOGGER.info(
                "SNR %.2f dB: failures=%d tau_sto_rmse=%.4g tau_cfo_rmse=%.4g",
                row.snr_db,
                row.sync_failures,
                row.tau_sto_rmse,
                row.tau_cfo_rmse,
            )
            rows.append(row)
    return rows


__all__ = ["SyncBenchRow", "SYNC_BENCH_COLUMNS", "run_sync_bench"]
