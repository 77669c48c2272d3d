from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Sequence

import numpy as np

from ..channel.fracdelay import fractional_delay
from ..channel.impairments import frequency_shift
from ..config import ChirpParams, FrameConfig, ImpairmentSpec, SyncConfig
from ..core.chirp import dechirp_power, nearest_bins, reference_downchirp, reference_upchirp
from ..core.types import IqBuffer, SpectrumResult
from ..exceptions import SyncFailure
from ..frame.netid import ring_distance
from ..frame.plan import netid_symbols, payload_symbol_count
from .estimators import (
    CompensatedPreamble,
    calibrate_snr_db,
    estimate_integer_offsets,
    estimate_lambda_cfo,
    estimate_lambda_sto,
    estimate_snr,
    signed_bin,
    signed_fraction,
)
from .preamble import detect_preamble

LOGGER = logging.getLogger(__name__)

STAGES = ("detect", "downchirp", "integer", "lambda_cfo", "lambda_sto", "recheck", "netid", "demodulate")

# Windows examined after the coarse position while looking for the downchirp pair.
DOWNCHIRP_SEARCH_SLACK = 7


class SyncPhase(str, Enum):
    SEARCHING = "searching"
    PREAMBLE_LOCKED = "preamble_locked"
    INTEGER_CORRECTED = "integer_corrected"
    FRACTION_CORRECTED = "fraction_corrected"
    DEMODULATING = "demodulating"


_PHASE_ORDER = tuple(SyncPhase)


@dataclass
class SyncState:
    phase: SyncPhase = SyncPhase.SEARCHING
    s_pr: Optional[int] = None
    history: tuple = ()
    transitions: List[SyncPhase] = field(default_factory=list)

    def advance(self, phase: SyncPhase) -> None:
        position = _PHASE_ORDER.index(self.phase)
        if position + 1 >= len(_PHASE_ORDER) or _PHASE_ORDER[position + 1] is not phase:
            raise RuntimeError(f"illegal sync transition {self.phase.value} -> {phase.value}")
        self.phase = phase
        self.transitions.append(phase)

    def reset(self) -> None:
        self.phase = SyncPhase.SEARCHING
        self.s_pr = None
        self.history = ()
        self.transitions.append(SyncPhase.SEARCHING)


@dataclass(frozen=True)
class SyncEstimate:
    s_pr: int
    l_sto: int
    l_cfo: int
    lambda_sto: float
    lambda_cfo: float
    snr_est_db: float

    @classmethod
    def from_offsets(cls, s_pr: int, tau_sto: float, tau_cfo: float, snr_est_db: float) -> "SyncEstimate":
        l_sto, lambda_sto = _split(tau_sto)
        l_cfo, lambda_cfo = _split(tau_cfo)
        return cls(int(s_pr), l_sto, l_cfo, lambda_sto, lambda_cfo, float(snr_est_db))

    @property
    def tau_sto(self) -> float:
        return self.l_sto + self.lambda_sto

    @property
    def tau_cfo(self) -> float:
        return self.l_cfo + self.lambda_cfo

    def as_dict(self) -> Dict[str, Any]:
        return {
            "s_pr": self.s_pr,
            "l_sto": self.l_sto,
            "l_cfo": self.l_cfo,
            "lambda_sto": self.lambda_sto,
            "lambda_cfo": self.lambda_cfo,
            "tau_sto": self.tau_sto,
            "tau_cfo": self.tau_cfo,
            "snr_est_db": self.snr_est_db,
        }


def _stage_rank(stage: str) -> int:
    return STAGES.index(stage) if stage in STAGES else -1


def _split(value: float) -> tuple:
    whole = math.floor(value)
    frac = float(value) - whole
    if frac >= 1.0:
        whole, frac = whole + 1, 0.0
    return int(whole), frac


@dataclass
class SyncResult:
    """One synchronized frame: offsets, aligned payload windows and their hard decisions.

    `frame_start` and `payload_start` count samples from the start of the stream.
    """

    estimate: SyncEstimate
    windows: np.ndarray
    symbols: np.ndarray
    frame_start: int
    payload_start: int
    raw_snr_db: float
    stages: Dict[str, bool] = field(default_factory=dict)

    @property
    def end_index(self) -> int:
        return self.payload_start + self.windows.shape[0] * self.windows.shape[1]

    def as_dict(self) -> Dict[str, Any]:
        return {
            **self.estimate.as_dict(),
            "frame_start": self.frame_start,
            "payload_start": self.payload_start,
            "raw_snr_db": self.raw_snr_db,
            "n_payload_symbols": int(self.symbols.size),
            "stages": dict(self.stages),
        }


def payload_snr_db(powers: np.ndarray, n: int) -> tuple:
    """Raw and calibrated SNR averaged (linearly) over per-window dechirped spectra."""
    if powers.size == 0:
        return math.nan, math.nan
    ratios = []
    for row in np.atleast_2d(powers):
        raw = estimate_snr(SpectrumResult.from_power(row))
        if math.isnan(raw):
            continue
        ratios.append(math.inf if math.isinf(raw) else 10.0 ** (raw / 10.0))
    if not ratios:
        return math.nan, math.nan
    mean_ratio = float(np.mean(ratios))
    raw_db = math.inf if math.isinf(mean_ratio) else 10.0 * math.log10(mean_ratio)
    return raw_db, calibrate_snr_db(raw_db, n)


class FrameSynchronizer:
    """Offline receiver front end: finds frames in a stream and emits aligned payload windows."""

    def __init__(
        self,
        p: ChirpParams,
        frame: FrameConfig,
        sync: Optional[SyncConfig] = None,
        n_payload_symbols: Optional[int] = None,
    ) -> None:
        self.p = p
        self.frame = frame
        self.config = sync or SyncConfig()
        self.n_payload_symbols = (
            payload_symbol_count(frame, p) if n_payload_symbols is None else int(n_payload_symbols)
        )
        self.matches = self.config.matches_required(frame.preamble_len)
        self.span = self.config.detection_span(frame.preamble_len)
        self.state = SyncState()
        self.failures: List[SyncFailure] = []
        self._up = reference_upchirp(p).samples
        self._down = reference_downchirp(p).samples

    def synchronize(self, stream) -> SyncResult:
        self.failures = []
        for result in self.frames(stream):
            return result
        failure = self.deepest_failure()
        if failure is not None:
            raise failure
        raise SyncFailure("detect", "no preamble found in stream")

    def deepest_failure(self) -> Optional[SyncFailure]:
        """The failed attempt that got furthest through the pipeline; the earliest on ties."""
        if not self.failures:
            return None
        return max(self.failures, key=lambda exc: _stage_rank(exc.stage))

    def frames(self, stream) -> Iterator[SyncResult]:
        buffer = stream if isinstance(stream, IqBuffer) else IqBuffer(stream)
        samples = buffer.samples
        n = self.p.n
        cursor = 0
        while cursor < samples.size:
            self.state.reset()
            detection = detect_preamble(samples, self.p, self.matches, start=cursor, span=self.span)
            if not detection.found:
                return
            self.state.advance(SyncPhase.PREAMBLE_LOCKED)
            self.state.s_pr = detection.s_pr
            self.state.history = detection.history
            try:
                result = self._acquire(samples, buffer.origin_index, detection.consumed_samples, detection.s_pr)
            except SyncFailure as exc:
                LOGGER.debug("Sync failed in stage %s: %s", exc.stage, exc)
                self.failures.append(exc)
                self.state.reset()
                cursor = detection.run_start + self.matches * n
                continue
            cursor = result.end_index
            yield result

    def _rows(self, work: np.ndarray, starts: Sequence[int], stage: str) -> np.ndarray:
        n = self.p.n
        starts = [int(start) for start in starts]
        if not starts:
            return np.zeros((0, n), dtype=np.complex128)
        if min(starts) < 0 or max(starts) + n > work.size:
            raise SyncFailure(stage, "stream ends before the frame does")
        return np.stack([work[start : start + n] for start in starts])

    def _find_downchirps(self, samples: np.ndarray, coarse: int) -> int:
        n = self.p.n
        count = self.frame.preamble_len + DOWNCHIRP_SEARCH_SLACK
        starts = [coarse + j * n for j in range(count) if coarse + j * n + n <= samples.size]
        if len(starts) < 2:
            raise SyncFailure("downchirp", "stream ends before the downchirps")
        rows = self._rows(samples, starts, "downchirp")
        # down-minus-up peak power; the pair of full downchirp windows scores highest
        margin = (
            dechirp_power(rows, self._down, k=2 * n).max(axis=1)
            - dechirp_power(rows, self._up, k=2 * n).max(axis=1)
        )
        scores = margin[:-1] + margin[1:]
        best = int(np.argmax(scores))
        if scores[best] <= 0.0:
            raise SyncFailure("downchirp", "no downchirp pair after the preamble")
        return starts[best]

    def _integer_bins(self, work: np.ndarray, frame_start: int, stage: str) -> tuple:
        n = self.p.n
        npr = self.frame.preamble_len
        up_rows = self._rows(work, [frame_start + j * n for j in range(1, npr - 1)], stage)
        down_start = frame_start + (npr + 2) * n
        down_rows = self._rows(work, [down_start, down_start + n], stage)
        k_up = int(nearest_bins(dechirp_power(up_rows, self._up, k=2 * n).sum(axis=0), n)[0])
        k_down = int(nearest_bins(dechirp_power(down_rows, self._down, k=2 * n).sum(axis=0), n)[0])
        return k_up, k_down

    def _acquire(self, samples: np.ndarray, origin: int, coarse: int, s_pr: int) -> SyncResult:
        p, n, npr = self.p, self.p.n, self.frame.preamble_len
        stages = {name: False for name in STAGES}
        stages["detect"] = True

        anchor = self._find_downchirps(samples, coarse)
        stages["downchirp"] = True

        # work on a copy of the frame region; indices below are relative to seg_start
        seg_start = max(0, anchor - (npr + 4) * n)
        seg_end = min(samples.size, anchor + (4 + self.n_payload_symbols) * n + n)
        work = samples[seg_start:seg_end].copy()
        phase_origin = origin + seg_start
        frame_start = anchor - seg_start - (npr + 2) * n

        k_up, k_down = self._integer_bins(work, frame_start, "integer")
        l_sto, l_cfo = estimate_integer_offsets(k_up, k_down, n)
        frame_start += signed_bin(l_sto, n)
        cfo_total = float(l_cfo)
        work = frequency_shift(work, -l_cfo / n, phase_origin)
        self.state.advance(SyncPhase.INTEGER_CORRECTED)
        stages["integer"] = True
        LOGGER.debug("Integer offsets: bins (%d, %d) -> l_sto=%d l_cfo=%d", k_up, k_down, l_sto, l_cfo)

        preamble_starts = [frame_start + j * n for j in range(1, npr - 1)]
        residual_cfo = signed_fraction(estimate_lambda_cfo(self._rows(work, preamble_starts, "lambda_cfo"), p))
        work = frequency_shift(work, -residual_cfo / n, phase_origin)
        cfo_total += residual_cfo
        stages["lambda_cfo"] = True

        # Refinement passes re-estimate both fractions on the time-aligned preamble:
        # an uncorrected fractional STO leaks into the first carrier estimate, and one
        # STO pass under-reads fractions near 0.25 and 0.75 at the interpolator band edge.
        residual_sto = 0.0
        for pass_index in range(1 + self.config.sto_refinements):
            if pass_index:
                step_cfo = signed_fraction(
                    estimate_lambda_cfo(self._rows(work, preamble_starts, "lambda_cfo"), p)
                )
                work = frequency_shift(work, -step_cfo / n, phase_origin)
                cfo_total += step_cfo
            compensated = CompensatedPreamble(self._rows(work, preamble_starts, "lambda_sto"), cfo_total)
            step = signed_fraction(estimate_lambda_sto(compensated, p))
            if not step:
                break
            work = fractional_delay(work, -step)
            residual_sto += step
        self.state.advance(SyncPhase.FRACTION_CORRECTED)
        stages["lambda_sto"] = True

        if self.config.integer_recheck:
            k_up, k_down = self._integer_bins(work, frame_start, "recheck")
            extra_sto, extra_cfo = estimate_integer_offsets(k_up, k_down, n)
            extra_sto = signed_bin(extra_sto, n)
            if abs(extra_sto) > 1 or abs(extra_cfo) > 1:
                raise SyncFailure("recheck", f"integer residual ({extra_sto}, {extra_cfo}) after compensation")
            if extra_sto or extra_cfo:
                LOGGER.debug("Integer re-check moved the frame by %d samples and %d bins", extra_sto, extra_cfo)
                frame_start += extra_sto
                cfo_total += extra_cfo
                work = frequency_shift(work, -extra_cfo / n, phase_origin)
            stages["recheck"] = True

        if self.config.validate_netid:
            self._check_netid(work, frame_start)
            stages["netid"] = True

        payload_start = frame_start + (npr + 4) * n + n // 4
        rows = self._rows(work, [payload_start + i * n for i in range(self.n_payload_symbols)], "demodulate")
        self.state.advance(SyncPhase.DEMODULATING)
        powers = dechirp_power(rows, self._up) if rows.size else np.zeros((0, n))
        symbols = np.argmax(powers, axis=1).astype(np.int64) if rows.size else np.zeros(0, dtype=np.int64)
        raw_db, snr_db = payload_snr_db(powers, n)
        stages["demodulate"] = True

        estimate = SyncEstimate.from_offsets(s_pr, seg_start + frame_start + residual_sto, cfo_total, snr_db)
        LOGGER.debug("Frame synchronized: %s", estimate.as_dict())
        return SyncResult(
            estimate=estimate,
            windows=rows,
            symbols=symbols,
            frame_start=seg_start + frame_start,
            payload_start=seg_start + payload_start,
            raw_snr_db=raw_db,
            stages=stages,
        )

    def _check_netid(self, work: np.ndarray, frame_start: int) -> None:
        n = self.p.n
        npr = self.frame.preamble_len
        rows = self._rows(work, [frame_start + npr * n, frame_start + (npr + 1) * n], "netid")
        observed = np.argmax(dechirp_power(rows, self._up), axis=1)
        expected = netid_symbols(self.frame, n)
        for got, want in zip(observed, expected):
            if ring_distance(int(got), want, n) > self.config.netid_slack:
                raise SyncFailure("netid", f"network id symbol {int(got)} does not match {want}")


def genie_synchronize(
    stream,
    spec: ImpairmentSpec,
    p: ChirpParams,
    frame: FrameConfig,
    n_payload_symbols: Optional[int] = None,
) -> SyncResult:
    """Align with the true channel offsets instead of estimating them."""
    buffer = stream if isinstance(stream, IqBuffer) else IqBuffer(stream)
    n = p.n
    count = payload_symbol_count(frame, p) if n_payload_symbols is None else int(n_payload_symbols)
    tau_cfo = spec.tau_cfo(p)
    work = frequency_shift(buffer.samples, -tau_cfo / n, buffer.origin_index)
    work = fractional_delay(work, -spec.tau_sto)
    payload_start = (frame.preamble_len + 4) * n + n // 4
    if payload_start + count * n > work.size:
        raise SyncFailure("demodulate", "stream ends before the frame does")
    rows = work[payload_start : payload_start + count * n].reshape(count, n)
    powers = dechirp_power(rows, reference_upchirp(p)) if count else np.zeros((0, n))
    symbols = np.argmax(powers, axis=1).astype(np.int64) if count else np.zeros(0, dtype=np.int64)
    raw_db, snr_db = payload_snr_db(powers, n)
    s_pr = int(round(tau_cfo - spec.tau_sto)) % n
    return SyncResult(
        estimate=SyncEstimate.from_offsets(s_pr, spec.tau_sto, tau_cfo, snr_db),
        windows=rows,
        symbols=symbols,
        frame_start=int(math.floor(spec.tau_sto)),
        payload_start=int(math.floor(spec.tau_sto)) + payload_start,
        raw_snr_db=raw_db,
        stages={name: True for name in STAGES},
    )


__all__ = [
    "STAGES",
    "SyncPhase",
    "SyncState",
    "SyncEstimate",
    "SyncResult",
    "FrameSynchronizer",
    "genie_synchronize",
    "payload_snr_db",
]
