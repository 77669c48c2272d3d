from __future__ import annotations

import logging
from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np

from ..config import ChirpParams
from ..core.chirp import demodulate_windows
from ..core.types import samples_of
from ..frame.netid import ring_distance

LOGGER = logging.getLogger(__name__)


def ring_members(history: Iterable[int], n: int, matches: Optional[int] = None) -> List[int]:
    """Positions in `history` that lie within one bin (mod n) of the best-supported centre.

    Empty when fewer than `matches` entries (all of them by default) share a centre.
    """
    values = [int(value) % n for value in history]
    if not values:
        return []
    needed = len(values) if matches is None else int(matches)
    best: List[int] = []
    for centre in sorted({(value + step) % n for value in values for step in (-1, 0, 1)}):
        members = [index for index, value in enumerate(values) if ring_distance(value, centre, n) <= 1]
        if len(members) > len(best):
            best = members
    return best if len(best) >= needed else []


def ring_lock(history: Iterable[int], n: int, matches: Optional[int] = None) -> Optional[int]:
    """Majority value among the entries that agree within one bin, or None without enough agreement."""
    values = [int(value) % n for value in history]
    members = ring_members(values, n, matches)
    if not members:
        return None
    return Counter(values[index] for index in members).most_common(1)[0][0]


@dataclass(frozen=True)
class DetectionResult:
    found: bool
    s_pr: Optional[int] = None
    # sample offset after the coarse discard of N - s_pr samples
    consumed_samples: int = 0
    run_start: Optional[int] = None
    history: Tuple[int, ...] = ()

    @property
    def discarded(self) -> Optional[int]:
        if self.run_start is None:
            return None
        return self.consumed_samples - self.run_start


class PreambleDetector:
    """Sliding lock over the last `span` demodulated windows; `matches` of them must agree."""

    def __init__(self, n: int, matches: int, span: Optional[int] = None) -> None:
        self.n = n
        self.matches = matches
        self.span = matches if span is None else max(int(span), matches)
        self.history: deque = deque(maxlen=self.span)

    def reset(self) -> None:
        self.history.clear()

    def push(self, value: int, energy: float = 1.0) -> Optional[int]:
        if energy <= 0.0:
            self.reset()
            return None
        self.history.append(int(value))
        if len(self.history) < self.matches:
            return None
        return ring_lock(self.history, self.n, self.matches)

    def first_member(self) -> int:
        """Age, in windows back from the newest, of the oldest agreeing entry."""
        members = ring_members(self.history, self.n, self.matches)
        return len(self.history) - 1 - members[0] if members else 0


def detect_preamble(
    stream,
    p: ChirpParams,
    matches: int,
    start: int = 0,
    span: Optional[int] = None,
) -> DetectionResult:
    """Slide over N-sample windows until `matches` of the last `span` decisions sit within one bin.

    Decisions come from 2N-point spectra so a fractional offset costs at most a quarter bin of
    scalloping. The run starts at the oldest agreeing window; coarse sync then discards N - s_pr.
    """
    samples = samples_of(stream)
    n = p.n
    usable = max(0, (samples.size - start) // n)
    if usable < matches:
        return DetectionResult(False, consumed_samples=samples.size)
    rows = samples[start : start + usable * n].reshape(usable, n)
    values = demodulate_windows(rows, p, zero_pad=True)
    energies = np.sum(np.abs(rows) ** 2, axis=1)

    detector = PreambleDetector(n, matches, span)
    for index in range(usable):
        s_pr = detector.push(int(values[index]), float(energies[index]))
        if s_pr is None:
            continue
        run_start = start + (index - detector.first_member()) * n
        consumed = run_start + (n - s_pr)
        LOGGER.debug("Preamble locked at sample %d: s_pr=%d, history=%s", run_start, s_pr, list(detector.history))
        return DetectionResult(True, s_pr, consumed, run_start, tuple(detector.history))
    return DetectionResult(False, consumed_samples=samples.size)


__all__ = ["ring_members", "ring_lock", "DetectionResult", "PreambleDetector", "detect_preamble"]
