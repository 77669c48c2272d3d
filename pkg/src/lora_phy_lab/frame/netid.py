from __future__ import annotations

import logging
from itertools import combinations
from typing import List, Sequence

from ..config import FrameConfig, NetidMode
from .plan import netid_symbols

LOGGER = logging.getLogger(__name__)

MIN_NETID_DISTANCE = 3


def ring_distance(a: int, b: int, n: int) -> int:
    diff = (int(a) - int(b)) % n
    return min(diff, n - diff)


def lint_network_ids(
    sync_words: Sequence[int],
    n: int,
    mode: NetidMode = NetidMode.REPEATED,
    min_distance: int = MIN_NETID_DISTANCE,
) -> List[str]:
    """Warn about network pairs whose id symbols sit within `min_distance` bins of each other."""
    warnings: List[str] = []
    pairs = {}
    for word in sync_words:
        pairs[int(word)] = netid_symbols(FrameConfig(sync_word=int(word), netid_mode=mode), n)
    for left, right in combinations(sorted(pairs), 2):
        distance = max(ring_distance(a, b, n) for a, b in zip(pairs[left], pairs[right]))
        if distance < min_distance:
            message = (
                f"network ids {left:#04x} and {right:#04x} are {distance} bins apart "
                f"(minimum {min_distance})"
            )
            LOGGER.warning(message)
            warnings.append(message)
    return warnings


__all__ = ["MIN_NETID_DISTANCE", "ring_distance", "lint_network_ids"]
