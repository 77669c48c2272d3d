from __future__ import annotations

import numpy as np


def trial_seed_sequence(master_seed: int, point_index: int, trial_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(point_index), int(trial_index)))


def trial_rng(master_seed: int, point_index: int, trial_index: int) -> np.random.Generator:
    """Independent generator per (sweep point, trial); identical across thread counts."""
    return np.random.default_rng(trial_seed_sequence(master_seed, point_index, trial_index))


def derive_seed(master_seed: int, point_index: int, trial_index: int) -> int:
    return int(trial_seed_sequence(master_seed, point_index, trial_index).generate_state(1, np.uint32)[0])


__all__ = ["trial_seed_sequence", "trial_rng", "derive_seed"]
