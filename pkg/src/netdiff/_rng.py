"""Seed plumbing shared across modules."""

import numpy as np


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Wrap ints/None into a SeedSequence; pass SeedSequences through."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def replication_seed(master_seed, rep_index) -> np.random.SeedSequence:
    """Independent, reproducible stream for one replication."""
    base = as_seed_sequence(master_seed)
    return np.random.SeedSequence(entropy=base.entropy,
                                  spawn_key=(int(rep_index),))
