"""
Deterministic sub-seed derivation.

All randomness in a run flows from one user seed. Each consumer (a fold
plan, a replication, a cross-validation split) derives its own seed from
the user seed plus integer keys, so results never depend on execution
order or worker count.
"""

import numpy as np

# Integer tags keeping the derived streams of different consumers apart
STREAM_FOLDS = 1
STREAM_REPLICATION = 2
STREAM_LEARNER_CV = 3
STREAM_SEARCH = 4
STREAM_SAMPLE = 5


def derive_seed(seed: int, *keys: int) -> int:
    """
    Derive a 32-bit seed from a base seed and integer keys.

    Args:
        seed: Base (user) seed, non-negative
        *keys: Non-negative integers identifying the consumer

    Returns:
        A seed that is a pure function of (seed, keys)
    """
    entropy = [int(seed), *(int(k) for k in keys)]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint32)[0])


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Return a numpy Generator seeded by ``derive_seed(seed, *keys)``."""
    return np.random.default_rng(derive_seed(seed, *keys))
