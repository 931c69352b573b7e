from __future__ import annotations

import numpy as np

from fullmed.utils.seeding import STREAM_FOLDS, STREAM_REPLICATION, derive_seed, make_rng


def test_derived_seeds_are_pure_and_distinct():
    assert derive_seed(1, STREAM_FOLDS, 0) == derive_seed(1, STREAM_FOLDS, 0)
    seeds = {derive_seed(1, stream, index) for stream in (STREAM_FOLDS, STREAM_REPLICATION) for index in range(50)}
    assert len(seeds) == 100
    assert derive_seed(1, STREAM_FOLDS) != derive_seed(2, STREAM_FOLDS)


def test_make_rng_streams_repeat():
    first = make_rng(7, STREAM_REPLICATION, 3).standard_normal(5)
    assert np.array_equal(first, make_rng(7, STREAM_REPLICATION, 3).standard_normal(5))
