"""Utility modules."""

from fullmed.utils.seeding import derive_seed, make_rng

__all__ = ["derive_seed", "make_rng"]
