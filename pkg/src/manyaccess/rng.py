"""Portable seeded randomness.

All simulation randomness flows through Philox4x64-10, a counter-based
generator whose raw stream is fully determined by a 64-bit key.  Trial
substreams are derived by a SplitMix64 hash of (master seed, index), so
any run is reproducible from the master seed alone.  Conformance of both
pieces is pinned by test vectors in tests/test_rng.py.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """One SplitMix64 step: returns the output word for the given state."""
    z = (state + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(master_seed: int, *indices: int) -> int:
    """Derive a 64-bit substream seed from a master seed and index path.

    Each index is folded in with one SplitMix64 step, so substreams for
    different index tuples are statistically independent.
    """
    s = splitmix64(master_seed & _MASK64)
    for ix in indices:
        s = splitmix64((s ^ ((ix + 1) * _GOLDEN)) & _MASK64)
    return s


def make_rng(seed: int) -> np.random.Generator:
    """Generator backed by Philox keyed directly with the 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))


def substream(master_seed: int, *indices: int) -> np.random.Generator:
    """Generator for the substream addressed by the given index path."""
    return make_rng(mix_seed(master_seed, *indices))
