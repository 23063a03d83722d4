"""Keyed 64-bit integer hashing used by the local-hashing mechanisms.

The hash family is realized as a splitmix64-style finalizer over
(seed, value) reduced modulo the range size g. The function is an
implementation constant: the same (seed, value, g) triple yields the same
output on any machine and across process restarts.
"""

from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _finalize(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def hash_values(seeds, values, g: int) -> np.ndarray:
    """Vectorized keyed hash of `values` under `seeds`, into 0..g-1.

    seeds and values broadcast against each other.
    """
    s = np.asarray(seeds, dtype=np.uint64)
    v = np.asarray(values, dtype=np.uint64)
    # wraparound modulo 2^64 is the intended mixing behavior
    with np.errstate(over="ignore"):
        z = s ^ _finalize((v + np.uint64(1)) * _GOLDEN)
        return (_finalize(z) % np.uint64(g)).astype(np.int64)


def hash_value(seed: int, v: int, g: int) -> int:
    """Scalar keyed hash; identical to the vectorized path by construction."""
    return int(hash_values(np.uint64(seed), np.uint64(v), g))


def random_seed(rng: np.random.Generator) -> int:
    """Draw a fresh 64-bit hash-function seed."""
    return int(rng.integers(0, 2**64, dtype=np.uint64))


def random_seeds(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2**64, size=n, dtype=np.uint64)
