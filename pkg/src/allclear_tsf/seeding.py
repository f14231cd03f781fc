"""Deterministic seed derivation.

All randomness is derived from one unsigned 64-bit master seed. Child seeds
come from a SplitMix64 finaliser applied to ``seed + (key + 1) * GOLDEN``
(mod 2**64); nested keys are folded left to right, so
``mix(s, a, b) == mix(mix(s, a), b)``. String keys are first reduced with
64-bit FNV-1a over their UTF-8 bytes.
"""
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def splitmix64(z):
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fnv1a64(text):
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & MASK64
    return h


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def mix(seed, *keys):
    """Derive a child seed from ``seed`` and one or more integer/string keys."""
    z = check_seed(seed)
    for key in keys:
        if isinstance(key, str):
            key = fnv1a64(key)
        z = splitmix64(z + ((int(key) + 1) * GOLDEN))
    return z


def rng(seed):
    """Numpy generator (PCG64) for a 64-bit seed."""
    return np.random.default_rng(check_seed(seed))
