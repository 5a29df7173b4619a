"""Counter-based random numbers.

Every random draw in capkit is a pure function of a seed and a counter
(pixel coordinates, a token string, ...), so results never depend on call
order or on shared generator state.
"""

import hashlib

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def mix64(x):
    """splitmix64 finalizer applied elementwise to a uint64 array."""
    z = np.asarray(x, dtype=np.uint64).copy()
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def hash_counters(seed: int, *counters) -> np.ndarray:
    """Hash ``seed`` together with broadcastable integer counter arrays.

    Each counter is folded in with a golden-ratio increment followed by a
    full avalanche, so (seed, a, b) and (seed, b, a) give unrelated words.
    """
    with np.errstate(over="ignore"):
        h = mix64(np.array([seed & _MASK64], dtype=np.uint64) + _GOLDEN)
        for c in counters:
            c = np.asarray(c).astype(np.int64).astype(np.uint64)
            h = mix64(h ^ (c + _GOLDEN))
    return h


def uniform01(words: np.ndarray) -> np.ndarray:
    """Map uint64 words to doubles in [0, 1) using the top 53 bits."""
    return (words >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def derive_seed(seed: int, key: str) -> int:
    """Stable 64-bit seed for a (seed, string) pair."""
    digest = hashlib.blake2b(f"{seed & _MASK64}\x00{key}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
