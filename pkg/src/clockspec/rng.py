"""Counter-based random streams.

Every draw is a pure function of ``(seed, realization, stream, counter)``,
so sequences do not depend on how consumption is batched or on which
thread produced them.  The mixer is the SplitMix64 finalizer applied to a
Weyl sequence, one independent key per (seed, realization, stream).
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1

# stream tags
AMPLITUDE = 0
BITS_FORWARD = 1
BITS_BACKWARD = 2
TORUS = 3
AUX = 4


def mix64(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _u64(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype == np.uint64:
        return arr
    if np.any(arr < 0):
        raise ValueError("stream indices must be non-negative")
    return arr.astype(np.uint64)


def stream_key(seed: int, realization, stream: int = AMPLITUDE) -> np.ndarray:
    """Key for one (seed, realization, stream) triple; vectorized over realization."""
    s = np.array([int(seed) & _MASK], dtype=np.uint64)
    r = _u64(realization)
    with np.errstate(over="ignore"):
        h = mix64(s + _GAMMA)
        h = mix64(h ^ mix64(r + np.uint64(2) * _GAMMA))
        h = mix64(h ^ mix64(np.uint64(stream) + np.uint64(3) * _GAMMA))
    return h


def words(seed: int, realization, stream: int, counters) -> np.ndarray:
    """Raw 64-bit words.

    ``realization`` and ``counters`` broadcast against each other; the usual
    call passes a column of realizations and a row of counters.
    """
    key = stream_key(seed, realization, stream)
    c = _u64(counters)
    with np.errstate(over="ignore"):
        return mix64(key + (c + np.uint64(1)) * _GAMMA)


def uniforms(seed: int, realization, stream: int, counters) -> np.ndarray:
    """Doubles in [0, 1) with 53 random bits each."""
    w = words(seed, realization, stream, counters)
    return (w >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def bits(seed: int, realization: int, stream: int, start: int, count: int) -> np.ndarray:
    """Bits ``start .. start+count-1`` of a stream, most significant bit of each word first."""
    if count <= 0:
        return np.zeros(0, dtype=np.uint8)
    w0, w1 = start // 64, (start + count - 1) // 64
    w = words(seed, realization, stream, np.arange(w0, w1 + 1))
    raw = np.unpackbits(w.astype(">u8").view(np.uint8))
    off = start - 64 * w0
    return raw[off:off + count]
