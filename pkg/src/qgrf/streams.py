"""Counter-based keyed uniforms.

Every random number used by the walk simulator is a pure function of a key
tuple (seed, stream, ensemble, node, slot, step, tag).  There is no generator
state, so rows can be built in any order, in parallel or serially, and give
identical bits.  The mixer is SplitMix64's finaliser applied once per key word.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1

TAG_TRV = 1
TAG_DIRECTION = 2


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _as_u64(x):
    arr = np.asarray(x)
    if arr.dtype == np.uint64:
        return arr
    if arr.dtype.kind in "iu":
        return arr.astype(np.uint64)
    raise TypeError(f"key words must be integers, got {arr.dtype}")


def keyed_bits(seed, *words):
    """64-bit hash of the broadcast key words."""
    with np.errstate(over="ignore"):
        shape = np.broadcast_shapes(*(np.shape(w) for w in words)) if words else ()
        h = np.full(shape, _mix(np.atleast_1d(np.uint64(int(seed) & _MASK)) + _GOLDEN)[0],
                    dtype=np.uint64)
        for k, w in enumerate(words, start=1):
            salt = np.uint64((k * 0x9E3779B97F4A7C15) & _MASK)
            h = _mix(h ^ _mix(np.atleast_1d(_as_u64(w)) + salt).reshape(np.shape(w)))
        return h


def keyed_uniform(seed, *words):
    """Uniform doubles in [0, 1) keyed by ``(seed, *words)`` (broadcasting)."""
    bits = keyed_bits(seed, *words)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
