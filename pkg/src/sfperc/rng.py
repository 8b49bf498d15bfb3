"""Counter-based random numbers.

Every random quantity in the package is a pure function of a 64-bit seed and
a small tuple of integer counters, mixed with the splitmix64 finalizer.  There
is no generator state, so results do not depend on evaluation order or on how
work is split across threads.
"""

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1

# stream tags, kept distinct so that different quantities never share inputs
TAG_WEIGHT = 0x57
TAG_EDGE = 0x45
TAG_TRIAL = 0x54
TAG_NODE = 0x4E
TAG_PAIR = 0x50
TAG_ORIGIN = 0x4F

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 1.0 / 9007199254740992.0


@njit(cache=True, nogil=True)
def splitmix64(x):
    z = np.uint64(x) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def mix2(a, b):
    return splitmix64(splitmix64(a) ^ np.uint64(b))


@njit(cache=True, nogil=True)
def mix3(a, b, c):
    return splitmix64(mix2(a, b) ^ np.uint64(c))


@njit(cache=True, nogil=True)
def mix4(a, b, c, d):
    return splitmix64(mix3(a, b, c) ^ np.uint64(d))


@njit(cache=True, nogil=True)
def to_unit_open(h):
    """Map a 64-bit word to a double strictly inside (0, 1)."""
    return (float(h >> np.uint64(11)) + 0.5) * _TWO_M53


def seed_u64(seed):
    """Reduce an arbitrary Python integer to a 64-bit seed."""
    return np.uint64(int(seed) & MASK64)


def trial_seed(master_seed, trial_id):
    """Seed of trial ``trial_id`` under ``master_seed`` (avalanche mix of both)."""
    return int(mix3(seed_u64(master_seed), np.uint64(TAG_TRIAL), np.uint64(trial_id)))


def uniform(seed, tag, counter):
    """Scalar uniform in (0, 1) keyed by ``(seed, tag, counter)``."""
    return float(to_unit_open(mix3(seed_u64(seed), np.uint64(tag), np.uint64(counter))))


@njit(cache=True, nogil=True)
def uniforms_keyed(seed, tag, n):
    out = np.empty(n)
    s = np.uint64(seed)
    t = np.uint64(tag)
    for i in range(n):
        out[i] = to_unit_open(mix3(s, t, np.uint64(i)))
    return out
