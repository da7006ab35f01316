"""Counter-based random numbers (Philox-2x64-10).

Every variate is a pure function of (key, counter), so any grid cell, any
replica, and any sampling decision can be generated independently, in any
order, on any number of workers, with bit-identical results.  The generator
is the 10-round Philox bijection on two 64-bit words; see Salmon et al.,
"Parallel random numbers: as easy as 1, 2, 3" for the construction.

All bulk paths are vectorized over numpy uint64 arrays.  Gaussians come from
the Box-Muller transform of the two words of one Philox block, so one block
yields one standard normal (the sine branch is discarded).
"""

from __future__ import annotations

import numpy as np

_MUL = np.uint64(0xD2B74407B1CE6E93)
_WEYL = np.uint64(0x9E3779B97F4A7C15)
_LO32 = np.uint64(0xFFFFFFFF)
_R32 = np.uint64(32)
_TWO53 = float(2**53)


def _mulhilo(a, b):
    """Split 64x64 -> 128-bit product into (hi, lo) words."""
    a_hi = a >> _R32
    a_lo = a & _LO32
    b_hi = b >> _R32
    b_lo = b & _LO32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> _R32) + (lh & _LO32) + (hl & _LO32)
    hi = hh + (lh >> _R32) + (hl >> _R32) + (mid >> _R32)
    lo = (mid << _R32) | (ll & _LO32)
    return hi, lo


def philox2x64(c0, c1, key):
    """One Philox-2x64-10 block. Arguments broadcast as uint64 arrays."""
    x0 = np.asarray(c0, dtype=np.uint64)
    x1 = np.asarray(c1, dtype=np.uint64)
    x0, x1 = np.broadcast_arrays(x0, x1)
    x0 = x0.copy()
    x1 = x1.copy()
    k = np.uint64(key)
    with np.errstate(over="ignore"):  # uint64 wraparound is the point
        for _ in range(10):
            hi, lo = _mulhilo(_MUL, x0)
            x0 = hi ^ x1 ^ k
            x1 = lo
            k = k + _WEYL
    return x0, x1


def uniform_pair(c0, c1, key):
    """Two uniforms in (0,1) per counter, from one Philox block."""
    r0, r1 = philox2x64(c0, c1, key)
    u0 = ((r0 >> np.uint64(11)).astype(np.float64) + 0.5) / _TWO53
    u1 = ((r1 >> np.uint64(11)).astype(np.float64) + 0.5) / _TWO53
    return u0, u1


def standard_normal(c0, c1, key):
    """One standard normal per (c0, c1) counter pair."""
    u0, u1 = uniform_pair(c0, c1, key)
    return np.sqrt(-2.0 * np.log(u0)) * np.cos(2.0 * np.pi * u1)


def uniforms(c0, c1, key):
    """One uniform in (0,1) per counter pair."""
    return uniform_pair(c0, c1, key)[0]


def derive_key(key: int, *tags: int) -> int:
    """Fold integer tags into a key, for independent substreams.

    Used to give replicas, Brownian drivers, and path samplers their own
    streams off one experiment seed.
    """
    k = np.uint64(key & 0xFFFFFFFFFFFFFFFF)
    for i, t in enumerate(tags):
        r0, _ = philox2x64(
            np.uint64(int(t) & 0xFFFFFFFFFFFFFFFF), np.uint64(i + 1), k
        )
        k = np.uint64(r0)
    return int(k)
