"""Reference numpy implementation of the stepping kernels.

The compiled backend reproduces these loops bit-for-bit: convolution taps
accumulate in the same order, sums that feed diagnostics are sequential, and
stabilization rescales by exact powers of two, so results do not depend on
which backend ran.  Keep the two implementations in lockstep when editing.
"""

from __future__ import annotations

import numpy as np

NAME = "python"

_LN2 = float.fromhex("0x1.62e42fefa39efp-1")


def _conv_leak(v: np.ndarray, kern: np.ndarray, radius: int):
    """Absorbing-boundary convolution and the mass it drops off the edges.

    Returns (out, leak, total) with total the pre-step mass; both edge sums
    accumulate in a fixed order so every backend reports identical bytes.
    """
    n = v.shape[0]
    out = np.zeros_like(v)
    for m in range(-radius, radius + 1):
        w = kern[m + radius]
        if m >= 0:
            out[: n - m] += w * v[m:]
        else:
            out[-m:] += w * v[: n + m]
    total = float(np.cumsum(v)[-1])
    leak = 0.0
    acc_pre = 0.0
    acc_suf = 0.0
    for m in range(1, min(radius, n) + 1):
        acc_pre += float(v[m - 1])
        acc_suf += float(v[n - m])
        leak += kern[radius + m] * acc_pre
        leak += kern[radius - m] * acc_suf
    return out, leak, total


def _renorm(v: np.ndarray, dlog: float):
    mx = float(v.max())
    if mx > 0.0 and (mx < 0.5 or mx >= 2.0):
        _, ex = np.frexp(mx)
        ex = int(ex)
        v = np.ldexp(v, -ex + 1)
        dlog += (ex - 1) * _LN2
    return v, dlog


def propagate_span(values, kernel, mult, adjoint=False):
    """Apply one splitting step per row of `mult`, in row order.

    Forward steps convolve then multiply; adjoint steps multiply then
    convolve (the exact transpose, since the truncated kernel matrix is
    symmetric).  Returns (values, dlog, max_leak) where dlog collects the
    power-of-two stabilization offsets and max_leak is the largest dropped
    mass fraction seen in any single step.
    """
    v = np.array(values, dtype=np.float64, copy=True)
    radius = (kernel.shape[0] - 1) // 2
    dlog = 0.0
    max_leak = 0.0
    for i in range(mult.shape[0]):
        if adjoint:
            v = v * mult[i]
            v, leak, total = _conv_leak(v, kernel, radius)
        else:
            v, leak, total = _conv_leak(v, kernel, radius)
            v = v * mult[i]
        if total > 0.0:
            frac = leak / total
            if frac > max_leak:
                max_leak = frac
        v, dlog = _renorm(v, dlog)
    return v, dlog, max_leak


def heat_span(values, kernel, n_steps):
    """n_steps noiseless convolution steps (the scheme's exact mean flow)."""
    v = np.array(values, dtype=np.float64, copy=True)
    radius = (kernel.shape[0] - 1) // 2
    dlog = 0.0
    max_leak = 0.0
    for _ in range(n_steps):
        v, leak, total = _conv_leak(v, kernel, radius)
        if total > 0.0:
            frac = leak / total
            if frac > max_leak:
                max_leak = frac
        v, dlog = _renorm(v, dlog)
    return v, dlog, max_leak
