"""Brute-force verifiers for tiny instances.

The solver is a product of per-step transfer operators; on a tiny grid that
product can be expanded as a sum over all site paths, weighted by kernel
taps and noise multipliers.  enumerate_partition computes that sum directly
(no shared code with the solver), which certifies the implementation before
any statistical experiment.  The enumeration targets the scheme itself, not
the continuum equation: continuum fidelity is assessed separately through
refinement trends.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .grid import GridSpec, kernel_radius
from .noise import NoiseField

MAX_STEPS = 4
MAX_SITES = 9


@dataclass(frozen=True)
class TinyInstance:
    noise: NoiseField
    s_idx: int
    x_j: int
    t_idx: int

    def __post_init__(self):
        g = self.noise.grid
        if self.t_idx - self.s_idx > MAX_STEPS or g.n_sites > MAX_SITES:
            raise ConfigurationError(
                f"instance too large (<= {MAX_STEPS} steps x {MAX_SITES} sites)"
            )
        if not (0 <= self.s_idx <= self.t_idx <= g.n_steps):
            raise ConfigurationError("index out of range")


def _weights(grid: GridSpec):
    r = kernel_radius(grid.dt, grid.dx, grid.kernel_radius_sigmas)
    m = np.arange(-r, r + 1, dtype=np.float64)
    w = np.exp(-((m * grid.dx) ** 2) / (2.0 * grid.dt))
    w /= w.sum()
    return r, w


def enumerate_partition(inst: TinyInstance, y_j: int) -> float:
    """Z(t, y | s, x) as an explicit sum over all site paths.

    Each path (z_0 = x, ..., z_N = y) contributes the product over steps of
    kernel weight k(z_{n+1} - z_n) times the mean-one noise multiplier read
    at the destination site, with the 1/dx point-mass normalization.
    """
    g = inst.noise.grid
    r, w = _weights(g)
    amp = math.sqrt(g.dt / g.dx)
    ito = g.dt / (2.0 * g.dx)
    nsteps = inst.t_idx - inst.s_idx
    if nsteps == 0:
        return (1.0 if y_j == inst.x_j else 0.0) / g.dx
    rows = inst.noise.rows(inst.s_idx, inst.t_idx)
    total = 0.0
    sites = range(g.n_sites)
    for mids in itertools.product(sites, repeat=nsteps - 1):
        path = (inst.x_j,) + mids + (y_j,)
        weight = 1.0
        for n in range(nsteps):
            hop = path[n + 1] - path[n]
            if abs(hop) > r:
                weight = 0.0
                break
            weight *= w[hop + r] * math.exp(amp * rows[n][path[n + 1]] - ito)
        total += weight
    return total / g.dx


def enumerate_field(inst: TinyInstance) -> np.ndarray:
    """Green's function at every target site, by enumeration."""
    g = inst.noise.grid
    return np.array([enumerate_partition(inst, y) for y in range(g.n_sites)])


def enumerate_point_to_line(inst: TinyInstance) -> float:
    """Free-endpoint partition function: sum over y of Z(t,y|s,x) dx."""
    g = inst.noise.grid
    return float(sum(enumerate_partition(inst, y) for y in range(g.n_sites)) * g.dx)


def exact_mean_kernel(grid: GridSpec, n_steps: int, x_j: int) -> np.ndarray:
    """n-fold absorbing convolution of the unit point mass (no noise).

    Equals the exact sitewise expectation of the Green's function because
    the noise multipliers have mean one and are independent across steps.
    """
    r, w = _weights(grid)
    v = np.zeros(grid.n_sites)
    v[x_j] = 1.0 / grid.dx
    for _ in range(n_steps):
        out = np.zeros_like(v)
        n = v.shape[0]
        for m in range(-r, r + 1):
            c = w[m + r]
            if m >= 0:
                out[: n - m] += c * v[m:]
            else:
                out[-m:] += c * v[: n + m]
        v = out
    return v
