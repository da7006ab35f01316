"""Space-time grid specification.

The grid carries N_t time steps of size dt on [t0, t1] and N_x sites of
spacing dx on [x_min, x_max].  Time indices run 0..N_t (grid times), noise
rows run 0..N_t-1 (one row per step n -> n+1).  All solver operations are
index-based; conversions between physical coordinates and indices live here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError

# Relative slack for "is an integer multiple" checks and for the kernel
# radius; absorbs accumulated ulp error in quotients like 0.6/0.1.
_SNAP = 1e-9


def _near_int(q: float) -> bool:
    return abs(q - round(q)) <= _SNAP * max(1.0, abs(q))


@dataclass(frozen=True)
class GridSpec:
    t0: float
    t1: float
    x_min: float
    x_max: float
    dt: float
    dx: float
    kernel_radius_sigmas: float
    n_steps: int
    n_sites: int

    @property
    def times(self):
        import numpy as np

        return self.t0 + self.dt * np.arange(self.n_steps + 1)

    @property
    def xs(self):
        import numpy as np

        return self.x_min + self.dx * np.arange(self.n_sites)

    def x_of_site(self, j: int) -> float:
        return self.x_min + j * self.dx

    def time_of_index(self, n: int) -> float:
        return self.t0 + n * self.dt

    def site_of_x(self, x: float) -> int:
        """Nearest site index, ties broken half-to-even."""
        q = (x - self.x_min) / self.dx
        j = round(q)  # python round: half-to-even
        if j < 0 or j >= self.n_sites:
            raise ConfigurationError(f"x={x} outside grid [{self.x_min}, {self.x_max}]")
        return j

    def index_of_time(self, t: float) -> int:
        q = (t - self.t0) / self.dt
        if not _near_int(q):
            raise ConfigurationError(f"t={t} is not a grid time (dt={self.dt})")
        n = round(q)
        if n < 0 or n > self.n_steps:
            raise ConfigurationError(f"t={t} outside grid [{self.t0}, {self.t1}]")
        return n

    @property
    def origin_site(self) -> int:
        return self.site_of_x(0.0)


def make_grid(
    t0: float,
    t1: float,
    x_min: float,
    x_max: float,
    dt: float,
    dx: float,
    kernel_radius_sigmas: float = 6.0,
) -> GridSpec:
    """Validate extents and build a GridSpec.

    Extents must be integer multiples of the steps (within a 1e-9 relative
    snap), the grid needs at least one time step and three sites, and the
    kernel truncation radius must be at least 3 standard deviations.
    """
    if not (t0 < t1):
        raise ConfigurationError("t0 must be < t1")
    if not (x_min < x_max):
        raise ConfigurationError("x_min must be < x_max")
    if dt <= 0 or dx <= 0:
        raise ConfigurationError("dt and dx must be positive")
    if kernel_radius_sigmas < 3:
        raise ConfigurationError("kernel_radius_sigmas must be >= 3")

    qt = (t1 - t0) / dt
    qx = (x_max - x_min) / dx
    if not _near_int(qt):
        raise ConfigurationError(f"(t1-t0)/dt = {qt} is not an integer")
    if not _near_int(qx):
        raise ConfigurationError(f"(x_max-x_min)/dx = {qx} is not an integer")

    n_steps = round(qt)
    n_sites = round(qx) + 1
    if n_steps < 1:
        raise ConfigurationError("need at least one time step")
    if n_sites < 3:
        raise ConfigurationError(f"N_x = {n_sites} < 3")

    return GridSpec(
        t0=float(t0),
        t1=float(t1),
        x_min=float(x_min),
        x_max=float(x_max),
        dt=float(dt),
        dx=float(dx),
        kernel_radius_sigmas=float(kernel_radius_sigmas),
        n_steps=n_steps,
        n_sites=n_sites,
    )


def kernel_radius(dt: float, dx: float, sigmas: float) -> int:
    """Half-width in sites of the truncated heat kernel for one step."""
    return int(math.ceil(sigmas * math.sqrt(dt) / dx - _SNAP))
