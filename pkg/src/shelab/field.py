"""One spatial profile at one grid time.

The represented profile is exp(log_offset) * values[j].  Free energies drift
linearly in time, so linear storage would overflow on long horizons; the
solver keeps max(values) inside [0.5, 2] by exact power-of-two rescales and
accumulates the scale in log_offset.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .grid import GridSpec


@dataclass(frozen=True)
class Field:
    grid: GridSpec
    time_index: int
    values: np.ndarray
    log_offset: float = 0.0
    max_leak: float = 0.0  # largest per-step boundary-leak fraction seen

    def represented(self) -> np.ndarray:
        """Profile in linear scale (may overflow for long horizons)."""
        return np.exp(self.log_offset) * self.values

    def log_values(self) -> np.ndarray:
        """log of the profile; -inf at zero sites."""
        with np.errstate(divide="ignore"):
            return np.log(self.values) + self.log_offset

    def scaled(self, factor: float) -> "Field":
        if factor <= 0:
            raise DomainError("scale factor must be positive")
        return replace(self, log_offset=self.log_offset + float(np.log(factor)))

    def stabilized(self) -> "Field":
        """Same profile with max(values) in [0.5, 2) via a power of two."""
        mx = float(self.values.max())
        if mx <= 0.0:
            raise DomainError("field has no positive site")
        if 0.5 <= mx < 2.0:
            return self
        _, ex = np.frexp(mx)
        ln2 = float.fromhex("0x1.62e42fefa39efp-1")
        return replace(
            self,
            values=np.ldexp(self.values, -int(ex) + 1),
            log_offset=self.log_offset + (int(ex) - 1) * ln2,
        )


def field_from_values(grid: GridSpec, time_index: int, values, log_offset: float = 0.0) -> Field:
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (grid.n_sites,):
        raise DomainError(f"expected {grid.n_sites} sites, got {v.shape}")
    if v.min() < 0:
        raise DomainError("field values must be nonnegative")
    if not np.any(v > 0):
        raise DomainError("field must have a positive site")
    return Field(grid=grid, time_index=int(time_index), values=v, log_offset=float(log_offset)).stabilized()


def delta_field(grid: GridSpec, time_index: int, site: int) -> Field:
    """Point mass: 1/dx at one site, the discrete delta of unit mass."""
    if not (0 <= site < grid.n_sites):
        raise DomainError(f"site {site} outside grid")
    v = np.zeros(grid.n_sites)
    v[site] = 1.0 / grid.dx
    return field_from_values(grid, time_index, v)


def exp_profile_field(grid: GridSpec, time_index: int, slope: float) -> Field:
    """The profile e^{slope * x} truncated to the grid, stabilized."""
    logs = slope * grid.xs
    mx = logs.max()
    return Field(
        grid=grid,
        time_index=int(time_index),
        values=np.exp(logs - mx),
        log_offset=float(mx),
    ).stabilized()
