"""Discretized space-time white noise on the grid.

Cell (n, j) holds an independent standard Gaussian w[n][j]; the represented
white-noise mass of the cell is w[n][j] * sqrt(dt*dx).  Cells are addressed
through an affine index map into an infinite Philox lattice keyed by the
seed, which makes three things cheap and exact:

* regeneration: same (grid, seed) gives bit-identical fields, cell by cell;
* shifts: an index translation, so overlapping cells keep their values and
  out-of-range cells are freshly keyed (the "re-keying" mode);
* reflections: an index sign flip per axis; involutive by construction.

A field loaded from disk is array-backed instead; symmetry actions on it are
eager index transforms and refuse to leave the stored window.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DomainError
from .grid import GridSpec
from .rng import standard_normal

_MAGIC = b"SHL1"
_VERSION = 1
_HEADER = struct.Struct("<4sHII4dQ14x")  # padded to 64 bytes
_MASK = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class _IndexMap:
    """Affine map (n, j) -> (st*n + ot, sx*j + ox) into the Philox lattice."""

    st: int = 1
    ot: int = 0
    sx: int = 1
    ox: int = 0

    def apply_t(self, n):
        return (self.st * n + self.ot) & _MASK if np.isscalar(n) else (
            np.uint64(self.st & _MASK) * n.astype(np.uint64)
            + np.uint64(self.ot & _MASK)
        )

    def apply_x(self, j):
        return (self.sx * j + self.ox) & _MASK if np.isscalar(j) else (
            np.uint64(self.sx & _MASK) * j.astype(np.uint64)
            + np.uint64(self.ox & _MASK)
        )


@dataclass(frozen=True)
class NoiseField:
    grid: GridSpec
    seed: int
    index_map: _IndexMap = _IndexMap()
    data: np.ndarray | None = None  # set when array-backed (loaded from disk)

    def cell(self, n: int, j: int) -> float:
        """Value of one cell, without generating anything else."""
        self._check(n, j)
        if self.data is not None:
            return float(self.data[n, j])
        c0 = np.uint64(self.index_map.apply_t(n))
        c1 = np.uint64(self.index_map.apply_x(j))
        return float(standard_normal(c0, c1, self.seed))

    def rows(self, n_lo: int, n_hi: int) -> np.ndarray:
        """Rows n_lo..n_hi-1 as an (n_hi-n_lo, N_x) array."""
        if not (0 <= n_lo <= n_hi <= self.grid.n_steps):
            raise DomainError(f"rows [{n_lo}, {n_hi}) outside 0..{self.grid.n_steps}")
        if self.data is not None:
            return self.data[n_lo:n_hi]
        ns = np.arange(n_lo, n_hi, dtype=np.int64)
        js = np.arange(self.grid.n_sites, dtype=np.int64)
        c0 = self.index_map.apply_t(ns)[:, None]
        c1 = self.index_map.apply_x(js)[None, :]
        return standard_normal(c0, c1, self.seed)

    def values(self) -> np.ndarray:
        return self.rows(0, self.grid.n_steps)

    def _check(self, n: int, j: int) -> None:
        if not (0 <= n < self.grid.n_steps and 0 <= j < self.grid.n_sites):
            raise DomainError(f"cell ({n}, {j}) outside grid")


def sample_noise(grid: GridSpec, seed: int) -> NoiseField:
    """Seeded noise field on the grid; generation is lazy and per-cell."""
    return NoiseField(grid=grid, seed=int(seed) & _MASK)


def shift_noise(noise: NoiseField, k_t: int, k_x: int, rekey: bool = True) -> NoiseField:
    """Field with w'[n][j] = w[n+k_t][j+k_x].

    A nonzero shift necessarily moves part of the index window outside the
    grid.  With rekey=True those cells draw fresh values from their shifted
    counter keys, which preserves the law exactly and keeps all overlapping
    cells bit-identical.  Array-backed fields cannot re-key.
    """
    if k_t == 0 and k_x == 0:
        return noise
    if noise.data is not None or not rekey:
        raise DomainError("shift leaves the grid and re-keying is unavailable")
    m = noise.index_map
    new_map = _IndexMap(
        st=m.st, ot=(m.ot + m.st * k_t) & _MASK, sx=m.sx, ox=(m.ox + m.sx * k_x) & _MASK
    )
    return replace(noise, index_map=new_map)


def reflect_noise(noise: NoiseField, axis: str) -> NoiseField:
    """Index reversal along 'time' (rows) or 'space' (sites)."""
    g = noise.grid
    if axis not in ("time", "space"):
        raise ConfigurationError("axis must be 'time' or 'space'")
    if noise.data is not None:
        flipped = noise.data[::-1, :] if axis == "time" else noise.data[:, ::-1]
        return replace(noise, data=np.ascontiguousarray(flipped))
    m = noise.index_map
    if axis == "time":
        new_map = _IndexMap(
            st=-m.st, ot=(m.ot + m.st * (g.n_steps - 1)) & _MASK, sx=m.sx, ox=m.ox
        )
    else:
        new_map = _IndexMap(
            st=m.st, ot=m.ot, sx=-m.sx, ox=(m.ox + m.sx * (g.n_sites - 1)) & _MASK
        )
    return replace(noise, index_map=new_map)


def save_noise(noise: NoiseField, path) -> None:
    """Write the field in the fixed little-endian binary layout.

    64-byte header: magic 'SHL1', version u16, N_t u32, N_x u32, t0, dt,
    x_min, dx as f64, seed u64, zero padding; then N_t*N_x f64 cell values
    in time-major order.
    """
    g = noise.grid
    header = _HEADER.pack(
        _MAGIC, _VERSION, g.n_steps, g.n_sites, g.t0, g.dt, g.x_min, g.dx, noise.seed
    )
    vals = np.ascontiguousarray(noise.values(), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(vals.tobytes())


def load_noise(path, kernel_radius_sigmas: float = 6.0) -> NoiseField:
    """Read a field written by save_noise; the result is array-backed."""
    from .grid import make_grid

    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise ConfigurationError("truncated noise file header")
        magic, version, n_t, n_x, t0, dt, x_min, dx, seed = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise ConfigurationError(f"bad magic {magic!r}")
        if version != _VERSION:
            raise ConfigurationError(f"unsupported version {version}")
        body = np.frombuffer(fh.read(8 * n_t * n_x), dtype="<f8")
    if body.size != n_t * n_x:
        raise ConfigurationError("truncated noise file body")
    grid = make_grid(
        t0, t0 + n_t * dt, x_min, x_min + (n_x - 1) * dx, dt, dx, kernel_radius_sigmas
    )
    data = body.reshape(n_t, n_x).astype(np.float64)
    return NoiseField(grid=grid, seed=int(seed), data=data)
