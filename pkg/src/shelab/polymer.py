"""Continuum-polymer Markov chains with exact grid densities.

A chain starts at (t, y) and walks backward to a horizon r.  Its transition
density from (s', w') down to (s, z) is the Gibbs form

    pi(s, z | s', w') = Z(s', w' | s, z) V(s, z) / V(s', w'),

where the value function V(s, .) is the solution at time s propagated up
from the terminal condition at the horizon (a pinned point, a density, or a
Busemann-weighted profile for the semi-infinite chain).  The exact one-time
marginal is m_s(z) = B(s, z) V(s, z) / V(t, y) with B(s, z) = Z(t, y | s, z)
the backward (adjoint) field; its normalization is the Chapman-Kolmogorov
identity, so it holds to float accumulation.

Laws (row sums, marginals, total variation, large-deviation rates, CDF
dominance) are computed from these exact arrays; path sampling exists for
path-level statistics only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import backends
from .busemann import busemann_l2p
from .errors import ConfigurationError, DomainError
from .field import Field, delta_field, field_from_values
from .grid import GridSpec
from .noise import NoiseField
from .rng import uniforms
from .solver import HeatKernelDiscrete, _noise_multipliers


@dataclass(frozen=True)
class DeltaAt:
    site: int


@dataclass(frozen=True)
class Density:
    values: np.ndarray


@dataclass(frozen=True)
class BusemannDoob:
    lam: float
    est_depth_r: float  # start time of the profile estimate, below the horizon


TerminalSpec = DeltaAt | Density | BusemannDoob


@dataclass(frozen=True)
class PolymerChain:
    grid: GridSpec
    noise: NoiseField
    start: tuple[int, int]  # (time index, site)
    horizon: int  # time index of the terminal condition
    terminal: TerminalSpec
    v_values: np.ndarray  # (ncols, nsites) value function, stabilized
    v_offsets: np.ndarray  # (ncols,) log offsets
    b_values: np.ndarray  # (ncols, nsites) backward field from the start
    b_offsets: np.ndarray

    @property
    def n_cols(self) -> int:
        return self.v_values.shape[0]

    def col(self, s_idx: int) -> int:
        c = s_idx - self.horizon
        if not (0 <= c < self.n_cols):
            raise DomainError(f"time index {s_idx} outside chain columns")
        return c

    def marginal(self, s_idx: int) -> np.ndarray:
        """Exact density of X_s, normalized to sum * dx = 1."""
        c = self.col(s_idx)
        dens = self.v_values[c] * self.b_values[c]
        total = float(np.cumsum(dens)[-1]) * self.grid.dx
        if total <= 0.0:
            raise DomainError("degenerate marginal")
        return dens / total

    def transition_matrix(self, s_idx: int) -> np.ndarray:
        """pi[w', z] for the move from (s_idx+1, w') down to (s_idx, z).

        Rows integrate to one against dx up to float accumulation, because
        the value function was built with the same one-step operators.
        """
        cz = self.col(s_idx)
        cw = self.col(s_idx + 1)
        g = self.grid
        kern = HeatKernelDiscrete.for_grid(g)
        r = kern.radius
        n = g.n_sites
        mult = _noise_multipliers(self.noise, s_idx, s_idx + 1)[0]
        # banded kernel matrix K[w', z] = k(w' - z)
        kmat = np.zeros((n, n))
        for m in range(-r, r + 1):
            lo = max(0, m)
            hi = n + min(0, m)
            idx = np.arange(lo, hi)
            kmat[idx, idx - m] = kern.weights[m + r]
        scale = math.exp(self.v_offsets[cz] - self.v_offsets[cw])
        pi = (
            kmat
            * mult[:, None]
            * self.v_values[cz][None, :]
            * scale
            / (g.dx * self.v_values[cw][:, None])
        )
        return pi

    def push_marginal(self, m_upper: np.ndarray, s_idx: int) -> np.ndarray:
        """Apply one backward transition to a marginal at s_idx+1.

        Banded evaluation of m_s(z) = sum_w m_{s+1}(w) pi(s, z | s+1, w) dx;
        scalar prefactors drop out in the closing normalization.  Used by
        the tail-harmonicity checks.
        """
        cz = self.col(s_idx)
        cw = self.col(s_idx + 1)
        g = self.grid
        kern = HeatKernelDiscrete.for_grid(g)
        mult = _noise_multipliers(self.noise, s_idx, s_idx + 1)[0]
        ratio = m_upper * mult / self.v_values[cw]
        conv, _, _ = backends.heat_span(ratio, kern.weights, 1)
        out = self.v_values[cz] * conv
        return out / (float(np.cumsum(out)[-1]) * g.dx)


def _terminal_field(
    noise: NoiseField, terminal: TerminalSpec, horizon: int
) -> Field:
    g = noise.grid
    if isinstance(terminal, DeltaAt):
        return delta_field(g, horizon, terminal.site)
    if isinstance(terminal, Density):
        return field_from_values(g, horizon, terminal.values)
    if isinstance(terminal, BusemannDoob):
        est = busemann_l2p(
            noise, terminal.lam, terminal.est_depth_r, window_times=[horizon]
        )
        return est.exp_profile_field(horizon)
    raise ConfigurationError(f"unknown terminal {terminal!r}")


def build_chain(
    noise: NoiseField,
    start: tuple[int, int],
    terminal: TerminalSpec,
    r_idx: int,
) -> PolymerChain:
    """Backward polymer chain from `start` to horizon r_idx.

    One forward value sweep from the terminal and one adjoint sweep from the
    start populate every column; both sweeps store every intermediate
    column, so marginals and transitions anywhere in the chain are exact
    array reads afterwards.
    """
    g = noise.grid
    t_idx, y_site = start
    if not (0 <= r_idx < t_idx <= g.n_steps):
        raise ConfigurationError("need horizon r < start time within the grid")
    if not (0 <= y_site < g.n_sites):
        raise ConfigurationError("start site outside grid")

    kern = HeatKernelDiscrete.for_grid(g)
    ncols = t_idx - r_idx + 1
    n = g.n_sites

    term = _terminal_field(noise, terminal, r_idx)
    v_values = np.empty((ncols, n))
    v_offsets = np.empty(ncols)
    v = np.array(term.values)
    off = term.log_offset
    v_values[0] = v
    v_offsets[0] = off
    for c in range(1, ncols):
        mult = _noise_multipliers(noise, r_idx + c - 1, r_idx + c)
        v, d, _ = backends.propagate_span(v, kern.weights, mult)
        off += d
        v_values[c] = v
        v_offsets[c] = off
    if not np.all(v_values[-1] > 0):
        # positive terminals make this impossible inside the cone
        if v_values[-1][y_site] <= 0:
            raise DomainError("value function vanishes at the start point")

    b_values = np.empty((ncols, n))
    b_offsets = np.empty(ncols)
    u = delta_field(g, t_idx, y_site)
    bv = np.array(u.values)
    boff = u.log_offset
    b_values[-1] = bv
    b_offsets[-1] = boff
    for c in range(ncols - 2, -1, -1):
        mult = _noise_multipliers(noise, r_idx + c, r_idx + c + 1)
        bv, d, _ = backends.propagate_span(bv, kern.weights, mult, adjoint=True)
        boff += d
        b_values[c] = bv
        b_offsets[c] = boff

    return PolymerChain(
        grid=g,
        noise=noise,
        start=(t_idx, y_site),
        horizon=r_idx,
        terminal=terminal,
        v_values=v_values,
        v_offsets=v_offsets,
        b_values=b_values,
        b_offsets=b_offsets,
    )


def sample_paths(chain: PolymerChain, n_paths: int, seed: int) -> np.ndarray:
    """Backward trajectories sampled column by column by inverse CDF.

    Returns an (n_paths, ncols) array of site indices, column 0 at the
    horizon.  Each decision reads one counter-indexed uniform, so paths are
    reproducible and independent of each other.
    """
    g = chain.grid
    kern = HeatKernelDiscrete.for_grid(g)
    r = kern.radius
    n = g.n_sites
    ncols = chain.n_cols
    t_idx, y_site = chain.start
    paths = np.empty((n_paths, ncols), dtype=np.int64)
    paths[:, -1] = y_site
    pos = np.full(n_paths, y_site, dtype=np.int64)
    offsets = np.arange(-r, r + 1)
    kw = kern.weights
    path_ids = np.arange(n_paths, dtype=np.int64)
    for c in range(ncols - 2, -1, -1):
        # weights over z in the band [w'-r, w'+r]: k(w'-z) V(s,z); the
        # multiplier and offsets are constant per row and cancel
        z_idx = pos[:, None] + offsets[None, :]
        valid = (z_idx >= 0) & (z_idx < n)
        z_clip = np.clip(z_idx, 0, n - 1)
        # k(w' - z) = k(z - w') by symmetry, so the tap at offset o is kw[o+r]
        w = kw[None, :] * chain.v_values[c][z_clip] * valid
        cdf = np.cumsum(w, axis=1)
        total = cdf[:, -1]
        u = uniforms(path_ids, np.int64(c), np.uint64(seed)) * total
        choice = (cdf < u[:, None]).sum(axis=1)
        pos = z_clip[path_ids, np.minimum(choice, 2 * r)]
        paths[:, c] = pos
    return paths


def marginal(chain: PolymerChain, s_idx: int) -> np.ndarray:
    return chain.marginal(s_idx)


def tv_distance(m1: np.ndarray, m2: np.ndarray, dx: float) -> float:
    """Half L1 distance between two grid densities; in [0, 1]."""
    if m1.shape != m2.shape:
        raise ConfigurationError("densities on different grids")
    return 0.5 * float(np.abs(m1 - m2).sum()) * dx


def lln_slope(paths: np.ndarray, chain: PolymerChain) -> tuple[float, float]:
    """Mean and standard error of X_r / r over sampled paths, at the horizon."""
    g = chain.grid
    r_time = g.time_of_index(chain.horizon)
    if r_time >= 0:
        raise DomainError("horizon must sit at negative time for a slope")
    xs = g.x_of_site(0) + paths[:, 0] * g.dx
    sl = xs / r_time
    se = sl.std(ddof=1) / math.sqrt(sl.size) if sl.size > 1 else 0.0
    return float(sl.mean()), float(se)


def exact_slope(chain: PolymerChain) -> float:
    """E[X_r]/r from the exact horizon marginal (no sampling noise)."""
    g = chain.grid
    r_time = g.time_of_index(chain.horizon)
    dens = chain.marginal(chain.horizon)
    mean_x = float(np.sum(g.xs * dens)) * g.dx
    return mean_x / r_time


def ldp_rate_single(
    chain: PolymerChain, lam: float, mu: float, band: float
) -> float:
    """-(1/|r|) log Q{X_r/r in [-mu-band, -mu+band]} from the exact marginal."""
    if band <= 0:
        raise ConfigurationError("band must be positive")
    g = chain.grid
    r_time = g.time_of_index(chain.horizon)
    lo = (mu - band) * abs(r_time)
    hi = (mu + band) * abs(r_time)
    sel = (g.xs >= lo - 1e-9) & (g.xs <= hi + 1e-9)
    if not np.any(sel):
        raise DomainError("band event lies entirely outside the domain")
    dens = chain.marginal(chain.horizon)
    p = float(dens[sel].sum()) * g.dx
    if p <= 0:
        raise DomainError("event has zero exact probability mass")
    return -math.log(p) / abs(r_time)


@dataclass(frozen=True)
class DominanceReport:
    worst_violation: float
    worst_col: int
    n_cols: int


def check_dominance(chain_lower: PolymerChain, chain_upper: PolymerChain) -> DominanceReport:
    """Sitewise CDF dominance of exact marginals, column by column.

    chain_lower must be the stochastically smaller configuration (smaller
    start point, or smaller Doob slope).  Dominance means the lower chain's
    CDF sits above the upper chain's; the report carries the worst signed
    violation max(F_upper - F_lower).
    """
    if chain_lower.grid != chain_upper.grid:
        raise ConfigurationError("chains on different grids")
    if chain_lower.horizon != chain_upper.horizon or chain_lower.n_cols != chain_upper.n_cols:
        raise ConfigurationError("chains must share horizon and start time")
    dx = chain_lower.grid.dx
    worst = 0.0
    worst_col = chain_lower.horizon
    for c in range(chain_lower.n_cols):
        s_idx = chain_lower.horizon + c
        f_lo = np.cumsum(chain_lower.marginal(s_idx)) * dx
        f_up = np.cumsum(chain_upper.marginal(s_idx)) * dx
        v = float(np.max(f_up - f_lo))
        if v > worst:
            worst = v
            worst_col = s_idx
    return DominanceReport(
        worst_violation=worst, worst_col=worst_col, n_cols=chain_lower.n_cols
    )
