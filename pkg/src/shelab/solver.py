"""Positivity-preserving splitting solver for the multiplicative-noise SHE.

One step from grid time n to n+1 does

    v  <-  exp(sqrt(dt/dx) w[n][.] - dt/(2 dx)) * (K v)

where K is the truncated, renormalized sampled Gaussian of variance dt and
the exponential factor has expectation exactly one (the Ito correction
cancels the lognormal mean).  This choice makes the paperless bookkeeping
exact: positivity holds per realization, the expectation of the Green's
function is the pure heat flow, Chapman-Kolmogorov and the cocycle property
hold to float accumulation, and total positivity of the Gaussian kernel
survives the product, which gives the comparison principle per realization.

The adjoint sweep (multiply, then convolve, stepping down in time) computes
rows of the Green's function, i.e. value functions z -> Z(t, y | s, z); it
is the exact transpose of the forward product because the truncated kernel
matrix is symmetric.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import backends
from .errors import DomainError
from .field import Field, delta_field, field_from_values
from .grid import GridSpec, kernel_radius
from .noise import NoiseField

#: per-step dropped-mass fraction above which a boundary-leak warning fires
LEAK_THRESHOLD = 1e-8

#: steps per backend call; snapshot indices split chunks
CHUNK = 512


class BoundaryLeakWarning(RuntimeWarning):
    """A propagation step dropped more mass off the domain edge than
    LEAK_THRESHOLD; results near the boundary carry truncation bias."""


@dataclass(frozen=True)
class HeatKernelDiscrete:
    """Sampled Gaussian of variance dt on the site lattice, truncated at
    kernel_radius_sigmas standard deviations and renormalized to unit sum."""

    dt: float
    dx: float
    radius: int
    weights: np.ndarray

    @classmethod
    def for_grid(cls, grid: GridSpec) -> "HeatKernelDiscrete":
        r = kernel_radius(grid.dt, grid.dx, grid.kernel_radius_sigmas)
        m = np.arange(-r, r + 1, dtype=np.float64)
        w = np.exp(-((m * grid.dx) ** 2) / (2.0 * grid.dt))
        w /= w.sum()
        return cls(dt=grid.dt, dx=grid.dx, radius=r, weights=w)


def _kernel_for(grid: GridSpec) -> HeatKernelDiscrete:
    return HeatKernelDiscrete.for_grid(grid)


def _noise_multipliers(noise: NoiseField, n_lo: int, n_hi: int) -> np.ndarray:
    g = noise.grid
    amp = math.sqrt(g.dt / g.dx)
    ito = g.dt / (2.0 * g.dx)
    return np.exp(amp * noise.rows(n_lo, n_hi) - ito)


def _warn_leak(max_leak: float) -> None:
    if max_leak > LEAK_THRESHOLD:
        warnings.warn(
            f"boundary leak fraction {max_leak:.3e} exceeds {LEAK_THRESHOLD:.0e}",
            BoundaryLeakWarning,
            stacklevel=3,
        )


def heat_step(field: Field, kernel: HeatKernelDiscrete | None = None) -> Field:
    """One noiseless convolution step (absorbing boundary)."""
    kern = kernel or _kernel_for(field.grid)
    v, dlog, leak = backends.heat_span(field.values, kern.weights, 1)
    _warn_leak(leak)
    return Field(
        grid=field.grid,
        time_index=field.time_index + 1,
        values=v,
        log_offset=field.log_offset + dlog,
        max_leak=max(field.max_leak, leak),
    )


def noise_step(field: Field, noise: NoiseField, n: int) -> Field:
    """Pointwise mean-one exponential multiplier for noise row n.

    Does not advance time on its own; propagate() pairs it with the heat
    step for row n.
    """
    g = field.grid
    if not (0 <= n < g.n_steps):
        raise DomainError(f"noise row {n} out of range")
    mult = _noise_multipliers(noise, n, n + 1)[0]
    out = field.values * mult
    f = Field(
        grid=g,
        time_index=field.time_index,
        values=out,
        log_offset=field.log_offset,
        max_leak=field.max_leak,
    )
    return f.stabilized()


def propagate(
    noise: NoiseField,
    s_idx: int,
    profile: Field,
    t_idx: int,
    collect: list[int] | None = None,
) -> Field | dict[int, Field]:
    """Solve forward from time index s_idx to t_idx.

    `profile` is the state at s_idx.  With `collect`, returns {index: Field}
    snapshots at the requested indices (s_idx and t_idx allowed); otherwise
    returns the final Field.  Strictly positive input stays strictly
    positive inside the propagation cone.
    """
    g = noise.grid
    if not (0 <= s_idx <= t_idx <= g.n_steps):
        raise DomainError(f"need 0 <= s={s_idx} <= t={t_idx} <= {g.n_steps}")
    if profile.time_index != s_idx:
        raise DomainError("profile time index does not match s_idx")
    kern = _kernel_for(g)
    want = sorted(set(collect)) if collect is not None else None
    if want and (want[0] < s_idx or want[-1] > t_idx):
        raise DomainError("collect indices outside [s_idx, t_idx]")

    v = np.array(profile.values, dtype=np.float64)
    dlog = profile.log_offset
    leak_max = profile.max_leak
    snaps: dict[int, Field] = {}

    def snap(idx: int) -> None:
        snaps[idx] = Field(
            grid=g, time_index=idx, values=v.copy(), log_offset=dlog, max_leak=leak_max
        )

    if want is not None and want and want[0] == s_idx:
        snap(s_idx)

    n = s_idx
    stops = [i for i in (want or []) if i > s_idx]
    if not stops or stops[-1] != t_idx:
        stops = stops + [t_idx]
    for stop in stops:
        while n < stop:
            hi = min(n + CHUNK, stop)
            mult = _noise_multipliers(noise, n, hi)
            v, d, leak = backends.propagate_span(v, kern.weights, mult)
            dlog += d
            leak_max = max(leak_max, leak)
            n = hi
        if want is not None and stop in want:
            snap(stop)

    _warn_leak(leak_max)
    if want is not None:
        return snaps
    return Field(grid=g, time_index=t_idx, values=v, log_offset=dlog, max_leak=leak_max)


def adjoint_propagate(
    noise: NoiseField,
    t_idx: int,
    terminal: Field,
    s_idx: int,
    collect: list[int] | None = None,
) -> Field | dict[int, Field]:
    """Value-function sweep down in time.

    Given g at time t_idx, produces U(s, z) = sum_y g(y) Z(t, y | s, z) dx
    for s_idx <= s <= t_idx.  With g the delta at y this is the Green's
    function row z -> Z(t, y | s, z), evaluated by the exact transpose of
    the forward product.
    """
    g = noise.grid
    if not (0 <= s_idx <= t_idx <= g.n_steps):
        raise DomainError(f"need 0 <= s={s_idx} <= t={t_idx} <= {g.n_steps}")
    if terminal.time_index != t_idx:
        raise DomainError("terminal time index does not match t_idx")
    kern = _kernel_for(g)
    want = sorted(set(collect)) if collect is not None else None
    if want and (want[0] < s_idx or want[-1] > t_idx):
        raise DomainError("collect indices outside [s_idx, t_idx]")

    v = np.array(terminal.values, dtype=np.float64)
    dlog = terminal.log_offset
    leak_max = terminal.max_leak
    snaps: dict[int, Field] = {}

    def snap(idx: int) -> None:
        snaps[idx] = Field(
            grid=g, time_index=idx, values=v.copy(), log_offset=dlog, max_leak=leak_max
        )

    if want is not None and want and want[-1] == t_idx:
        snap(t_idx)

    n = t_idx
    stops = sorted((i for i in (want or []) if i < t_idx), reverse=True)
    if not stops or stops[-1] != s_idx:
        stops = stops + [s_idx]
    for stop in stops:
        while n > stop:
            lo = max(n - CHUNK, stop)
            # rows lo..n-1 applied in descending order
            mult = _noise_multipliers(noise, lo, n)[::-1]
            v, d, leak = backends.propagate_span(v, kern.weights, mult, adjoint=True)
            dlog += d
            leak_max = max(leak_max, leak)
            n = lo
        if want is not None and stop in want:
            snap(stop)

    _warn_leak(leak_max)
    if want is not None:
        return snaps
    return Field(grid=g, time_index=s_idx, values=v, log_offset=dlog, max_leak=leak_max)


def green(
    noise: NoiseField,
    s_idx: int,
    x_j: int,
    t_idx: int,
    collect: list[int] | None = None,
) -> Field | dict[int, Field]:
    """Green's function Z(t, . | s, x): the propagated unit point mass."""
    return propagate(noise, s_idx, delta_field(noise.grid, s_idx, x_j), t_idx, collect)


def green_row(
    noise: NoiseField,
    t_idx: int,
    y_j: int,
    s_idx: int,
    collect: list[int] | None = None,
) -> Field | dict[int, Field]:
    """Source dependence z -> Z(t, y | s, z) via the adjoint sweep."""
    return adjoint_propagate(
        noise, t_idx, delta_field(noise.grid, t_idx, y_j), s_idx, collect
    )


def superpose(noise: NoiseField, s_idx: int, f: Field, t_idx: int) -> Field:
    """Solution from a general density profile (alias of propagate)."""
    return propagate(noise, s_idx, f, t_idx)


def exact_mean_field(grid: GridSpec, s_idx: int, x_j: int, t_idx: int) -> Field:
    """Expectation of green(): the (t-s)/dt-fold discrete heat flow of the
    delta (boundary-leak adjusted).  Exact because the noise multiplier has
    mean one and is independent of the past."""
    if not (0 <= s_idx <= t_idx <= grid.n_steps):
        raise DomainError("index out of range")
    kern = _kernel_for(grid)
    f0 = delta_field(grid, s_idx, x_j)
    v, dlog, leak = backends.heat_span(f0.values, kern.weights, t_idx - s_idx)
    return Field(
        grid=grid,
        time_index=t_idx,
        values=v,
        log_offset=f0.log_offset + dlog,
        max_leak=leak,
    )


def renormalized_green(noise: NoiseField, s_idx: int, x_j: int, t_idx: int) -> Field:
    """Green's function divided by its own expectation profile.

    Inside the propagation cone the quotient uses the discrete heat kernel
    (the exact mean); outside, where the discrete kernel is zero, it falls
    back to the analytic Gaussian of variance t-s.  At t == s the result is
    the constant 1 profile.
    """
    g = noise.grid
    if t_idx == s_idx:
        return field_from_values(g, t_idx, np.ones(g.n_sites))
    zfield = green(noise, s_idx, x_j, t_idx)
    mean = exact_mean_field(g, s_idx, x_j, t_idx)
    log_num = zfield.log_values()
    with np.errstate(divide="ignore"):
        log_den = mean.log_values()
    tt = (t_idx - s_idx) * g.dt
    gap = g.xs - g.x_of_site(x_j)
    log_rho = -0.5 * np.log(2.0 * np.pi * tt) - gap**2 / (2.0 * tt)
    log_den = np.where(np.isfinite(log_den), log_den, log_rho)
    log_q = log_num - log_den
    mx = float(np.max(log_q[np.isfinite(log_q)]))
    vals = np.exp(log_q - mx)
    vals[~np.isfinite(log_q)] = 0.0
    return Field(grid=g, time_index=t_idx, values=vals, log_offset=mx)


def ck_residual(
    noise: NoiseField, s_idx: int, r_idx: int, t_idx: int, x_j: int, y_j: int
) -> float:
    """Relative Chapman-Kolmogorov residual at (s,x) -> (t,y) through time r.

    |Z(t,y|s,x) - sum_z Z(t,y|r,z) Z(r,z|s,x) dx| / Z(t,y|s,x).  Both sides
    are products of the same per-step operators, so this is zero up to float
    accumulation; it certifies the cocycle property of the solver at the
    same time.
    """
    if not (s_idx < r_idx < t_idx):
        raise DomainError("need s < r < t")
    g = noise.grid
    direct = green(noise, s_idx, x_j, t_idx)
    log_direct = direct.log_values()[y_j]
    lower = green(noise, s_idx, x_j, r_idx)  # Z(r, z | s, x) over z
    upper = green_row(noise, t_idx, y_j, r_idx)  # Z(t, y | r, z) over z
    prod = lower.values * upper.values
    total = float(np.cumsum(prod)[-1]) * g.dx
    log_sum = math.log(total) + lower.log_offset + upper.log_offset
    return abs(math.expm1(log_sum - log_direct))


def hopf_cole(field: Field) -> np.ndarray:
    """Height h[j] = log of the represented profile; errors on zero sites."""
    if np.any(field.values <= 0.0):
        raise DomainError("hopf_cole requires a strictly positive field")
    return np.log(field.values) + field.log_offset


def slope_at_infinity(
    h: np.ndarray, xs: np.ndarray, side: str, fraction: float = 0.25
) -> tuple[float, float]:
    """Least-squares slope of h over the outer `fraction` of one side.

    Returns (slope, stderr); stderr is the OLS standard error, zero for an
    exactly linear window.
    """
    if not (0.0 < fraction <= 0.5):
        raise DomainError("fraction must be in (0, 0.5]")
    if side not in ("left", "right"):
        raise DomainError("side must be 'left' or 'right'")
    n = h.shape[0]
    k = max(int(round(fraction * n)), 0)
    if k < 5:
        raise DomainError(f"window has {k} < 5 points")
    sl = slice(0, k) if side == "left" else slice(n - k, n)
    xw = xs[sl]
    hw = h[sl]
    if not np.all(np.isfinite(hw)):
        raise DomainError("non-finite heights in regression window")
    xc = xw - xw.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ hw) / sxx
    resid = hw - hw.mean() - slope * xc
    dof = k - 2
    var = float(resid @ resid) / dof if dof > 0 else 0.0
    stderr = math.sqrt(max(var, 0.0) / sxx)
    return slope, stderr
