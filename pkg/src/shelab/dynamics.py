"""Flow on normalized profiles: metric, basins, synchronization, invariance,
and homogenization.

Profiles that differ by a positive constant represent the same state of the
ratio dynamics, so states are normalized to value one at the origin.  The
metric combines clipped sup distances of f and 1/f on growing windows with
Gaussian-weighted integral distances, geometrically weighted, mirroring the
topology in which solution semigroup is continuous.

A static profile g belongs to a slope basin according to the asymptotic
growth of log g: right slope above both zero and the negated left slope
puts it in the basin of that right slope, symmetrically for the left, flat
or decaying profiles fall to slope zero, and an exact positive-negative
match (like e^{|x|}) belongs to no basin.  Pullback runs refuse profiles
outside the requested basin.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .busemann import busemann_l2p, busemann_p2p
from .errors import ConfigurationError, DomainError
from .field import Field, field_from_values
from .grid import GridSpec
from .noise import NoiseField, sample_noise
from .rng import derive_key, standard_normal
from .solver import hopf_cole, propagate, slope_at_infinity


@dataclass(frozen=True)
class NormalizedProfile:
    grid: GridSpec
    values: np.ndarray  # strictly positive, values[origin] == 1

    def __post_init__(self):
        j0 = self.grid.origin_site
        if self.values[j0] != 1.0:
            raise ConfigurationError("profile not normalized at the origin")


def normalize(field: Field) -> NormalizedProfile:
    """Origin-normalized representative of the profile's ray."""
    j0 = field.grid.origin_site
    pivot = field.values[j0]
    if pivot <= 0.0:
        raise DomainError("zero at the origin site")
    return NormalizedProfile(grid=field.grid, values=field.values / pivot)


def profile_from_function(grid: GridSpec, fn) -> NormalizedProfile:
    vals = np.asarray([fn(x) for x in grid.xs], dtype=np.float64)
    if np.any(vals <= 0):
        raise DomainError("profile must be strictly positive")
    return NormalizedProfile(grid=grid, values=vals / vals[grid.origin_site])


def cicm_metric(f: NormalizedProfile, g: NormalizedProfile, m_max: int = 8) -> float:
    """Truncated metric of the positive-continuous state space.

    Sum over m <= m_max of 2^-m [1 ^ sup_{|x|<=m} (|f-g| + |1/f - 1/g|)]
    plus 2^-m [1 ^ |int e^{-y^2/m} (f-g) dy|], integrals by grid quadrature.
    Truncation error is below 2^-m_max.
    """
    if f.grid != g.grid:
        raise ConfigurationError("profiles on different grids")
    if m_max < 1:
        raise ConfigurationError("m_max must be >= 1")
    grid = f.grid
    if min(abs(grid.x_min), abs(grid.x_max)) < m_max:
        raise ConfigurationError(f"grid narrower than m_max={m_max}")
    xs = grid.xs
    fv = f.values
    gv = g.values
    diff = fv - gv
    inv_diff = 1.0 / fv - 1.0 / gv
    total = 0.0
    for m in range(1, m_max + 1):
        sel = np.abs(xs) <= m + 1e-12
        sup = float(np.max(np.abs(diff[sel]) + np.abs(inv_diff[sel])))
        total += 2.0**-m * min(1.0, sup)
        weight = np.exp(-(xs**2) / m)
        integral = abs(float(np.sum(weight * diff)) * grid.dx)
        total += 2.0**-m * min(1.0, integral)
    return total


@dataclass(frozen=True)
class SlopeClass:
    lambda_right: float
    lambda_left: float
    kind: str  # "in_basin" | "exceptional" | "unclassified"
    basin: float | None = None


def classify_slope_basin(
    g: NormalizedProfile, fraction: float = 0.25, tol: float = 0.02
) -> SlopeClass:
    """Assign a static profile to its attracting slope basin.

    Estimates the two asymptotic slopes of log g by tail regression, then
    applies the growth-rate trichotomy; the exceptional case is an exact
    positive mirror pair, detected within `tol`.
    """
    grid = g.grid
    if grid.n_sites < 80:
        raise ConfigurationError("domain too narrow for tail regression (< 40 sites per side)")
    h = np.log(g.values)
    lam_r, se_r = slope_at_infinity(h, grid.xs, "right", fraction)
    lam_l, se_l = slope_at_infinity(h, grid.xs, "left", fraction)
    eps = max(tol, 3.0 * (se_r + se_l))
    if abs(lam_r + lam_l) <= eps and lam_r > eps:
        return SlopeClass(lam_r, lam_l, "exceptional")
    if lam_r > max(0.0, -lam_l) + eps:
        return SlopeClass(lam_r, lam_l, "in_basin", basin=lam_r)
    if lam_l < min(0.0, -lam_r) - eps:
        return SlopeClass(lam_r, lam_l, "in_basin", basin=lam_l)
    if lam_r <= eps and lam_l >= -eps:
        return SlopeClass(lam_r, lam_l, "in_basin", basin=0.0)
    return SlopeClass(lam_r, lam_l, "unclassified")


@dataclass(frozen=True)
class PullbackResult:
    lam: float
    depths: tuple[float, ...]
    distances: tuple[float, ...]  # to the deep function-to-point reference
    floor: float  # distance between the two reference estimators


def pullback_run(
    noise: NoiseField,
    g: NormalizedProfile,
    lam: float,
    depths: list[float],
    reference_depth: float | None = None,
    m_max: int = 8,
) -> PullbackResult:
    """Distances of pullback solutions to the deep Busemann reference.

    For each depth r the profile is imposed at time r, evolved to time 0,
    normalized, and compared with the function-to-point reference profile
    from reference_depth (deeper than every pullback).  The reported floor
    is the distance between the function-to-point and point-to-point
    references, the resolution limit of the comparison.
    """
    cls = classify_slope_basin(g)
    if cls.kind != "in_basin" or abs(cls.basin - lam) > 0.1:
        raise DomainError(
            f"profile classifies as {cls.kind} (basin {cls.basin}), not basin {lam}"
        )
    grid = noise.grid
    depths = sorted(depths, reverse=True)  # shallow to deep
    if reference_depth is None:
        reference_depth = min(depths) - max(10.0, 0.6 * abs(min(depths)))
    if reference_depth > min(depths):
        raise ConfigurationError("reference must sit deeper than every pullback depth")
    t0 = grid.index_of_time(0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ref_l2p = busemann_l2p(noise, lam, reference_depth, [t0])
        ref_p2p = busemann_p2p(noise, lam, reference_depth, [t0])
    ref = normalize(ref_l2p.exp_profile_field(t0))
    ref_alt = normalize(ref_p2p.exp_profile_field(t0))
    floor = cicm_metric(ref, ref_alt, m_max)
    dists = []
    for r in depths:
        r_idx = grid.index_of_time(r)
        start = field_from_values(grid, r_idx, g.values)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out = propagate(noise, r_idx, start, t0)
        dists.append(cicm_metric(normalize(out), ref, m_max))
    return PullbackResult(
        lam=lam, depths=tuple(depths), distances=tuple(dists), floor=floor
    )


def brownian_profile(grid: GridSpec, key: int, lam: float) -> np.ndarray:
    """e^{B(x) + lam x} on the grid, B a two-sided random walk with
    variance dx per site pinned to zero at the origin."""
    j0 = grid.origin_site
    n = grid.n_sites
    sd = math.sqrt(grid.dx)
    right = standard_normal(np.arange(n - 1 - j0, dtype=np.int64), np.int64(0), np.uint64(key))
    left = standard_normal(np.arange(j0, dtype=np.int64), np.int64(1), np.uint64(key))
    b = np.empty(n)
    b[j0] = 0.0
    b[j0 + 1 :] = sd * np.cumsum(right)
    b[:j0] = -(sd * np.cumsum(left))[::-1]
    return b + lam * grid.xs


@dataclass(frozen=True)
class InvarianceReport:
    lam: float
    horizon: float
    n_replicas: int
    probe_spacing: float
    mean_z: float
    var_z: float
    excess_kurtosis: float
    kurtosis_z: float
    inc_mean: float
    inc_var: float

    def passes(self, z_limit: float = 3.0) -> bool:
        return (
            abs(self.mean_z) <= z_limit
            and abs(self.var_z) <= z_limit
            and abs(self.kurtosis_z) <= z_limit
        )


def invariance_test(
    grid: GridSpec,
    lam: float,
    horizon_t: float,
    n_replicas: int,
    seed: int,
    probe_spacing: float = 1.0,
    probe_count: int = 4,
) -> InvarianceReport:
    """Stationarity of the geometric Brownian class with drift lam.

    Each replica starts an independent e^{B + lam x} profile on its own
    noise, evolves it for horizon_t, and measures log-increments over
    disjoint probes of length probe_spacing around the origin.  Under the
    invariant law those increments are Gaussian with mean lam * spacing and
    variance spacing; the report carries pooled z-scores and the excess
    kurtosis.  horizon_t = 0 reproduces the input law exactly.
    """
    t0 = grid.index_of_time(0.0)
    t1 = grid.index_of_time(horizon_t)
    j0 = grid.origin_site
    step = int(round(probe_spacing / grid.dx))
    edges = [
        j0 + (i - probe_count // 2) * step for i in range(probe_count + 1)
    ]
    if edges[0] < 0 or edges[-1] >= grid.n_sites:
        raise ConfigurationError("probe window exceeds the grid")
    incs = []
    for rep in range(n_replicas):
        bkey = derive_key(seed, 0xB0, rep)
        logs = brownian_profile(grid, bkey, lam)
        if t1 == t0:
            h = logs
        else:
            nz = sample_noise(grid, derive_key(seed, 0xA0, rep))
            f0 = Field(grid=grid, time_index=t0, values=np.exp(logs - logs.max()),
                       log_offset=float(logs.max())).stabilized()
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                out = propagate(nz, t0, f0, t1)
            h = hopf_cole(out)
        incs.append([h[edges[i + 1]] - h[edges[i]] for i in range(probe_count)])
    arr = np.asarray(incs).ravel()
    n = arr.size
    target_mean = lam * probe_spacing
    target_var = probe_spacing
    m = float(arr.mean())
    v = float(arr.var(ddof=1))
    mean_z = (m - target_mean) / math.sqrt(target_var / n)
    var_z = (v - target_var) / (target_var * math.sqrt(2.0 / (n - 1)))
    zc = (arr - m) / math.sqrt(v)
    kurt = float(np.mean(zc**4) - 3.0)
    kurt_z = kurt / math.sqrt(24.0 / n)
    return InvarianceReport(
        lam=lam,
        horizon=horizon_t,
        n_replicas=n_replicas,
        probe_spacing=probe_spacing,
        mean_z=float(mean_z),
        var_z=float(var_z),
        excess_kurtosis=kurt,
        kurtosis_z=float(kurt_z),
        inc_mean=m,
        inc_var=v,
    )


@dataclass(frozen=True)
class HomogenizationResult:
    epsilon: float
    t_values: tuple[float, ...]
    x_values: tuple[float, ...]
    u_eps: np.ndarray  # (n_t, n_x)
    hopf_lax: np.ndarray
    sup_gap: float


def hopf_lax_solution(
    U, t: float, x: float, z_grid: np.ndarray, a0: float
) -> float:
    """-a0 t + min over grid z of ((x - z)^2 / (2t) + U(z))."""
    uz = np.asarray([U(z) for z in z_grid]) if callable(U) else U
    return -a0 * t + float(np.min((x - z_grid) ** 2 / (2.0 * t) + uz))


def homogenize(
    noise: NoiseField,
    U,
    epsilon: float,
    t_values: list[float],
    x_values: list[float],
    a0: float,
) -> HomogenizationResult:
    """Rescaled height against the deterministic variational limit.

    u_eps(t, x) = -eps * h(t/eps, x/eps | 0, -U_eps) with the compressed
    initial condition U_eps(z) = U(eps z)/eps, compared on the window with
    the Hopf-Lax solution carrying the scheme constant a0.
    """
    if not (0.0 < epsilon <= 0.1):
        raise ConfigurationError("epsilon must lie in (0, 0.1]")
    g = noise.grid
    t_values = sorted(t_values)
    micro_t = [t / epsilon for t in t_values]
    micro_x = [x / epsilon for x in x_values]
    if max(micro_t) > g.t1 + 1e-9:
        raise ConfigurationError("grid does not cover t_max / epsilon")
    if min(micro_x) < g.x_min or max(micro_x) > g.x_max:
        raise ConfigurationError("grid does not cover window / epsilon")
    u_eps_log = -np.asarray([U(epsilon * z) for z in g.xs]) / epsilon
    f0 = Field(
        grid=g,
        time_index=g.index_of_time(0.0),
        values=np.exp(u_eps_log - u_eps_log.max()),
        log_offset=float(u_eps_log.max()),
    ).stabilized()
    tcols = {g.index_of_time(round(mt / g.dt) * g.dt): t for mt, t in zip(micro_t, t_values)}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        snaps = propagate(noise, f0.time_index, f0, max(tcols), collect=list(tcols))
    z_grid = epsilon * g.xs
    uz = np.asarray([U(z) for z in z_grid])
    u_arr = np.empty((len(t_values), len(x_values)))
    hl_arr = np.empty_like(u_arr)
    for i, (tidx, t) in enumerate(sorted(tcols.items())):
        h = hopf_cole(snaps[tidx])
        for j, x in enumerate(x_values):
            jx = g.site_of_x(x / epsilon)
            u_arr[i, j] = -epsilon * h[jx]
            hl_arr[i, j] = -a0 * t + float(
                np.min((x - z_grid) ** 2 / (2.0 * t) + uz)
            )
    gap = float(np.max(np.abs(u_arr - hl_arr)))
    return HomogenizationResult(
        epsilon=epsilon,
        t_values=tuple(t_values),
        x_values=tuple(x_values),
        u_eps=u_arr,
        hopf_lax=hl_arr,
        sup_gap=gap,
    )
