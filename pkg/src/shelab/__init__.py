"""Simulation laboratory for the 1-d stochastic heat equation (SHE) with
multiplicative space-time white noise,

    dZ = (1/2) Z_xx dt + Z dW,

and the structure it induces: the Green's function and its exact algebraic
identities, Busemann functions estimated by deep pullbacks, continuum-polymer
Markov chains, pullback synchronization, stationarity of geometric Brownian
profiles, and stochastic homogenization of the Hopf-Cole height.

Everything is driven by one seeded, counter-addressable Gaussian grid field,
so all initial conditions and all estimators within an experiment share a
single noise realization and reruns are bit-reproducible.
"""

__version__ = "0.1.0"

from .grid import GridSpec, make_grid
from .noise import NoiseField, sample_noise, shift_noise, reflect_noise
from .field import Field
from .solver import (
    HeatKernelDiscrete,
    heat_step,
    noise_step,
    propagate,
    green,
    renormalized_green,
    ck_residual,
    hopf_cole,
    slope_at_infinity,
)

__all__ = [
    "GridSpec",
    "make_grid",
    "NoiseField",
    "sample_noise",
    "shift_noise",
    "reflect_noise",
    "Field",
    "HeatKernelDiscrete",
    "heat_step",
    "noise_step",
    "propagate",
    "green",
    "renormalized_green",
    "ck_residual",
    "hopf_cole",
    "slope_at_infinity",
    "__version__",
]
