"""Rayleigh-Jeans equilibria, their mass/energy, and the matching problem.

The stationary spectra are f(p) = 1/(beta * omega(p) + gamma).  Their mass
M = int f dp and energy E = int omega f dp satisfy beta*E + gamma*M = 2pi
identically.  A pair (M0, E0) of positive numbers is realizable by such a
spectrum iff E0/M0 < 2/pi; the inversion is parameterized through

    F(l) = 1 / ((1/2pi) int dp / (omega + l)) - l,

a strictly increasing map with F(0) = 0 and F(inf) = 2/pi.  Writing
(1/beta, 1/gamma) = (r cos theta, r sin theta), the matched parameters are
cot(theta) = F^{-1}(E0/M0) and r fixed by the mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .grid import Field, Grid
from .manifold import TWO_PI, omega
from .quadrature import graded_midpoint_nodes

RATIO_LIMIT = 2.0 / math.pi

# denominators below this are floored; only reachable at gamma = 0 off-grid
_DENOM_FLOOR = 1e-300


@dataclass(frozen=True)
class RjParams:
    """Inverse-temperature / chemical-potential pair of a Rayleigh-Jeans spectrum."""
    beta: float
    gamma: float

    def __post_init__(self):
        if not (self.beta > 0.0):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")

    @property
    def singular(self) -> bool:
        """gamma = 0: infinite-mass, energy-equipartition spectrum."""
        return self.gamma == 0.0

    def value(self, p):
        """f(p) = 1/(beta omega + gamma) with a positivity floor on the denominator."""
        den = self.beta * omega(p) + self.gamma
        return 1.0 / np.maximum(den, _DENOM_FLOOR)


def rj_field(params: RjParams, grid: Grid) -> Field:
    """The equilibrium spectrum sampled on a grid."""
    return Field(grid, params.value(grid.nodes))


_NODE_CACHE: dict = {}


def _edge_nodes(n_panels: int = 65536, min_scale: float = 1e-14):
    """Edge-refined nodes with cached omega values.

    The integrands 1/(omega + l) peak at the domain edges, where omega also
    has its kink; panels are graded into both.  All matching quadratures in
    this module share one node set, so the inversion in match_rj is the
    exact discrete inverse of the forward map in mass_energy up to
    bisection tolerance.
    """
    key = (n_panels, min_scale)
    if key not in _NODE_CACHE:
        nodes, wts = graded_midpoint_nodes(0.0, TWO_PI, n_panels,
                                           refine_at=(0.0, TWO_PI),
                                           min_scale=min_scale, local_order=16)
        _NODE_CACHE[key] = (nodes, wts, omega(nodes))
    return _NODE_CACHE[key]


def mass_energy(params: RjParams, n_panels: int = 65536):
    """Quadrature mass and energy of the equilibrium spectrum (gamma > 0)."""
    if params.gamma <= 0.0:
        raise ValueError("mass_energy requires gamma > 0 (gamma = 0 has infinite mass)")
    nodes, wts, om = _edge_nodes(n_panels)
    f = params.value(nodes)
    mass = float(np.sum(wts * f))
    energy = float(np.sum(wts * om * f))
    return mass, energy


def _mean_inverse(ell: float, n_panels: int = 65536) -> float:
    """(1/2pi) int dp / (omega + ell) on the shared edge-refined nodes."""
    _, wts, om = _edge_nodes(n_panels)
    return float(np.sum(wts / (om + ell))) / TWO_PI


def curve_F(ell: float, n_panels: int = 65536) -> float:
    """The strictly increasing matching curve F(l); F(0+) = 0, F(inf) = 2/pi."""
    if ell <= 0.0:
        raise ValueError(f"ell must be positive, got {ell}")
    return 1.0 / _mean_inverse(ell, n_panels) - ell


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching (M0, E0) to a Rayleigh-Jeans spectrum.

    matched is False when E0/M0 >= 2/pi (including the boundary ratio,
    which no finite (beta, gamma) attains); params is None in that case.
    """
    matched: bool
    params: RjParams | None
    ratio: float
    theta: float
    r: float


def match_rj(mass0: float, energy0: float, n_panels: int = 65536,
             max_iter: int = 200) -> MatchResult:
    """Invert (mass, energy) for (beta, gamma), or report that none exists."""
    if mass0 <= 0.0 or energy0 <= 0.0:
        raise ValueError("mass and energy must be positive")
    ratio = energy0 / mass0
    if not (ratio < RATIO_LIMIT):
        return MatchResult(False, None, ratio, math.nan, math.nan)

    # bisection for F(l) = ratio on log l in [-16, 16]
    lo, hi = -16.0, 16.0
    flo = curve_F(math.exp(lo), n_panels) - ratio
    fhi = curve_F(math.exp(hi), n_panels) - ratio
    if flo > 0.0 or fhi < 0.0:
        raise ConvergenceError(
            f"F^-1({ratio}) is outside the bisection range e^[-16, 16]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = curve_F(math.exp(mid), n_panels) - ratio
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    else:
        raise ConvergenceError("bisection for F^-1 did not reach tolerance")
    ell = math.exp(0.5 * (lo + hi))

    # b = 1/beta, g = 1/gamma with ell = b/g; the mass pins the scale
    b = mass0 / (TWO_PI * _mean_inverse(ell, n_panels))
    g = b / ell
    theta = math.atan2(g, b)
    r = math.hypot(b, g)
    return MatchResult(True, RjParams(beta=1.0 / b, gamma=1.0 / g),
                       ratio, theta, r)
