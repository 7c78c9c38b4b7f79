"""Numerical laboratory for the FPUT-beta wave kinetic equation on the torus.

Modules
-------
manifold     closed-form resonant-manifold geometry
quadrature   periodic and desingularized composite rules
grid         midpoint grids, sampled fields, interpolation, norms
equilibria   Rayleigh-Jeans spectra and the (mass, energy) matching problem
collision    the nonlinear collision operator and the L^p blow-up family
linearized   the operator L around an equilibrium: assembly, spectra, decay
dynamics     time evolution of the full and perturbation equations
experiments  the named studies behind the command-line tool
cli          batch harness (entry point `phononlab`)
"""

from .equilibria import MatchResult, RjParams, curve_F, mass_energy, match_rj, rj_field
from .grid import Field, Grid, evaluate, lp_norm
from .linearized import LinOperator, assemble, semigroup_apply
from .manifold import f_minus, f_plus, h, h_bar, omega

__all__ = [
    "Field", "Grid", "LinOperator", "MatchResult", "RjParams",
    "assemble", "curve_F", "evaluate", "f_minus", "f_plus", "h", "h_bar",
    "lp_norm", "mass_energy", "match_rj", "omega", "rj_field",
    "semigroup_apply",
]
