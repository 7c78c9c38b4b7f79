"""Closed-form geometry of the four-phonon resonant manifold.

The FPUT-beta chain has dispersion omega(p) = |sin(p/2)| on the torus
[0, 2pi). Resonant quadruples satisfy

    p0 + p1 - p2 - p3 = 0 (mod 2pi),   omega0 + omega1 - omega2 - omega3 = 0.

Besides the trivial solutions {p0, p1} = {p2, p3}, the solution set is a
two-parameter family: fixing (p0, p2) = (x, z), the remaining momentum is
p1 = h(x, z) with

    h(x, z) = (z - x)/2 + 2 arcsin( tan(|z - x|/4) cos((z + x)/4) )

taken mod 2pi, and p3 = hbar(x, z) = x - z + h(x, z) mod 2pi.

Integrating out the delta constraints produces Jacobian radicands

    F+(x, z) = [cos(x/2) + cos(z/2)]^2 + 4 sin(x/2) sin(z/2)   (z-variable)
    F-(x, y) = [cos(x/2) + cos(y/2)]^2 - 4 sin(x/2) sin(y/2)   (y-variable)

F+ is nonnegative and bounded below by 4 omega(x) omega(z); F-(x, .) is
negative exactly on an interval (y', y'') straddling 2pi - x, and the map
z -> h(x, z) covers the positivity set {F-(x, .) > 0} twice.  The two
branches of the inverse are returned by `h_inverse_pair`.

All functions here are pure, vectorized over numpy arrays, and use double
precision; tolerances below are calibrated to that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError

TWO_PI = 2.0 * np.pi

# Floating-point arcsin arguments may exceed 1 by rounding noise at the
# boundary of the admissible set; beyond this slack the input is rejected.
ARCSIN_CLAMP_TOL = 1e-9

# Inputs closer than this to the singular diagonal |z - x| = 2pi are nudged
# inward; the diagonal itself is a measure-zero corner of the domain.
DIAGONAL_GUARD = 1e-9

_ROOT_INTERVAL_TOL = 1e-13


def canonicalize(p):
    """Canonical representative of an angle in [0, 2pi)."""
    q = np.mod(p, TWO_PI)
    # np.mod may round up to 2pi itself for tiny negative inputs
    q = np.where(q >= TWO_PI, q - TWO_PI, q)
    return q if np.ndim(p) else float(q)


def omega(p):
    """Dispersion relation |sin(p/2)| of the FPUT-beta chain."""
    return np.abs(np.sin(np.asarray(p) / 2.0)) if np.ndim(p) else abs(np.sin(p / 2.0))


def _clamped_arcsin(arg):
    """arcsin with the documented clamping policy at +-1."""
    a = np.asarray(arg, dtype=float)
    over = np.abs(a) - 1.0
    if np.any(over > ARCSIN_CLAMP_TOL):
        worst = float(np.max(over))
        raise DomainError(
            f"arcsin argument exceeds 1 by {worst:.3e} (> {ARCSIN_CLAMP_TOL:.0e}); "
            "inputs are outside [0, 2pi]")
    return np.arcsin(np.clip(a, -1.0, 1.0))


def h(x, z):
    """Resonant partner p1 = h(p0, p2), canonical in [0, 2pi)."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    d = z - x
    # keep tan((z-x)/4) finite: nudge off the singular diagonal |z-x| = 2pi
    near = np.abs(np.abs(d) - TWO_PI) < DIAGONAL_GUARD
    if np.any(near):
        d = np.where(near, np.sign(d) * (TWO_PI - DIAGONAL_GUARD), d)
    arg = np.tan(np.abs(d) / 4.0) * np.cos((z + x) / 4.0)
    val = d / 2.0 + 2.0 * _clamped_arcsin(arg)
    return canonicalize(val if val.ndim else float(val))


def h_bar(x, z):
    """Companion momentum p3 = x - z + h(x, z), canonical in [0, 2pi)."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    val = x - z + np.asarray(h(x, z))
    return canonicalize(val if val.ndim else float(val))


def f_plus(x, z):
    """Jacobian radicand for integration in the p2 variable (nonnegative)."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    return (np.cos(x / 2.0) + np.cos(z / 2.0)) ** 2 + 4.0 * np.sin(x / 2.0) * np.sin(z / 2.0)


def f_minus(x, y):
    """Jacobian radicand for integration in the p1 variable (signed)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (np.cos(x / 2.0) + np.cos(y / 2.0)) ** 2 - 4.0 * np.sin(x / 2.0) * np.sin(y / 2.0)


@dataclass(frozen=True)
class FminusZeros:
    """The two zeros y' < y'' of y -> F-(x, y), with 0 < y' < 2pi - x < y'' < 2pi."""
    y_prime: float
    y_double_prime: float


def f_minus_zeros(x: float, tol: float = _ROOT_INTERVAL_TOL) -> FminusZeros:
    """Locate both zeros of F-(x, .) by bracketed bisection plus one Newton polish.

    The sign pattern F-(x, 0) > 0 > F-(x, 2pi - x) < 0 < F-(x, 2pi)
    guarantees one zero in each of [0, 2pi - x] and [2pi - x, 2pi].
    """
    x = float(x)
    if not (0.0 < x < TWO_PI):
        raise ConvergenceError(f"x = {x} is at a domain endpoint; F- degenerates there")
    mid = TWO_PI - x
    fmid = float(f_minus(x, mid))  # = -4 sin^2(x/2), strictly negative
    if not fmid < 0.0:
        raise ConvergenceError(
            f"F-({x}, 2pi - {x}) = {fmid}; x is too close to a domain endpoint")
    # endpoint signs are analytic: F-(x, 0) = (1 + cos(x/2))^2 > 0 and
    # F-(x, 2pi) = (1 - cos(x/2))^2 > 0.  Evaluating at the endpoints instead
    # would lose the sign to cancellation once the zero is within an ulp of
    # the boundary (x -> 0 pushes y'' against 2pi).
    roots = []
    for lo, hi, sign_lo in ((0.0, mid, +1.0), (mid, TWO_PI, -1.0)):
        a, b = lo, hi
        sa = sign_lo
        while b - a > tol:
            m = 0.5 * (a + b)
            fm = float(f_minus(x, m))
            sm = 1.0 if fm > 0.0 else -1.0
            if sa == sm:
                a = m
            else:
                b = m
        y = 0.5 * (a + b)
        # one Newton polish; derivative by analytic formula
        d = -np.sin(y / 2.0) * (np.cos(x / 2.0) + np.cos(y / 2.0)) \
            - 2.0 * np.sin(x / 2.0) * np.cos(y / 2.0)
        if d != 0.0:
            y -= float(f_minus(x, y)) / float(d)
        roots.append(min(max(y, 0.0), TWO_PI))
    yp, ydp = roots
    return FminusZeros(y_prime=yp, y_double_prime=ydp)


def omega_residual(p0, p1, p2):
    """omega0 + omega1 - omega2 - omega3 with p3 = p0 + p1 - p2; zero on the manifold."""
    p3 = np.asarray(p0, dtype=float) + np.asarray(p1) - np.asarray(p2)
    return omega(p0) + omega(p1) - omega(p2) - omega(p3)


def h_inverse_pair(y, x):
    """The two solutions z of h(x, z) = y on the positivity set of F-(x, .).

    Returns (z_plus, z_minus), canonical in [0, 2pi).  The pair realizes the
    p2 <-> p3 exchange: z_minus = x + y - z_plus (mod 2pi).  Only meaningful
    where F-(x, y) >= 0; the arcsin argument is clamped at the boundary.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    arg = np.tan((x + y) / 4.0) * np.cos((x - y) / 4.0)
    g = 2.0 * np.arcsin(np.clip(arg, -1.0, 1.0))
    base = (x + y) / 2.0
    z_plus = canonicalize(base + g)
    corr = np.where(x + y > TWO_PI, -TWO_PI, TWO_PI)
    z_minus = canonicalize(base - g + corr)
    return z_plus, z_minus


def triple_product_identity(x, z):
    """Both sides of |sin(hbar/2) sin(h/2)| = tan^2((z-x)/4) sin(z/2) sin(x/2).

    Returns (lhs, rhs); they agree on [0, 2pi]^2.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    lhs = np.abs(np.sin(np.asarray(h_bar(x, z)) / 2.0) * np.sin(np.asarray(h(x, z)) / 2.0))
    rhs = np.tan((z - x) / 4.0) ** 2 * np.sin(z / 2.0) * np.sin(x / 2.0)
    return lhs, rhs
