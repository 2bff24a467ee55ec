"""Exact Mabuchi geodesics for invariant data on CP^1.

In the symplectic picture a geodesic is a straight line u_t = u_0 + t*udot
of symplectic potentials, valid while u_t stays strictly convex.  The
Kähler potentials phi(t) are recovered pointwise by Legendre inversion, and
``geodesic_residual`` checks them against phi'' = |d phi'|^2_t by finite
differences in t.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainExceeded, NonConvex, StepTooLarge
from .geometry import (
    CONVEXITY_GRID,
    KahlerPotential,
    PulledBack,
    SymplecticPotential,
    as_kahler,
    as_poly,
    combine,
    density_of,
    invariant_grad_pairing,
    symplectic_from_kahler,
)
from .quadrature import check_grid

RESIDUAL_STEP = 1e-3
POLE_EXCLUSION = 1e-3
RESIDUAL_GRID = check_grid(2048, exclude=POLE_EXCLUSION)
DOMAIN_SLACK = 1e-9


def _correction_second(c, xi):
    return c.derivs(xi)[2]


def convexity_interval(u0: SymplecticPotential, udot, xi=CONVEXITY_GRID) -> tuple[float, float]:
    """(t_min, t_max): the largest interval around 0 keeping u0 + t*udot convex on the grid."""
    a = u0.second_derivative(xi)
    b = _correction_second(udot, xi)
    with np.errstate(divide="ignore"):
        ratio = -a / b
    neg, pos = b < 0, b > 0
    t_max = float(np.min(ratio[neg])) if neg.any() else np.inf
    t_min = float(np.max(ratio[pos])) if pos.any() else -np.inf
    return t_min, t_max


class MabuchiGeodesic:
    """t -> u_0 + t*udot on (t_min, t_max), plus an additive gauge c0 + c1*t."""

    def __init__(self, u0: SymplecticPotential, udot, gauge=(0.0, 0.0)):
        self.u0 = u0
        self.udot = udot
        self.gauge = (float(gauge[0]), float(gauge[1]))
        self.t_min, self.t_max = convexity_interval(u0, udot)

    def with_gauge(self, c0: float, c1: float) -> "MabuchiGeodesic":
        return MabuchiGeodesic(self.u0, self.udot, (c0, c1))

    def gauge_free(self) -> "MabuchiGeodesic":
        return self if self.gauge == (0.0, 0.0) else self.with_gauge(0.0, 0.0)

    def contains(self, t: float) -> bool:
        return self.t_min * (1 - DOMAIN_SLACK) < t < self.t_max * (1 - DOMAIN_SLACK)

    def at(self, t: float) -> SymplecticPotential:
        """The symplectic potential u_t (gauge not applied)."""
        if not self.contains(t):
            raise DomainExceeded(f"t = {t:g} outside ({self.t_min:g}, {self.t_max:g})")
        if t == 0:
            return self.u0
        corr = combine([(1.0, self.u0.correction), (float(t), self.udot)])
        return SymplecticPotential(corr, check=False)

    def phi(self, t: float, x) -> np.ndarray:
        c0, c1 = self.gauge
        return self.at(t).kahler_value(x) + c0 + c1 * t

    def dphi(self, t: float, x) -> np.ndarray:
        return self.at(t).kahler_data(x)[1]

    def density(self, t: float, x) -> np.ndarray:
        return self.at(t).density(x)

    def __repr__(self):
        return f"MabuchiGeodesic(t in ({self.t_min:.6g}, {self.t_max:.6g}))"


def ivp_geodesic(phi0, v) -> MabuchiGeodesic:
    """Geodesic with phi(0) = phi0 and initial velocity v (invariant).

    In omega_{phi0} moment coordinates the symplectic velocity is -v(x(xi)).
    """
    phi0 = as_kahler(phi0)
    v = as_poly(v.invariant_part() if hasattr(v, "invariant_part") else v)
    if not v.is_real:
        raise NonConvex("initial velocity must be real")
    u0 = symplectic_from_kahler(phi0)
    udot = -v if phi0.is_constant else combine([(-1.0, PulledBack(v, phi0))])
    return MabuchiGeodesic(u0, udot)


def _as_symplectic(p) -> SymplecticPotential:
    if isinstance(p, SymplecticPotential):
        return p
    return symplectic_from_kahler(as_kahler(p))


def bvp_geodesic(phi0, phi1) -> MabuchiGeodesic:
    """Geodesic joining two potentials at t = 0 and t = 1."""
    u0, u1 = _as_symplectic(phi0), _as_symplectic(phi1)
    udot = combine([(1.0, u1.correction), (-1.0, u0.correction)])
    geo = MabuchiGeodesic(u0, udot)
    if not geo.t_max > 1.0:
        raise NonConvex("endpoint potentials do not bound a convex segment")
    return geo


class AffineKahlerPath:
    """phi(t) = phi0 + t*w, a straight line of Kähler potentials (not a geodesic)."""

    def __init__(self, phi0, w):
        self.phi0 = as_poly(phi0.phi if isinstance(phi0, KahlerPotential) else phi0)
        self.w = as_poly(w)
        self.t_min, self.t_max = -np.inf, np.inf
        for t in np.linspace(-1.0, 1.0, 201):
            ok = np.min(density_of(self.phi0 + self.w * float(t), CONVEXITY_GRID)) > 0
            if not ok and t < 0:
                self.t_min = max(self.t_min, float(t))
            elif not ok:
                self.t_max = min(self.t_max, float(t))

    def _poly(self, t):
        return self.phi0 + self.w * float(t)

    def contains(self, t: float) -> bool:
        return self.t_min < t < self.t_max

    def phi(self, t, x):
        return self._poly(t)(x)

    def dphi(self, t, x):
        return self._poly(t)(x, 1)

    def density(self, t, x):
        return density_of(self._poly(t), x)


@dataclass(frozen=True)
class ResidualEstimate:
    value: float
    fd_error: float


def _residual_once(path, t, h, x):
    ts = [t + j * h for j in (-2, -1, 0, 1, 2)]
    f = [np.asarray(path.phi(s, x)) for s in ts]
    g = [np.asarray(path.dphi(s, x)) for s in ts]
    phi_tt = (-f[4] + 16 * f[3] - 30 * f[2] + 16 * f[1] - f[0]) / (12 * h * h)
    dphi_t = (g[0] - 8 * g[1] + 8 * g[3] - g[4]) / (12 * h)
    pair = invariant_grad_pairing(path.density(t, x), dphi_t, dphi_t, x)
    return phi_tt - pair, phi_tt


def residual_estimate(path, t: float, h: float = RESIDUAL_STEP, x=None) -> ResidualEstimate:
    """sup_x |phi'' - |d phi'|^2_t| with the h vs h/2 difference as error estimate."""
    x = RESIDUAL_GRID if x is None else np.asarray(x, dtype=float)
    # The equation only sees phi up to t-affine constants; differencing the
    # gauge term would add nothing but roundoff.
    if hasattr(path, "gauge_free"):
        path = path.gauge_free()
    if not (path.contains(t - 2 * h) and path.contains(t + 2 * h)):
        raise DomainExceeded(f"stencil around t = {t:g} leaves the domain ({path.t_min:g}, {path.t_max:g})")
    r_h, acc_h = _residual_once(path, t, h, x)
    r_half, acc_half = _residual_once(path, t, h / 2, x)
    diff = float(np.max(np.abs(acc_h - acc_half)))
    if diff > 0.1 * float(np.max(np.abs(acc_half))) + 1e-6:
        raise StepTooLarge(f"second t-derivative changes by {diff:.3g} when h is halved")
    return ResidualEstimate(float(np.max(np.abs(r_h))), float(np.max(np.abs(r_h - r_half))))


def geodesic_residual(path, t: float, h: float = RESIDUAL_STEP, x=None) -> float:
    """Residual of the geodesic equation at time t (poles excluded)."""
    return residual_estimate(path, t, h, x).value
