"""Weighted Bernstein moments: the one quadrature kernel behind every matrix.

For sections z^a, z^b of L^k (unit-normalised for phi = 0) and a symbol of
angular mode m = a - b, the matrix element is

    2 pi / sqrt(N_a N_b) * int_0^1 z^s (1 - z)^(k - s) exp(E(z, s)) f(x(z)) dz

with s = (a + b) / 2.  ``E`` depends on how the base point is described:

* Kähler route, integration variable = reference coordinate x:
  E = -k phi(x) [+ log rho_phi(x)]
* symplectic route, integration variable = moment coordinate xi of omega_u:
  E = k p(xi) - (k xi - s) p'(xi), and x(xi) = expit(logit xi + p'(xi)).

Half-integer s (odd m) uses the Chebyshev-U rule so that the sqrt(z(1-z))
factor is integrated exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln, logit

from .errors import UnderResolved
from .quadrature import QuadratureRule

DOUBLING_TOL = 1e-11
LOG_2PI = float(np.log(2.0 * np.pi))


def log_basis_norms(k: int) -> np.ndarray:
    """log N_j, N_j = 2 pi j! (k-j)! / (k+1)!."""
    j = np.arange(k + 1)
    return LOG_2PI + gammaln(j + 1.0) + gammaln(k - j + 1.0) - gammaln(k + 2.0)


@dataclass(frozen=True)
class NodeData:
    """Per-node description of a base point: E = base0 + s * base1."""

    base0: np.ndarray
    base1: np.ndarray
    x_ref: np.ndarray


class KahlerMeasure:
    """exp(-k phi) [rho_phi] dx in the reference coordinate."""

    def __init__(self, phi, include_density: bool = True):
        self.phi = phi
        self.include_density = include_density

    def nodes(self, k: int, rule: QuadratureRule) -> NodeData:
        z = rule.nodes
        base0 = -k * self.phi.value(z)
        if self.include_density:
            base0 = base0 + np.log(self.phi.density(z))
        return NodeData(base0, np.zeros_like(z), z)

    def equivalent_phi(self, z):
        return self.phi.value(z)


class SymplecticMeasure:
    """The same measure written in the moment coordinate of omega_u."""

    def __init__(self, u):
        self.u = u

    def _p(self, z):
        eta = logit(z)
        p, p1, _ = self.u.correction.derivs(z, eta)
        return eta, p, p1

    def nodes(self, k: int, rule: QuadratureRule) -> NodeData:
        z = rule.nodes
        eta, p, p1 = self._p(z)
        return NodeData(k * p - k * z * p1, p1, expit(eta + p1))

    def equivalent_phi(self, z):
        _, p, p1 = self._p(z)
        return z * p1 - p - np.logaddexp(np.log1p(-z), np.log(z) + p1)


def _moments_once(k, m, measure, symbol, rule: QuadratureRule):
    am = abs(m)
    lo = np.arange(k + 1 - am)
    lognorm = log_basis_norms(k)
    const = LOG_2PI - 0.5 * (lognorm[lo] + lognorm[lo + am])
    s = lo + 0.5 * am
    if am % 2:
        rule = rule.companion("chebyshev_u")
        e_lo, e_hi = s - 0.5, k - s - 0.5
    else:
        rule = rule.companion("legendre")
        e_lo, e_hi = s, k - s
    nd = measure.nodes(k, rule)
    L = (
        const[:, None]
        + e_lo[:, None] * rule.log_nodes[None, :]
        + e_hi[:, None] * rule.log_1m_nodes[None, :]
        + nd.base0[None, :]
        + s[:, None] * nd.base1[None, :]
    )
    fw = rule.weights * (1.0 if symbol is None else np.asarray(symbol(nd.x_ref)))
    return np.exp(L) @ fw


def band_moments(k: int, m: int, measure, symbol=None, rule: QuadratureRule | None = None,
                 check: bool = True):
    """Matrix elements of the mode-m band, indexed by min(a, b).

    Returns ``(values, relative_doubling_error)``; raises UnderResolved when
    the half-size rule disagrees by more than 1e-11 relative.
    """
    full = _moments_once(k, m, measure, symbol, rule)
    if not check:
        return full, 0.0
    half = _moments_once(k, m, measure, symbol, rule.halved())
    scale = float(np.max(np.abs(full))) if full.size else 0.0
    err = float(np.max(np.abs(full - half))) / scale if scale > 0 else float(np.max(np.abs(half), initial=0.0))
    if not err <= DOUBLING_TOL:
        raise UnderResolved(
            f"quadrature doubling check failed at k={k}, mode {m}: "
            f"relative difference {err:.3g} between {rule.size} and {rule.halved().size} nodes"
        )
    return full, err
