"""Affine-invariant geometry of B_k, the cone of Hermitian inner products.

The metric at G is tr(v^2) for G-self-adjoint v, geodesics are
t -> G exp(tB), and the distance is ||log(G0^{-1/2} G1 G0^{-1/2})||_F.
All matrix functions go through Hermitian eigendecompositions; diagonal
inputs (every invariant-potential Gram matrix) take an exact elementwise
path.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainExceeded, IllConditioned, LevelMismatch, NotSelfAdjoint, StepTooLarge
from .quantization import InnerProduct, ToeplitzMatrix, QuantumLevel, SELF_ADJOINT_TOL

DEFAULT_STEP = 1e-3
HALVING_TOL = 0.1


def _herm_fn(a: np.ndarray, fn) -> np.ndarray:
    a = 0.5 * (a + a.conj().T)
    lam, U = np.linalg.eigh(a)
    return (U * fn(lam)) @ U.conj().T


def _whitened(G0: InnerProduct, G1: InnerProduct):
    """W = G0^{-1/2} G1 G0^{-1/2} (Hermitian), or its diagonal when both are diagonal."""
    if G0.level != G1.level:
        raise LevelMismatch(f"levels differ: k={G0.level.k} vs k={G1.level.k}")
    if G0.is_diagonal and G1.is_diagonal:
        return np.diag(G1.gram).real / np.diag(G0.gram).real
    s = G0.power(-0.5)
    w = s @ G1.gram @ s
    return 0.5 * (w + w.conj().T)


def _log_eigs(G0: InnerProduct, G1: InnerProduct) -> np.ndarray:
    w = _whitened(G0, G1)
    lam = w if w.ndim == 1 else np.linalg.eigvalsh(w)
    if np.any(lam <= 0):
        raise IllConditioned("relative spectrum is not positive")
    return np.log(lam)


@dataclass(frozen=True)
class GeodesicBk:
    """The B_k geodesic through ``base`` with initial velocity ``velocity``."""

    base: InnerProduct
    velocity: ToeplitzMatrix

    def __post_init__(self):
        if self.velocity.level != self.base.level:
            raise LevelMismatch("velocity and base live on different levels")
        check_self_adjoint(self.base, self.velocity.mat)

    def __call__(self, t: float) -> InnerProduct:
        return geodesic_point(self, t)


def check_self_adjoint(G: InnerProduct, v: np.ndarray, tol: float = SELF_ADJOINT_TOL) -> None:
    gv = G.gram @ v
    scale = max(float(np.max(np.abs(gv))), 1e-300)
    defect = float(np.max(np.abs(gv - gv.conj().T))) / scale
    if defect > tol:
        raise NotSelfAdjoint(f"G v is not Hermitian (relative defect {defect:.3g})")


def geodesic_point(g: GeodesicBk, t: float) -> InnerProduct:
    """G0 exp(tB) via G0^{1/2} exp(t G0^{1/2} B G0^{-1/2}) G0^{1/2}."""
    G0, B = g.base, g.velocity.mat
    if t == 0:
        return G0
    if G0.is_diagonal and np.count_nonzero(B - np.diag(np.diag(B))) == 0:
        return InnerProduct(G0.level, np.diag(np.diag(G0.gram).real * np.exp(t * np.diag(B).real)))
    r, ri = G0.power(0.5), G0.power(-0.5)
    e = _herm_fn(r @ B @ ri, lambda lam: np.exp(t * lam))
    return InnerProduct(G0.level, r @ e @ r, check=True)


def distance(G0: InnerProduct, G1: InnerProduct) -> float:
    """Affine-invariant distance sqrt(sum log^2 lambda_i), lambda = spec(G0^-1 G1)."""
    return float(np.sqrt(np.sum(_log_eigs(G0, G1) ** 2)))


def tracefree_distance(G0: InnerProduct, G1: InnerProduct) -> float:
    """Distance after removing the scalar (trace) part, i.e. modulo G -> cG."""
    ell = _log_eigs(G0, G1)
    return float(np.sqrt(np.sum((ell - ell.mean()) ** 2)))


def log_map(G0: InnerProduct, G1: InnerProduct) -> ToeplitzMatrix:
    """The velocity B at G0 with G0 exp(B) = G1."""
    w = _whitened(G0, G1)
    if w.ndim == 1:
        return ToeplitzMatrix(G0.level, G0, np.diag(np.log(w)))
    r, ri = G0.power(0.5), G0.power(-0.5)
    return ToeplitzMatrix(G0.level, G0, ri @ _herm_fn(w, np.log) @ r)


def metric_norm(v) -> float:
    """Length sqrt(tr(v^2)) of a tangent vector (real for self-adjoint v)."""
    m = v.mat if isinstance(v, ToeplitzMatrix) else np.asarray(v)
    return float(np.sqrt(max(np.trace(m @ m).real, 0.0)))


def curvature_pair(G: InnerProduct, v, w) -> float:
    """(1/4) tr([v, w]^2); non-positive for G-self-adjoint v, w."""
    mv = v.mat if isinstance(v, ToeplitzMatrix) else np.asarray(v, dtype=complex)
    mw = w.mat if isinstance(w, ToeplitzMatrix) else np.asarray(w, dtype=complex)
    check_self_adjoint(G, mv)
    check_self_adjoint(G, mw)
    c = mv @ mw - mw @ mv
    return 0.25 * float(np.trace(c @ c).real)


@dataclass(frozen=True)
class CurveSampler:
    """A smooth curve t -> InnerProduct on [t_min, t_max]."""

    fn: Callable[[float], InnerProduct]
    t_min: float = -np.inf
    t_max: float = np.inf
    h: float = DEFAULT_STEP
    level: QuantumLevel | None = None

    def __call__(self, t: float) -> InnerProduct:
        G = self.fn(t)
        if self.level is not None and G.level != self.level:
            raise LevelMismatch("curve sample on the wrong level")
        return G


@dataclass(frozen=True)
class AccelEstimate:
    value: float
    fd_error: float
    speed: float


def _log_frame(c: CurveSampler, t: float, h: float):
    """Lambda(s) = log(G^{-1/2} c(t+s) G^{-1/2}) at s = -2h, -h, h, 2h."""
    G = c(t)
    frames = []
    for s in (-2 * h, -h, h, 2 * h):
        w = _whitened(G, c(t + s))
        frames.append(np.diag(np.log(w)) if w.ndim == 1 else _herm_fn(w, np.log))
    return frames


def _accel_once(c: CurveSampler, t: float, h: float):
    m2, m1, p1, p2 = _log_frame(c, t, h)
    second = (-p2 + 16 * p1 + 16 * m1 - m2) / (12 * h * h)
    first = (m2 - 8 * m1 + 8 * p1 - p2) / (12 * h)
    return float(np.linalg.norm(second)), float(np.linalg.norm(first))


def accel_estimate(c: CurveSampler, t: float, h: float | None = None) -> AccelEstimate:
    """Covariant acceleration of a sampled curve, with its FD-halving error.

    In the frame Lambda(s) = log(G(t)^{-1/2} G(t+s) G(t)^{-1/2}) the
    residual G^{-1/2}(G'' - G' G^{-1} G')G^{-1/2} is exactly Lambda''(0),
    so the second difference is taken there; this avoids cancellation
    between the two O(k^2) terms of the residual.
    """
    h = c.h if h is None else h
    if t - 2 * h < c.t_min or t + 2 * h > c.t_max:
        raise DomainExceeded(f"[{t - 2 * h:g}, {t + 2 * h:g}] leaves [{c.t_min:g}, {c.t_max:g}]")
    a_h, speed = _accel_once(c, t, h)
    a_half, _ = _accel_once(c, t, h / 2)
    err = abs(a_h - a_half)
    if err > HALVING_TOL * a_half + 1e-6 * speed**2:
        raise StepTooLarge(f"h={h:g}: acceleration {a_h:.6g} vs {a_half:.6g} at h/2")
    return AccelEstimate(a_half, err, speed)


def accel_norm(c: CurveSampler, t: float, h: float | None = None) -> float:
    """||nabla_cdot cdot|| at t (5-point differences, h vs h/2 checked)."""
    return accel_estimate(c, t, h).value
