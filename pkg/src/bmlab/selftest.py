"""Oracle corpus run by ``bmlab selftest``.

Each check returns ``(passed, detail)``; an exception counts as a failure
and its type is reported.  The checks use the process-wide default
quadrature, so ``--nodes`` can be used to starve them deliberately.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import conventions
from .geometry import (
    X,
    FourierFunction,
    KahlerPotential,
    kahler_from_symplectic,
    laplacian,
    mabuchi_curvature,
    mabuchi_inner,
    poisson_bracket,
    symplectic_from_kahler,
)
from .mabuchi import AffineKahlerPath, bvp_geodesic, geodesic_residual, ivp_geodesic
from .quadrature import check_grid, default_rule
from .quantization import (
    InnerProduct,
    basis_norms,
    bergman_kernel,
    dhilb,
    fs,
    hilb,
    toeplitz,
)
from .spd_cone import GeodesicBk, curvature_pair, distance, geodesic_point, log_map, metric_norm


@dataclass(frozen=True)
class Outcome:
    name: str
    passed: bool
    detail: str
    seconds: float


def _rel(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / max(np.max(np.abs(b)), 1e-300))


TILT = 0.1 * (X - 0.5)


def check_quadrature():
    rule = default_rule()
    worst = max(abs(rule.integrate(rule.nodes**n) - 1.0 / (n + 1)) for n in range(41))
    wsum = abs(float(np.sum(rule.weights)) - 1.0)
    return wsum <= 1e-13 and worst <= 1e-12, f"|sum w - 1| = {wsum:.2e}, monomial error {worst:.2e}"


def check_basis_norms():
    b = basis_norms(2)
    err = _rel(b.N, [2 * math.pi / 3, math.pi / 3, 2 * math.pi / 3])
    q = max(basis_norms(k).quadrature_error for k in (8, 32, 64))
    return err <= 1e-14 and q <= 1e-12, f"closed form {err:.2e}, quadrature cross-check {q:.2e}"


def check_hilb_identity():
    err = max(float(np.max(np.abs(hilb(k, 0).gram - np.eye(k + 1)))) for k in (8, 64, 256))
    return err <= 1e-12, f"max |Hilb_k(0) - I| = {err:.2e}"


def check_hilb_oracle():
    k = 8
    phi = KahlerPotential(TILT)
    G = hilb(k, phi)
    lognorm = np.log(basis_norms(k).N)
    oracle = []
    for j in range(k + 1):
        def f(x, j=j):
            return math.exp(j * math.log(x) + (k - j) * math.log1p(-x) - k * phi.value(x) - lognorm[j]) \
                * phi.density(x)
        val, _ = integrate.quad(f, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
        oracle.append(conventions.AREA * val)
    err = _rel(np.diag(G.gram).real, oracle)
    return err <= 1e-10, f"relative error vs adaptive quadrature {err:.2e}"


def check_toeplitz_beta():
    k = 16
    T = toeplitz(k, 0, X)
    err = _rel(T.mat, np.diag((np.arange(k + 1) + 1.0) / (k + 2)))
    return err <= 1e-12, f"T_k(x) vs diag((j+1)/(k+2)): {err:.2e}"


def _fd_hilb(k, phi, v, eps=1e-5):
    def G(s):
        return hilb(k, KahlerPotential(phi + v * s)).gram
    d1 = (G(eps) - G(-eps)) / (2 * eps)
    d2 = (G(2 * eps) - G(-2 * eps)) / (4 * eps)
    return (4 * d1 - d2) / 3


def check_dhilb_fd():
    worst = 0.0
    for k in (8, 16, 32):
        for phi in (X * 0.0, TILT):
            v = X - 0.5
            B = dhilb(k, phi, FourierFunction.invariant(v))
            fd = _fd_hilb(k, phi, v)
            dG = B.base.gram @ B.mat
            worst = max(worst, float(np.linalg.norm(dG - fd) / np.linalg.norm(dG)))
    return worst <= 1e-6, f"max relative difference to Richardson FD {worst:.2e}"


def check_dhilb_toeplitz():
    worst = 0.0
    for k in (8, 16, 32):
        for phi in (KahlerPotential.zero(), KahlerPotential(TILT)):
            for v in (FourierFunction.invariant(X - 0.5), FourierFunction.invariant(X * X)):
                B = dhilb(k, phi, v)
                T = toeplitz(k, phi, v * k + laplacian(phi, v))
                worst = max(worst, float(np.linalg.norm(B.mat - conventions.DHILB_SIGN * T.mat)) / k)
    return worst <= 1e-8, f"max ||dHilb - sigma T(kv + lap v)||/k = {worst:.2e} (sigma = {conventions.DHILB_SIGN:+d})"


def check_legendre():
    x = check_grid(2048, exclude=1e-6)
    worst = 0.0
    for p in (TILT, 0.05 * (X - 0.5) * (X - 0.5), X * X * 0.2 - X * 0.1):
        phi = KahlerPotential(p)
        d = kahler_from_symplectic(symplectic_from_kahler(phi), x) - phi.value(x)
        worst = max(worst, float(np.max(d) - np.min(d)))
    return worst <= 1e-9, f"round-trip oscillation {worst:.2e}"


def check_mabuchi_integrals():
    zero = KahlerPotential.zero()
    one = mabuchi_inner(zero, 1, 1)
    lin = mabuchi_inner(zero, X - 0.5, X - 0.5)
    curv = mabuchi_curvature(zero, X, FourierFunction.trig(0, sin={1: X}))
    x = np.linspace(0.05, 0.95, 7)
    th = np.linspace(0, 6, 5)
    br = poisson_bracket(zero, X, FourierFunction.trig(0, sin={1: X}), x, th)
    e = max(abs(one - 2 * math.pi), abs(lin - math.pi / 6), abs(curv + math.pi / 12),
            float(np.max(np.abs(br - x[:, None] * np.cos(th)[None, :]))))
    return e <= 1e-12, f"max deviation from 2pi, pi/6, -pi/12, x cos(theta): {e:.2e}"


def check_fs_kernel():
    worst = 0.0
    for k in (8, 64, 256):
        I = InnerProduct.identity(k)
        x = np.linspace(0.0, 1.0, 11)
        worst = max(worst, float(np.max(np.abs(fs(k, I, x) - math.log((k + 1) / (2 * math.pi)) / k))))
        kern = bergman_kernel(k, I, 0.0, x[:-1])
        worst = max(worst, _rel(kern, (k + 1) / (2 * math.pi) * (1 - x[:-1]) ** (k / 2)))
    return worst <= 1e-10, f"FS_k(I) and Bergman kernel closed forms: {worst:.2e}"


def check_spd():
    rng = np.random.default_rng(7)
    n = 6
    e1 = abs(distance(InnerProduct.identity(n - 1), InnerProduct(n - 1, np.eye(n) * math.e ** 0.3)) - 0.3 * math.sqrt(n))
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    G0 = InnerProduct(n - 1, A @ A.conj().T + n * np.eye(n))
    S = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    H = 0.1 * (S + S.conj().T)
    Bm = np.linalg.solve(G0.gram, H)
    from .quantization import ToeplitzMatrix

    g = GeodesicBk(G0, ToeplitzMatrix(n - 1, G0, Bm))
    speed = metric_norm(Bm)
    e2 = abs(distance(G0, geodesic_point(g, 0.7)) - 0.7 * speed) / (0.7 * speed)
    mid = geodesic_point(g, 0.5)
    e3 = abs(distance(G0, mid) - distance(mid, geodesic_point(g, 1.0))) / distance(G0, mid)
    G1 = geodesic_point(g, 1.0)
    e4 = _rel(geodesic_point(GeodesicBk(G0, log_map(G0, G1)), 1.0).gram, G1.gram)
    Ik = InnerProduct.identity(1)
    e5 = abs(curvature_pair(Ik, np.array([[0, 1], [1, 0]]), np.diag([1.0, -1.0])) + 2.0)
    worst = max(e1 / (0.3 * math.sqrt(n)), e2, e3, e4, e5)
    return worst <= 1e-10, f"distance/geodesic/log/curvature identities {worst:.2e}"


def check_geodesic_oracle():
    worst = 0.0
    for phi0, v in ((0, X * X), (TILT, X - 0.5), (0.05 * (X - 0.5) * (X - 0.5), X * X)):
        geo = ivp_geodesic(phi0, v)
        worst = max(worst, geodesic_residual(geo, 0.1))
    b = bvp_geodesic(0, 0.1 * (X - 0.5) * (X - 0.5))
    worst = max(worst, geodesic_residual(b, 0.5))
    neg = geodesic_residual(AffineKahlerPath(0, TILT), 0.1)
    return worst <= 1e-7 and neg >= 1e-3, f"oracle residual {worst:.2e}, affine control {neg:.2e}"


CHECKS = [
    ("quadrature exactness", check_quadrature),
    ("basis norms (Beta integrals)", check_basis_norms),
    ("Hilb_k(0) = identity", check_hilb_identity),
    ("Hilb_k vs adaptive quadrature", check_hilb_oracle),
    ("Toeplitz T_k(x) Beta oracle", check_toeplitz_beta),
    ("dHilb_k vs finite differences", check_dhilb_fd),
    ("dHilb_k Toeplitz identity", check_dhilb_toeplitz),
    ("Legendre round trip", check_legendre),
    ("Mabuchi integrals and bracket", check_mabuchi_integrals),
    ("FS_k and Bergman kernel closed forms", check_fs_kernel),
    ("SPD cone identities", check_spd),
    ("geodesic residual oracle", check_geodesic_oracle),
]


def run_selftest() -> list[Outcome]:
    out = []
    for name, fn in CHECKS:
        start = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # reported, never raised
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(Outcome(name, bool(ok), detail, time.perf_counter() - start))
    return out
