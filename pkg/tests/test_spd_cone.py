import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bmlab.errors import DomainExceeded, LevelMismatch, NotSelfAdjoint, StepTooLarge
from bmlab.quantization import InnerProduct, ToeplitzMatrix
from bmlab.spd_cone import (
    CurveSampler,
    GeodesicBk,
    accel_estimate,
    accel_norm,
    curvature_pair,
    distance,
    geodesic_point,
    log_map,
    metric_norm,
    tracefree_distance,
)


def random_pd(rng, n, spread=1.0):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return InnerProduct(n - 1, spread * A @ A.conj().T / n + np.eye(n))


def random_velocity(rng, G, scale=0.3):
    """A G-self-adjoint B: G^{-1} times a Hermitian matrix."""
    n = G.level.dim
    S = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return ToeplitzMatrix(G.level, G, np.linalg.solve(G.gram, scale * (S + S.conj().T) / 2))


seeds = st.integers(0, 2**32 - 1)


def test_distance_to_scaled_identity():
    I = InnerProduct.identity(4)
    assert abs(distance(I, I.scaled(math.e**0.3)) - 0.3 * math.sqrt(5)) <= 1e-14
    assert tracefree_distance(I, I.scaled(7.0)) <= 1e-14


def test_distance_diagonal_example():
    G0 = InnerProduct(1, np.diag([1.0, 1.0]))
    G1 = InnerProduct(1, np.diag([math.e, math.e**-2]))
    assert abs(distance(G0, G1) - math.sqrt(5)) <= 1e-14


@given(seeds)
def test_distance_axioms(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_pd(rng, 5) for _ in range(3))
    assert abs(distance(a, b) - distance(b, a)) <= 1e-12 * max(1, distance(a, b))
    assert distance(a, a) <= 1e-12
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12


@given(seeds)
def test_distance_is_congruence_invariant(seed):
    rng = np.random.default_rng(seed)
    a, b = random_pd(rng, 4), random_pd(rng, 4)
    P = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)) + 3 * np.eye(4)
    ca = InnerProduct(3, P.conj().T @ a.gram @ P, check=False)
    cb = InnerProduct(3, P.conj().T @ b.gram @ P, check=False)
    assert abs(distance(ca, cb) - distance(a, b)) <= 1e-10 * max(1, distance(a, b))


@given(seeds, st.floats(-2.0, 2.0))
def test_geodesic_has_constant_speed(seed, t):
    rng = np.random.default_rng(seed)
    G0 = random_pd(rng, 5)
    B = random_velocity(rng, G0)
    g = GeodesicBk(G0, B)
    assert abs(distance(G0, g(t)) - abs(t) * metric_norm(B)) <= 1e-10 * max(1.0, abs(t) * metric_norm(B))


@given(seeds)
def test_log_map_inverts_geodesic(seed):
    rng = np.random.default_rng(seed)
    G0, G1 = random_pd(rng, 4), random_pd(rng, 4)
    B = log_map(G0, G1)
    back = geodesic_point(GeodesicBk(G0, B), 1.0)
    assert np.max(np.abs(back.gram - G1.gram)) <= 1e-10 * np.max(np.abs(G1.gram))
    assert abs(metric_norm(B) - distance(G0, G1)) <= 1e-10 * max(1.0, distance(G0, G1))


def test_metric_norm_is_not_frobenius_for_non_identity_base():
    G = InnerProduct(1, np.diag([1.0, 4.0]))
    B = np.linalg.solve(G.gram, np.array([[0.0, 1.0], [1.0, 0.0]]))
    # tr(B^2) = 2 * 1 * 1/4 = 1/2
    assert abs(metric_norm(B) - math.sqrt(0.5)) <= 1e-15
    assert abs(np.linalg.norm(B) - math.sqrt(0.5)) > 0.1


def test_diagonal_geodesic_fast_path_matches_general_path():
    G0 = InnerProduct(2, np.diag([1.0, 2.0, 3.0]))
    B = ToeplitzMatrix(2, G0, np.diag([0.1, -0.2, 0.3]))
    fast = geodesic_point(GeodesicBk(G0, B), 0.7)
    r, ri = G0.power(0.5), G0.power(-0.5)
    lam, U = np.linalg.eigh(r @ B.mat @ ri)
    slow = r @ (U * np.exp(0.7 * lam)) @ U.conj().T @ r
    assert np.max(np.abs(fast.gram - slow)) <= 1e-14


def test_curvature_examples():
    I = InnerProduct.identity(1)
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    sz = np.diag([1.0, -1.0])
    assert abs(curvature_pair(I, sx, sz) + 2.0) <= 1e-15
    assert curvature_pair(I, sz, np.diag([2.0, 5.0])) == 0.0


def test_curvature_non_positive_random_trials():
    rng = np.random.default_rng(11)
    worst = -np.inf
    for _ in range(10_000):
        n = int(rng.integers(2, 6))
        G = InnerProduct.identity(n - 1)
        v = random_velocity(rng, G, 1.0)
        w = random_velocity(rng, G, 1.0)
        worst = max(worst, curvature_pair(G, v, w))
    assert worst <= 1e-12


def test_non_self_adjoint_velocity_rejected():
    G = InnerProduct(1, np.diag([1.0, 2.0]))
    with pytest.raises(NotSelfAdjoint):
        GeodesicBk(G, ToeplitzMatrix(1, G, np.array([[0.0, 1.0], [1.0, 0.0]])))


def test_level_mismatch():
    with pytest.raises(LevelMismatch):
        distance(InnerProduct.identity(1), InnerProduct.identity(2))


def test_acceleration_vanishes_on_geodesics():
    rng = np.random.default_rng(5)
    G0 = random_pd(rng, 5)
    g = GeodesicBk(G0, random_velocity(rng, G0, 1.0))
    est = accel_estimate(CurveSampler(g), 0.3)
    assert est.value <= 1e-7 * max(1.0, est.speed**2)


def test_acceleration_of_scalar_curve():
    # G(t) = exp(f(t)) I: the covariant acceleration is f''(t) I, norm |f''| sqrt(n)
    n, t = 4, 0.4

    def G(s):
        return InnerProduct.identity(n - 1).scaled(math.exp(math.sin(s)))

    a = accel_norm(CurveSampler(G), t)
    assert abs(a - math.sin(t) * math.sqrt(n)) <= 1e-6


def test_acceleration_step_too_large():
    def G(s):
        return InnerProduct.identity(1).scaled(math.exp(math.sin(1000 * s)))

    with pytest.raises(StepTooLarge):
        accel_norm(CurveSampler(G, h=1e-2), 0.1)


def test_acceleration_stencil_domain():
    c = CurveSampler(lambda s: InnerProduct.identity(1), t_min=0.0, t_max=1.0)
    with pytest.raises(DomainExceeded):
        accel_norm(c, 0.001)
