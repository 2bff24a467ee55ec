import numpy as np
import pytest

from bmlab.errors import DomainExceeded, NonConvex
from bmlab.geometry import X, KahlerPotential, symplectic_from_kahler
from bmlab.mabuchi import (
    AffineKahlerPath,
    bvp_geodesic,
    convexity_interval,
    geodesic_residual,
    ivp_geodesic,
    residual_estimate,
)

GRID = np.linspace(0.01, 0.99, 99)
TILT = 0.1 * (X - 0.5)
PHI_CORPUS = [X * 0.0, TILT, 0.05 * (X - 0.5) ** 2, 0.2 * X**2 - 0.1 * X]
V_CORPUS = [X - 0.5, X * X, 0.3 * X**3 - X, (X - 0.5) ** 2]


def test_constant_velocity_translates():
    geo = ivp_geodesic(TILT, 0.4 * X**0)
    for t in (-0.5, 0.3, 2.0):
        assert np.max(np.abs(geo.phi(t, GRID) - TILT(GRID) - 0.4 * t)) <= 1e-12
    assert geo.t_min == -np.inf and geo.t_max == np.inf


def test_initial_data_is_reproduced():
    geo = ivp_geodesic(TILT, X * X)
    assert np.max(np.abs(geo.phi(0.0, GRID) - TILT(GRID))) <= 1e-12
    h = 1e-4
    vel = (geo.phi(h, GRID) - geo.phi(-h, GRID)) / (2 * h)
    assert np.max(np.abs(vel - GRID**2)) <= 1e-7


def test_linear_velocity_interval():
    # u'' = 1/(xi(1-xi)) never degenerates under an affine change
    geo = ivp_geodesic(0, X - 0.5)
    assert geo.t_min == -np.inf and geo.t_max == np.inf


def test_square_velocity_interval():
    # udot = -x^2; convexity fails once 2t = min 1/(xi(1-xi)) = 4
    lo, hi = convexity_interval(symplectic_from_kahler(KahlerPotential.zero()), -(X * X))
    assert lo == -np.inf
    assert 2.0 <= hi <= 2.0 + 1e-6  # resolved on the convexity grid


@pytest.mark.parametrize("phi0", PHI_CORPUS, ids=str)
@pytest.mark.parametrize("v", V_CORPUS, ids=str)
def test_residual_corpus(phi0, v):
    geo = ivp_geodesic(phi0, v)
    t = min(0.1, 0.4 * geo.t_max)
    est = residual_estimate(geo, t)
    assert est.value <= 1e-7


def test_affine_path_is_not_a_geodesic():
    assert geodesic_residual(AffineKahlerPath(0, TILT), 0.1) >= 1e-3


def test_residual_ignores_gauge():
    geo = ivp_geodesic(TILT, X * X)
    gauged = geo.with_gauge(0.3, -1.7)
    assert geodesic_residual(gauged, 0.1) == geodesic_residual(geo, 0.1)
    assert np.max(np.abs(gauged.phi(0.2, GRID) - geo.phi(0.2, GRID) - (0.3 - 1.7 * 0.2))) <= 1e-14


def test_time_reversal():
    fwd = ivp_geodesic(TILT, X * X)
    back = ivp_geodesic(TILT, -(X * X))
    for t in (0.05, 0.3):
        assert np.max(np.abs(fwd.phi(-t, GRID) - back.phi(t, GRID))) <= 1e-13


def test_bvp_hits_endpoints_and_matches_ivp():
    phi1 = 0.1 * (X - 0.5) ** 2
    geo = bvp_geodesic(0, phi1)
    assert np.max(np.abs(geo.phi(0.0, GRID))) <= 1e-12
    assert np.max(np.abs(geo.phi(1.0, GRID) - phi1(GRID))) <= 1e-10
    assert geodesic_residual(geo, 0.5) <= 1e-7


def test_bvp_ivp_consistency_for_affine_symplectic_velocity():
    ivp = ivp_geodesic(0, X - 0.5)
    u1 = ivp.at(0.8)
    bvp = bvp_geodesic(0, u1)
    for t in (0.2, 0.5, 1.0):
        assert np.max(np.abs(bvp.phi(t, GRID) - ivp.phi(0.8 * t, GRID))) <= 1e-12


def test_domain_exceeded():
    geo = ivp_geodesic(0, X * X)
    with pytest.raises(DomainExceeded):
        geo.phi(2.5, GRID)
    with pytest.raises(DomainExceeded):
        geodesic_residual(geo, 2.0 - 1e-4)


def test_nonconvex_bvp():
    with pytest.raises(NonConvex):
        bvp_geodesic(0, symplectic_from_kahler(KahlerPotential.zero()).__class__(-3.0 * X * X, check=False))
