import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize_scalar

from bmlab import conventions
from bmlab.errors import GuardrailError, InvalidPotential, NonConvex
from bmlab.geometry import (
    X,
    FourierFunction,
    KahlerPotential,
    MomentPoly,
    SymplecticPotential,
    grad_pairing,
    kahler_from_symplectic,
    laplacian,
    mabuchi_curvature,
    mabuchi_inner,
    poisson_bracket,
    reference_grad_pairing,
    symplectic_from_kahler,
)
from bmlab.mabuchi import ivp_geodesic
from bmlab.quadrature import check_grid

GRID = np.linspace(0.02, 0.98, 49)
THETA = np.linspace(0.0, 2 * math.pi, 17)
TILT = 0.1 * (X - 0.5)
CORPUS = [X * 0.0, TILT, 0.05 * (X - 0.5) ** 2, 0.2 * X**2 - 0.1 * X, 0.03 * X**3]

small = st.floats(-0.05, 0.05, allow_nan=False)


def poly_strategy(degree=3):
    return st.lists(small, min_size=1, max_size=degree + 1).map(MomentPoly)


def trig_strategy():
    return st.builds(
        lambda a, b, c: FourierFunction.trig(a, cos={1: b}, sin={2: c}),
        poly_strategy(), poly_strategy(), poly_strategy(),
    )


# -- polynomials and Fourier data ------------------------------------------------


def test_moment_poly_equality_tolerance():
    assert MomentPoly([1.0, 2.0]) == MomentPoly([1.0 + 5e-15, 2.0])
    assert not MomentPoly([1.0, 2.0]) == MomentPoly([1.0 + 5e-14, 2.0])


def test_fourier_reality_is_checked():
    with pytest.raises(InvalidPotential):
        FourierFunction({1: X, -1: X * 2.0}, real=True)
    f = FourierFunction.trig(X, sin={1: X})
    assert f.real and f.modes[-1] == f.modes[1].conj()


def test_fourier_values_match_trig_form():
    f = FourierFunction.trig(X * X, cos={1: X}, sin={3: 1 - X})
    expected = GRID[:, None] ** 2 + GRID[:, None] * np.cos(THETA) + (1 - GRID[:, None]) * np.sin(3 * THETA)
    assert np.max(np.abs(f(GRID, THETA) - expected)) <= 1e-14


# -- Kähler potentials ---------------------------------------------------------------


def test_positivity_enforced():
    with pytest.raises(NonConvex):
        KahlerPotential(-0.45 * (X - 0.5) ** 2 * 10 + 0.1)


def test_sup_guardrail():
    with pytest.raises(GuardrailError):
        KahlerPotential(0.6)


def test_density_formula():
    phi = KahlerPotential(0.2 * X**2 - 0.1 * X)
    # rho = 1 + (x(1-x)(0.4x - 0.1))' = 1 - 0.1 + 1.0 x - 1.2 x^2
    assert np.max(np.abs(phi.density(GRID) - (0.9 + GRID - 1.2 * GRID**2))) <= 1e-14


# -- Legendre duality -----------------------------------------------------------------


def legendre_oracle(xi):
    """sup_y (xi y - log(1 + e^y)) by bounded scalar optimization."""
    res = minimize_scalar(lambda y: -(xi * y - math.log1p(math.exp(y))), bounds=(-40, 40),
                          method="bounded", options={"xatol": 1e-12})
    return -res.fun


def test_dual_of_zero_is_guillemin():
    u = symplectic_from_kahler(KahlerPotential.zero())
    for xi in (0.1, 0.37, 0.5, 0.9):
        guillemin = xi * math.log(xi) + (1 - xi) * math.log(1 - xi)
        assert abs(u(xi) - guillemin) <= 1e-15
        assert abs(u(xi) - legendre_oracle(xi)) <= 1e-9


def test_dual_of_constant_shifts_by_minus_c():
    u = symplectic_from_kahler(KahlerPotential(0.3))
    u0 = symplectic_from_kahler(KahlerPotential.zero())
    assert np.max(np.abs(u(GRID) - u0(GRID) + 0.3)) <= 1e-15


@pytest.mark.parametrize("p", CORPUS, ids=str)
def test_legendre_round_trip(p):
    phi = KahlerPotential(p)
    x = check_grid(2048, exclude=1e-6)
    d = kahler_from_symplectic(symplectic_from_kahler(phi), x) - phi.value(x)
    assert np.max(d) - np.min(d) <= 1e-9


@given(poly_strategy())
def test_legendre_round_trip_random(p):
    phi = KahlerPotential(p)
    d = kahler_from_symplectic(symplectic_from_kahler(phi), GRID) - phi.value(GRID)
    assert np.max(d) - np.min(d) <= 1e-9


def test_dual_potential_is_the_legendre_transform():
    # u(xi) = sup_y (xi y - psi_0(y) - phi(sigma(y))) checked by brute optimisation
    phi = KahlerPotential(TILT)
    u = symplectic_from_kahler(phi)
    for xi in (0.2, 0.5, 0.8):
        def neg(y):
            x = 1.0 / (1.0 + math.exp(-y))
            return -(xi * y - math.log1p(math.exp(y)) - float(phi.value(x)))
        res = minimize_scalar(neg, bounds=(-30, 30), method="bounded", options={"xatol": 1e-12})
        assert abs(u(xi) + res.fun) <= 1e-9


def test_kahler_from_guillemin_is_zero():
    assert np.max(np.abs(kahler_from_symplectic(SymplecticPotential()))) <= 1e-10


def test_kahler_from_affine_symplectic_matches_geodesic():
    t = 0.1
    u = SymplecticPotential(-(X - 0.5) * t)
    geo = ivp_geodesic(KahlerPotential.zero(), X - 0.5)
    assert np.max(np.abs(kahler_from_symplectic(u, GRID) - geo.phi(t, GRID))) <= 1e-13


def test_nonconvex_symplectic_rejected():
    with pytest.raises(NonConvex):
        SymplecticPotential(-10.0 * X**2)


@pytest.mark.parametrize("p", CORPUS, ids=str)
def test_convexity_matches_positivity(p):
    # u''(xi(x)) * x(1-x) * rho(x) = 1 links the two invariants pointwise
    phi = KahlerPotential(p)
    u = symplectic_from_kahler(phi)
    xi = phi.moment(GRID)
    prod = u.second_derivative(xi) * GRID * (1 - GRID) * phi.density(GRID)
    assert np.max(np.abs(prod - 1.0)) <= 1e-12
    assert u.convexity_margin() > 0


# -- Laplacian, pairings, brackets ----------------------------------------------------------


def test_laplacian_of_constant_vanishes():
    lap = laplacian(KahlerPotential(TILT), FourierFunction.invariant(3.0))
    assert np.max(np.abs(lap.grid(GRID))) == 0.0


def test_laplacian_eigenfunction():
    lap = laplacian(KahlerPotential.zero(), X - 0.5).grid(GRID)[:, 0]
    assert np.max(np.abs(lap - conventions.LAPLACIAN_SIGN * (-2.0) * (GRID - 0.5))) <= 1e-14


def test_laplacian_of_square():
    lap = laplacian(KahlerPotential.zero(), X * X).grid(GRID)[:, 0]
    assert np.max(np.abs(lap - conventions.LAPLACIAN_SIGN * (4 * GRID - 6 * GRID**2))) <= 1e-14


def test_laplacian_is_non_negative_operator():
    # int f (lap f) omega_phi = int |df|^2 omega_phi >= 0 with the pinned sign
    phi = KahlerPotential(TILT)
    f = FourierFunction.trig(X * X, cos={1: X * (1 - X)})
    lap = laplacian(phi, f)
    from bmlab.quadrature import default_rule
    from bmlab.geometry import integrate_M
    rule = default_rule()
    th = rule.theta_grid()
    lhs = integrate_M(phi, f.grid(rule.nodes, th) * lap.grid(rule.nodes, th), rule)
    rhs = integrate_M(phi, grad_pairing(phi, f, f, rule.nodes, th), rule)
    assert lhs.real > 0
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_grad_pairing_basic():
    zero = KahlerPotential.zero()
    assert np.max(np.abs(grad_pairing(zero, FourierFunction.invariant(2.0), X, GRID))) == 0.0
    xx = grad_pairing(zero, X, X, GRID)[:, 0]
    assert np.max(np.abs(xx - conventions.GRAD_PAIRING_CONSTANT * GRID * (1 - GRID))) <= 1e-14


@given(trig_strategy())
def test_grad_pairing_real_non_negative(f):
    vals = grad_pairing(KahlerPotential(TILT), f, f, GRID, THETA)
    assert np.max(np.abs(vals.imag)) <= 1e-13
    assert np.min(vals.real) >= -1e-15


def test_reference_pairing_matches_field():
    f = FourierFunction.trig(X * X, sin={1: X * (1 - X)})
    g = FourierFunction.trig(X, cos={2: X * (1 - X)})
    poly = reference_grad_pairing(f, g).grid(GRID, THETA)
    field = grad_pairing(KahlerPotential.zero(), f, g, GRID, THETA)
    assert np.max(np.abs(poly - field)) <= 1e-13


def test_poisson_invariant_functions_commute():
    assert np.max(np.abs(poisson_bracket(KahlerPotential(TILT), X, X * X, GRID, THETA))) == 0.0


def test_poisson_coordinate_formula():
    br = poisson_bracket(KahlerPotential.zero(), X, FourierFunction.trig(0, sin={1: X}), GRID, THETA)
    assert np.max(np.abs(br - GRID[:, None] * np.cos(THETA)[None, :])) <= 1e-14


@given(trig_strategy(), trig_strategy())
def test_poisson_antisymmetry(f, g):
    phi = KahlerPotential(TILT)
    s = poisson_bracket(phi, f, g, GRID, THETA) + poisson_bracket(phi, g, f, GRID, THETA)
    assert np.max(np.abs(s)) <= 1e-12


@given(trig_strategy(), trig_strategy(), trig_strategy())
def test_poisson_leibniz(f, g, h):
    phi = KahlerPotential(TILT)

    def br(a, b):
        return poisson_bracket(phi, a, b, GRID, THETA)

    lhs = br(f, g * h)
    rhs = g(GRID, THETA) * br(f, h) + h(GRID, THETA) * br(f, g)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


# -- Mabuchi metric and curvature ----------------------------------------------------


def test_mabuchi_inner_examples():
    zero = KahlerPotential.zero()
    assert abs(mabuchi_inner(zero, 1, 1) - 2 * math.pi) <= 1e-13
    assert abs(mabuchi_inner(zero, X - 0.5, X - 0.5) - math.pi / 6) <= 1e-13
    assert mabuchi_inner(zero, 0, X) == 0.0


def test_total_area_is_invariant():
    for p in CORPUS:
        assert abs(mabuchi_inner(KahlerPotential(p), 1, 1) - 2 * math.pi) <= 1e-12


@given(trig_strategy(), trig_strategy(), trig_strategy(), st.floats(-2, 2))
def test_mabuchi_inner_symmetric_bilinear(a, b, c, s):
    phi = KahlerPotential(TILT)
    ab = mabuchi_inner(phi, a, b)
    scale = max(1.0, abs(ab))
    assert abs(ab - mabuchi_inner(phi, b, a)) <= 1e-12 * scale
    lhs = mabuchi_inner(phi, a * s + c, b)
    rhs = s * ab + mabuchi_inner(phi, c, b)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_mabuchi_curvature_examples():
    zero = KahlerPotential.zero()
    v2 = FourierFunction.trig(0, sin={1: X})
    assert abs(mabuchi_curvature(zero, X, v2) + math.pi / 12) <= 1e-13
    assert mabuchi_curvature(zero, X, X * X) == 0.0
    assert abs(mabuchi_curvature(zero, v2, v2)) <= 1e-28


@given(trig_strategy(), trig_strategy())
def test_mabuchi_curvature_non_positive(f, g):
    assert mabuchi_curvature(KahlerPotential(TILT), f, g) <= 0.0
