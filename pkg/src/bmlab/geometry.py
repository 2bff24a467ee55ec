r"""Toric Kähler geometry of CP^1 in action-angle coordinates.

The reference form is :math:`\omega_0 = dx \wedge d\theta` on
:math:`[0,1] \times [0, 2\pi)`, moment coordinate ``x`` and angle ``theta``.
In the logarithmic coordinate :math:`y = \log|z|^2` the Fubini-Study
potential is :math:`\psi_0(y) = \log(1 + e^y)` and :math:`x = \psi_0'(y)`.

An S^1-invariant change of potential ``phi`` is stored as a polynomial in the
*reference* moment coordinate.  Its volume density is

.. math:: \rho_\phi(x) = \omega_\phi / \omega_0 = 1 + (x(1-x)\phi'(x))'

and the moment coordinate of :math:`\omega_\phi` is the polynomial
:math:`\xi(x) = x + x(1-x)\phi'(x)`.  The symplectic (Legendre dual)
potential is :math:`u = x\log x + (1-x)\log(1-x) + p`, where the smooth
correction ``p`` is any object exposing ``derivs(xi, eta)``.

All Newton inversions run in logit variables so that points very close to
the poles keep full relative precision.
"""
from __future__ import annotations

from numbers import Number
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.special import expit, logit

from . import conventions
from .errors import GuardrailError, InvalidPotential, NoConvergence, NonConvex
from .quadrature import QuadratureRule, check_grid, default_rule

MAX_DEGREE = 12
SUP_GUARDRAIL = 0.5
POSITIVITY_GRID = np.linspace(0.0, 1.0, 2048)
CONVEXITY_GRID = check_grid(2048)
NEWTON_MAXITER = 100


# ---------------------------------------------------------------------------
# Polynomials and Fourier data
# ---------------------------------------------------------------------------


class MomentPoly:
    """Polynomial c_0 + c_1 x + ... + c_D x^D in the moment coordinate.

    Coefficients may be complex (angular modes of a FourierFunction).
    Equality is coefficient-wise within 1e-14.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=(0.0,)):
        c = np.atleast_1d(np.asarray(coeffs))
        if c.ndim != 1 or c.size == 0:
            raise InvalidPotential("coefficients must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(c)):
            raise InvalidPotential("coefficients must be finite")
        c = npoly.polytrim(c, 0.0) if c.size > 1 else c
        if np.iscomplexobj(c) and np.all(c.imag == 0.0):
            c = c.real
        c = c.astype(complex if np.iscomplexobj(c) else float)
        c.setflags(write=False)
        self.coeffs = c

    @classmethod
    def x(cls) -> "MomentPoly":
        return cls([0.0, 1.0])

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.coeffs)

    def __call__(self, x, nu: int = 0):
        c = self.coeffs if nu == 0 else npoly.polyder(self.coeffs, nu)
        return npoly.polyval(np.asarray(x, dtype=float), c)

    def derivs(self, xi, eta=None):
        return self(xi), self(xi, 1), self(xi, 2)

    def deriv(self, nu: int = 1) -> "MomentPoly":
        return MomentPoly(npoly.polyder(self.coeffs, nu))

    def conj(self) -> "MomentPoly":
        return MomentPoly(np.conj(self.coeffs))

    def _coerce(self, other):
        if isinstance(other, MomentPoly):
            return other.coeffs
        if isinstance(other, Number):
            return np.array([other])
        return NotImplemented

    def __add__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return c
        return MomentPoly(npoly.polyadd(self.coeffs, c))

    __radd__ = __add__

    def __neg__(self):
        return MomentPoly(-self.coeffs)

    def __sub__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return c
        return MomentPoly(npoly.polysub(self.coeffs, c))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return c
        return MomentPoly(npoly.polymul(self.coeffs, c))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, (int, np.integer)) or n < 0:
            return NotImplemented
        return MomentPoly(npoly.polypow(self.coeffs, int(n)))

    def __eq__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return NotImplemented
        n = max(c.size, self.coeffs.size)
        a = np.zeros(n, complex)
        b = np.zeros(n, complex)
        a[: self.coeffs.size] = self.coeffs
        b[: c.size] = c
        return bool(np.all(np.abs(a - b) <= 1e-14))

    __hash__ = None

    def __repr__(self):
        return f"MomentPoly({self.coeffs.tolist()!r})"


def as_poly(p) -> MomentPoly:
    if isinstance(p, MomentPoly):
        return p
    if isinstance(p, Number):
        return MomentPoly([p])
    return MomentPoly(p)


X = MomentPoly.x()
X1MX = MomentPoly([0.0, 1.0, -1.0])  # x (1 - x)


class ModalField:
    """A function sum_m a_m(x) e^{i m theta} with arbitrary callable modes.

    Produced by the differential operators below; accepted as a symbol by
    :func:`bmlab.quantization.toeplitz`.
    """

    def __init__(self, modes: Mapping[int, Callable], real: bool = False):
        self.modes = {int(m): a for m, a in modes.items()}
        self.real = bool(real)

    @property
    def max_mode(self) -> int:
        return max((abs(m) for m in self.modes), default=0)

    @property
    def is_invariant(self) -> bool:
        return set(self.modes) <= {0}

    def mode_values(self, m: int, x) -> np.ndarray:
        a = self.modes.get(m)
        if a is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.asarray(a(x))

    def grid(self, x, theta=None) -> np.ndarray:
        """Values on the tensor grid, shape (len(x), len(theta))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        theta = np.zeros(1) if theta is None else np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.zeros((x.size, theta.size), complex)
        for m, a in self.modes.items():
            out += np.asarray(a(x), dtype=complex)[:, None] * np.exp(1j * m * theta)[None, :]
        return out.real if self.real else out

    # Linear structure only; products need polynomial modes.
    @staticmethod
    def _lift(other):
        if isinstance(other, ModalField):
            return other
        if isinstance(other, (Number, MomentPoly)):
            return FourierFunction.invariant(other)
        return None

    def __add__(self, other):
        o = ModalField._lift(other)
        if o is None:
            return NotImplemented
        modes = dict(self.modes)
        for m, b in o.modes.items():
            a = modes.get(m)
            modes[m] = b if a is None else (lambda x, a=a, b=b: np.asarray(a(x)) + np.asarray(b(x)))
        return ModalField(modes, real=self.real and o.real)

    __radd__ = __add__

    def __mul__(self, c):
        if not isinstance(c, Number):
            return NotImplemented
        modes = {m: (lambda x, a=a: c * np.asarray(a(x))) for m, a in self.modes.items()}
        return ModalField(modes, real=self.real and bool(np.isreal(c)))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        o = ModalField._lift(other)
        return NotImplemented if o is None else self + (-o)


class FourierFunction(ModalField):
    """Finite Fourier series in theta with MomentPoly coefficients.

    ``real`` records the reality condition a_{-m} = conj(a_m); it is checked
    at construction.
    """

    def __init__(self, modes: Mapping[int, object], real: bool | None = None, max_mode: int = 64):
        polys = {}
        for m, a in modes.items():
            p = as_poly(a)
            if np.any(p.coeffs != 0):
                polys[int(m)] = p
        if any(abs(m) > max_mode for m in polys):
            raise InvalidPotential(f"mode cutoff |m| <= {max_mode} exceeded")
        reality = all(
            polys.get(-m, MomentPoly()) == p.conj() for m, p in polys.items()
        )
        if real is None:
            real = reality
        elif real and not reality:
            raise InvalidPotential("reality condition a_{-m} = conj(a_m) fails")
        super().__init__(polys, real=real)

    @classmethod
    def invariant(cls, p) -> "FourierFunction":
        return cls({0: as_poly(p)})

    @classmethod
    def trig(cls, constant=0.0, cos: Mapping[int, object] | None = None,
             sin: Mapping[int, object] | None = None) -> "FourierFunction":
        """Real function a_0(x) + sum a_m(x) cos(m theta) + b_m(x) sin(m theta)."""
        modes: dict[int, MomentPoly] = {0: as_poly(constant)}
        for m, a in (cos or {}).items():
            if m <= 0:
                raise InvalidPotential("trig modes must be positive")
            half = as_poly(a) * 0.5
            modes[m] = modes.get(m, MomentPoly()) + half
            modes[-m] = modes.get(-m, MomentPoly()) + half
        for m, b in (sin or {}).items():
            if m <= 0:
                raise InvalidPotential("trig modes must be positive")
            half = as_poly(b) * (-0.5j)
            modes[m] = modes.get(m, MomentPoly()) + half
            modes[-m] = modes.get(-m, MomentPoly()) - half
        return cls(modes, real=True)

    def invariant_part(self) -> MomentPoly:
        return self.modes.get(0, MomentPoly())

    def __call__(self, x, theta=None):
        return self.grid(x, theta)

    def _binary(self, other, op):
        if isinstance(other, Number):
            other = FourierFunction.invariant(other)
        if isinstance(other, MomentPoly):
            other = FourierFunction.invariant(other)
        if not isinstance(other, FourierFunction):
            return NotImplemented
        return op(other)

    def __add__(self, other):
        def op(o):
            keys = set(self.modes) | set(o.modes)
            real = self.real and o.real
            return FourierFunction(
                {m: self.modes.get(m, MomentPoly()) + o.modes.get(m, MomentPoly()) for m in keys},
                real=real or None,
            )

        return self._binary(other, op)

    __radd__ = __add__

    def __neg__(self):
        return FourierFunction({m: -a for m, a in self.modes.items()}, real=self.real or None)

    def __sub__(self, other):
        return self + (-other if not isinstance(other, Number) else -other)

    def __mul__(self, other):
        if isinstance(other, Number):
            real = self.real and np.isreal(other)
            return FourierFunction({m: a * other for m, a in self.modes.items()}, real=real or None)

        def op(o):
            out: dict[int, MomentPoly] = {}
            for m, a in self.modes.items():
                for n, b in o.modes.items():
                    out[m + n] = out.get(m + n, MomentPoly()) + a * b
            return FourierFunction(out, real=(self.real and o.real) or None)

        return self._binary(other, op)

    __rmul__ = __mul__

    def d_x(self) -> "FourierFunction":
        return FourierFunction({m: a.deriv() for m, a in self.modes.items()}, real=self.real or None)

    def d_theta(self) -> "FourierFunction":
        return FourierFunction({m: a * (1j * m) for m, a in self.modes.items()}, real=self.real or None)

    def __repr__(self):
        return f"FourierFunction({self.modes!r}, real={self.real})"


def as_field(f) -> ModalField:
    if isinstance(f, ModalField):
        return f
    if isinstance(f, (MomentPoly, Number)) or np.ndim(f) == 1:
        return FourierFunction.invariant(f)
    raise TypeError(f"cannot interpret {type(f).__name__} as a function on CP^1")


# ---------------------------------------------------------------------------
# Safeguarded Newton in logit variables
# ---------------------------------------------------------------------------


def _solve_increasing(F, eta0, maxiter: int = NEWTON_MAXITER, what: str = "Newton inversion"):
    """Solve F(eta) = 0 elementwise for an increasing F; returns eta.

    ``F`` returns ``(value, derivative)``.  A bracket is grown around the
    starting point and Newton steps leaving the bracket are replaced by
    bisection.
    """
    eta = np.array(eta0, dtype=float, copy=True)
    lo = eta - 1.0
    hi = eta + 1.0
    for _ in range(200):
        flo, _ = F(lo)
        bad = flo > 0
        if not bad.any():
            break
        lo = np.where(bad, lo - 2.0 * (eta - lo), lo)
    else:
        raise NoConvergence(f"{what}: could not bracket root")
    for _ in range(200):
        fhi, _ = F(hi)
        bad = fhi < 0
        if not bad.any():
            break
        hi = np.where(bad, hi + 2.0 * (hi - eta), hi)
    else:
        raise NoConvergence(f"{what}: could not bracket root")
    active = np.ones(eta.shape, dtype=bool)
    for _ in range(maxiter):
        f, df = F(eta)
        lo = np.where(active & (f < 0), eta, lo)
        hi = np.where(active & (f > 0), eta, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / df
        new = eta - step
        outside = ~np.isfinite(new) | (new < lo) | (new > hi)
        new = np.where(outside, 0.5 * (lo + hi), new)
        # A Newton step below 1e-10 leaves an error of order step^2.
        done = (f == 0) | (~outside & (np.abs(step) <= 1e-10 * np.maximum(1.0, np.abs(eta))))
        eta = np.where(active, new, eta)
        active &= ~done
        if not active.any():
            return eta
    raise NoConvergence(f"{what} did not converge in {maxiter} iterations")


# ---------------------------------------------------------------------------
# Kähler potentials
# ---------------------------------------------------------------------------


def density_of(poly: MomentPoly, x) -> np.ndarray:
    """rho = 1 + (x(1-x) phi')' for a polynomial phi."""
    return 1.0 + (X1MX * poly.deriv()).deriv()(x)


def positivity_margin(poly: MomentPoly) -> float:
    """min over the check grid of omega_phi / omega_0."""
    return float(np.min(density_of(as_poly(poly), POSITIVITY_GRID)))


class KahlerPotential:
    """S^1-invariant potential change phi(x), a real MomentPoly.

    Construction enforces rho_phi > 0 on a 2048-point grid (NonConvex
    otherwise) and the guardrail sup|phi| <= 0.5 (GuardrailError).
    """

    def __init__(self, phi, max_degree: int = MAX_DEGREE, sup_guardrail: float = SUP_GUARDRAIL):
        poly = as_poly(phi)
        if not poly.is_real:
            raise InvalidPotential("a Kähler potential must have real coefficients")
        if poly.degree > max_degree:
            raise InvalidPotential(f"degree {poly.degree} exceeds the maximum {max_degree}")
        margin = positivity_margin(poly)
        if not margin > 0.0:
            raise NonConvex(f"omega_phi is not positive (min density {margin:.3g})")
        sup = float(np.max(np.abs(poly(POSITIVITY_GRID))))
        if sup > sup_guardrail:
            raise GuardrailError(f"sup|phi| = {sup:.3g} exceeds the guardrail {sup_guardrail}")
        self.phi = poly
        self._d1 = poly.deriv()
        self._d2 = poly.deriv(2)
        self._rho = (X1MX * self._d1).deriv() + 1.0
        self._drho = self._rho.deriv()

    @classmethod
    def zero(cls) -> "KahlerPotential":
        return cls([0.0])

    @property
    def is_constant(self) -> bool:
        return self.phi.degree == 0

    def __call__(self, x):
        return self.phi(x)

    def value(self, x):
        return self.phi(x)

    def derivative(self, x):
        return self._d1(x)

    def density(self, x):
        return self._rho(x)

    def density_derivative(self, x):
        return self._drho(x)

    def moment(self, x):
        """Moment coordinate xi of omega_phi at the reference point x."""
        x = np.asarray(x, dtype=float)
        return x + x * (1.0 - x) * self._d1(x)

    def _logit_shift(self, x):
        # logit(xi(x)) - logit(x) = log(1 + (1-x) phi') - log(1 - x phi')
        d = self._d1(x)
        return np.log1p((1.0 - x) * d) - np.log1p(-x * d)

    def reference_point(self, xi, eta=None):
        """Invert x -> xi(x); returns (x, logit x)."""
        xi = np.asarray(xi, dtype=float)
        zeta = logit(xi) if eta is None else np.asarray(eta, dtype=float)
        if self.is_constant:
            return xi, zeta

        def F(e):
            x = expit(e)
            d = self._d1(x)
            val = e + np.log1p((1.0 - x) * d) - np.log1p(-x * d) - zeta
            # d/de logit(xi(x)) = rho / (xi (1 - xi)) * x (1 - x)
            deriv = self._rho(x) / ((1.0 + (1.0 - x) * d) * (1.0 - x * d))
            return val, deriv

        e0 = _solve_increasing(F, zeta, what="moment-map inversion")
        return expit(e0), e0

    def oscillation(self, x=POSITIVITY_GRID) -> float:
        v = self.phi(x)
        return float(np.max(v) - np.min(v))

    def __repr__(self):
        return f"KahlerPotential({self.phi.coeffs.tolist()!r})"


def as_kahler(phi) -> KahlerPotential:
    return phi if isinstance(phi, KahlerPotential) else KahlerPotential(phi)


# ---------------------------------------------------------------------------
# Smooth corrections of symplectic potentials
# ---------------------------------------------------------------------------


class DualCorrection:
    """Smooth part p of the Legendre dual of a Kähler potential."""

    def __init__(self, phi: KahlerPotential):
        self.phi = phi

    def derivs(self, xi, eta=None):
        xi = np.asarray(xi, dtype=float)
        zeta = logit(xi) if eta is None else np.asarray(eta, dtype=float)
        x, e0 = self.phi.reference_point(xi, zeta)
        d = self.phi.derivative(x)
        p1 = e0 - zeta
        p = xi * p1 - self.phi.value(x) - np.log1p(-x * d)
        a = 1.0 + (1.0 - x) * d
        b = 1.0 - x * d
        rho = self.phi.density(x)
        p2 = (1.0 / rho - 1.0 / (a * b)) / (x * (1.0 - x))
        return p, p1, p2


class PulledBack:
    """xi -> f(x(xi)): a reference-coordinate function seen in omega_phi coordinates."""

    def __init__(self, f: MomentPoly, phi: KahlerPotential):
        self.f = as_poly(f)
        self.phi = phi

    def derivs(self, xi, eta=None):
        x, _ = self.phi.reference_point(xi, eta)
        rho = self.phi.density(x)
        f1 = self.f(x, 1)
        g = self.f(x)
        g1 = f1 / rho
        g2 = (self.f(x, 2) * rho - f1 * self.phi.density_derivative(x)) / rho**3
        return g, g1, g2


class Combination:
    """Linear combination sum_i c_i p_i of smooth corrections."""

    def __init__(self, terms):
        self.terms = [(float(c), t) for c, t in terms if c != 0.0]

    def derivs(self, xi, eta=None):
        xi = np.asarray(xi, dtype=float)
        out = [np.zeros_like(xi), np.zeros_like(xi), np.zeros_like(xi)]
        for c, t in self.terms:
            for i, v in enumerate(t.derivs(xi, eta)):
                out[i] = out[i] + c * v
        return tuple(out)


def combine(terms):
    """Collapse a combination to a MomentPoly when every term is polynomial."""
    terms = [(c, t) for c, t in terms if c != 0.0]
    if all(isinstance(t, MomentPoly) for _, t in terms):
        total = MomentPoly([0.0])
        for c, t in terms:
            total = total + t * c
        return total
    flat = []
    for c, t in terms:
        if isinstance(t, Combination):
            flat.extend((c * ci, ti) for ci, ti in t.terms)
        else:
            flat.append((c, t))
    return Combination(flat)


# ---------------------------------------------------------------------------
# Symplectic potentials
# ---------------------------------------------------------------------------


def _singular(xi):
    xi = np.asarray(xi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where((xi > 0) & (xi < 1), xi * np.log(xi) + (1 - xi) * np.log1p(-xi), 0.0)
    return v


class SymplecticPotential:
    """u(xi) = xi log xi + (1 - xi) log(1 - xi) + p(xi).

    ``correction`` is a MomentPoly, a DualCorrection, a PulledBack or a
    Combination of those.  Strict convexity u'' > 0 is enforced on the
    interior check grid.
    """

    def __init__(self, correction=None, check: bool = True):
        self.correction = MomentPoly([0.0]) if correction is None else correction
        if check:
            margin = self.convexity_margin()
            if not margin > 0.0:
                raise NonConvex(f"symplectic potential is not strictly convex (min u'' = {margin:.3g})")

    def convexity_margin(self, xi=CONVEXITY_GRID) -> float:
        return float(np.min(self.second_derivative(xi)))

    def derivs(self, xi, eta=None):
        xi = np.asarray(xi, dtype=float)
        p, p1, p2 = self.correction.derivs(xi, eta)
        e = logit(xi) if eta is None else eta
        return _singular(xi) + p, e + p1, 1.0 / (xi * (1.0 - xi)) + p2

    def __call__(self, xi):
        return self.derivs(xi)[0]

    def second_derivative(self, xi):
        return self.derivs(xi)[2]

    # -- Legendre duality, evaluated pointwise in the reference coordinate --

    def moment_logit(self, x):
        """logit of the omega_u moment coordinate xi at reference points x."""
        x = np.asarray(x, dtype=float)
        y = logit(x)
        c = self.correction
        if isinstance(c, MomentPoly) and c.degree <= 0:
            return y
        if isinstance(c, DualCorrection):
            return y + c.phi._logit_shift(x)

        def F(e):
            xi = expit(e)
            _, p1, p2 = c.derivs(xi, e)
            return e + p1 - y, 1.0 + p2 * xi * (1.0 - xi)

        return _solve_increasing(F, y, what="Legendre inversion of u'")

    def kahler_data(self, x):
        """(phi, dphi/dx, rho) at reference points x."""
        x = np.asarray(x, dtype=float)
        eta = self.moment_logit(x)
        xi = expit(eta)
        p, p1, p2 = self.correction.derivs(xi, eta)
        # phi = xi p' - p - log(1 - xi + xi e^{p'})
        log_mix = np.logaddexp(np.log1p(-xi), np.log(xi) + p1)
        phi = xi * p1 - p - log_mix
        x1mx = x * (1.0 - x)
        dphi = (xi - x) / x1mx
        u2 = 1.0 / (xi * (1.0 - xi)) + p2
        rho = 1.0 / (x1mx * u2)
        return phi, dphi, rho

    def kahler_value(self, x):
        return self.kahler_data(x)[0]

    def density(self, x):
        return self.kahler_data(x)[2]

    def reference_of(self, xi):
        """Reference coordinate x at the omega_u moment coordinate xi."""
        xi = np.asarray(xi, dtype=float)
        e = logit(xi)
        _, p1, _ = self.correction.derivs(xi, e)
        return expit(e + p1)

    def __repr__(self):
        return f"SymplecticPotential({self.correction!r})"


def symplectic_from_kahler(phi) -> SymplecticPotential:
    """Legendre dual of a Kähler potential.

    A constant phi = c gives the Guillemin potential shifted by -c exactly.
    """
    phi = as_kahler(phi)
    if phi.is_constant:
        return SymplecticPotential(MomentPoly([-phi.phi.coeffs[0]]))
    return SymplecticPotential(DualCorrection(phi))


def kahler_from_symplectic(u: SymplecticPotential, x=None) -> np.ndarray:
    """Sample the Kähler potential change of ``u`` at reference points ``x``."""
    if not isinstance(u, SymplecticPotential):
        raise TypeError("expected a SymplecticPotential")
    margin = u.convexity_margin()
    if not margin > 0.0:
        raise NonConvex(f"symplectic potential is not strictly convex (min u'' = {margin:.3g})")
    x = check_grid(2048) if x is None else np.asarray(x, dtype=float)
    return u.kahler_value(x)


# ---------------------------------------------------------------------------
# Differential operators (all evaluated in reference coordinates)
# ---------------------------------------------------------------------------


def _density_fn(phi):
    if isinstance(phi, (KahlerPotential, SymplecticPotential)) or hasattr(phi, "density"):
        return phi.density
    raise InvalidPotential(f"{type(phi).__name__} does not provide a volume density")


def _poly_modes(f):
    f = as_field(f)
    if not isinstance(f, FourierFunction):
        raise InvalidPotential("differential operators need polynomial Fourier modes")
    return f


def div_grad(phi, v) -> ModalField:
    """Complex Laplacian g^{w wbar} d_w d_wbar v of omega_phi (non-positive)."""
    rho = _density_fn(phi)
    v = _poly_modes(v)
    modes = {}
    for m, a in v.modes.items():
        radial = (X1MX * a.deriv()).deriv()

        def mode(x, radial=radial, a=a, m=m):
            x = np.asarray(x, dtype=float)
            val = radial(x)
            if m:
                val = val - (m * m / 4.0) * a(x) / (x * (1.0 - x))
            return val / rho(x)

        modes[m] = mode
    return ModalField(modes, real=v.real)


def laplacian(phi, v) -> ModalField:
    """Laplace-Beltrami operator of omega_phi in the pinned sign convention."""
    base = div_grad(phi, v)
    s = conventions.LAPLACIAN_SIGN
    return ModalField({m: (lambda x, a=a: s * a(x)) for m, a in base.modes.items()}, real=base.real)


def grad_pairing_field(phi, f, g) -> ModalField:
    """<d f, dbar g> of omega_phi as a modal field (bilinear, not sesquilinear)."""
    rho = _density_fn(phi)
    f = _poly_modes(f)
    g = _poly_modes(g)
    c = conventions.GRAD_PAIRING_CONSTANT
    # d_w f ~ x(1-x) a' + (m/2) a ; d_wbar g ~ x(1-x) b' - (n/2) b ; g^{w wbar} = 1/(x(1-x) rho)
    pieces: dict[int, list] = {}
    for m, a in f.modes.items():
        fa = X1MX * a.deriv() + a * (m / 2.0)
        for n, b in g.modes.items():
            gb = X1MX * b.deriv() - b * (n / 2.0)
            pieces.setdefault(m + n, []).append(fa * gb)
    modes = {}
    for mode, polys in pieces.items():
        num = sum(polys[1:], polys[0])

        def fn(x, num=num):
            x = np.asarray(x, dtype=float)
            return c * num(x) / (x * (1.0 - x) * rho(x))

        modes[mode] = fn
    real = f.real and g.real and all(not m for m in list(f.modes) + list(g.modes))
    return ModalField(modes, real=real)


def reference_grad_pairing(f, g) -> FourierFunction:
    """<d f, dbar g> of omega_0 as a FourierFunction.

    Needs every product of modes m, n != 0 to be divisible by x(1-x), which
    holds in particular when f or g is invariant.
    """
    f = _poly_modes(f)
    g = _poly_modes(g)
    c = conventions.GRAD_PAIRING_CONSTANT
    out: dict[int, MomentPoly] = {}
    for m, a in f.modes.items():
        for n, b in g.modes.items():
            # x(1-x) a'b' + (m a b' - n a' b)/2 - (m n / 4) a b / (x(1-x))
            term = X1MX * a.deriv() * b.deriv() + (a * b.deriv() * m - a.deriv() * b * n) * 0.5
            if m and n:
                q, r = npoly.polydiv((a * b).coeffs, X1MX.coeffs)
                if np.max(np.abs(r)) > 1e-13 * max(1.0, np.max(np.abs((a * b).coeffs))):
                    raise InvalidPotential("pairing of angular modes is not polynomial")
                term = term - MomentPoly(q) * (m * n / 4.0)
            out[m + n] = out.get(m + n, MomentPoly()) + term * c
    return FourierFunction(out)


def grad_pairing(phi, f, g, x=None, theta=None) -> np.ndarray:
    """Pointwise <d f, dbar g>_phi on the grid (x, theta); complex in general."""
    x = check_grid(2048) if x is None else x
    out = grad_pairing_field(phi, f, g).grid(x, theta)
    return out


def invariant_grad_pairing(density, df, dg, x) -> np.ndarray:
    """<d f, dbar g> for invariant f, g from their x-derivatives: x(1-x) f' g' / rho."""
    x = np.asarray(x, dtype=float)
    return conventions.GRAD_PAIRING_CONSTANT * x * (1.0 - x) * df * dg / density


def poisson_field(phi, f, g) -> ModalField:
    """{f, g}_phi = (1/rho)(f_x g_theta - f_theta g_x) as a modal field."""
    rho = _density_fn(phi)
    f = _poly_modes(f)
    g = _poly_modes(g)
    pieces: dict[int, list] = {}
    for m, a in f.modes.items():
        for n, b in g.modes.items():
            if m == 0 and n == 0:
                continue
            term = (a.deriv() * b * n - a * b.deriv() * m) * 1j
            pieces.setdefault(m + n, []).append(term)
    modes = {}
    for mode, polys in pieces.items():
        num = sum(polys[1:], polys[0])
        modes[mode] = lambda x, num=num: num(x) / rho(np.asarray(x, dtype=float))
    return ModalField(modes, real=f.real and g.real)


def poisson_bracket(phi, f, g, x=None, theta=None) -> np.ndarray:
    """Poisson bracket of omega_phi on the grid (x, theta)."""
    rule = default_rule()
    x = check_grid(2048) if x is None else x
    theta = rule.theta_grid() if theta is None else theta
    return poisson_field(phi, f, g).grid(x, theta)


def integrate_M(phi, values_on_nodes, rule: QuadratureRule | None = None):
    """2 pi * int_0^1 (angular mean of F) rho dx for F sampled on (nodes, theta)."""
    rule = rule or default_rule()
    rho = _density_fn(phi)(rule.nodes)
    radial = np.mean(values_on_nodes, axis=1)
    return conventions.AREA * rule.integrate(radial * rho)


def mabuchi_inner(phi, v1, v2, rule: QuadratureRule | None = None) -> float:
    """Mabuchi metric int_M v1 v2 omega_phi."""
    rule = rule or default_rule()
    theta = rule.theta_grid()
    a = as_field(v1).grid(rule.nodes, theta)
    b = as_field(v2).grid(rule.nodes, theta)
    return float(np.real(integrate_M(phi, a * b, rule)))


def mabuchi_curvature(phi, v1, v2, rule: QuadratureRule | None = None) -> float:
    """Curvature element -1/4 int_M |{v1, v2}_phi|^2 omega_phi (non-positive)."""
    rule = rule or default_rule()
    br = poisson_field(phi, v1, v2).grid(rule.nodes, rule.theta_grid())
    return -0.25 * float(np.real(integrate_M(phi, np.abs(br) ** 2, rule)))
