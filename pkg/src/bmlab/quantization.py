"""Holomorphic sections of O(k) on CP^1, Hilb_k, FS_k and Toeplitz operators.

Matrices are written in the reference basis s_j = z^j / sqrt(N_j), which is
orthonormal for phi = 0.  With coordinate vectors u, w the inner product is
<u, w>_G = w^* G u, so an operator with matrix T is G-self-adjoint iff G T
is Hermitian, and the matrix of T_k(f) is G^{-1} M_f with
(M_f)_{ab} = <f s_b, s_a>_phi.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import logsumexp, xlogy

from . import conventions
from ._assembly import KahlerMeasure, SymplecticMeasure, band_moments, log_basis_norms
from .errors import GuardrailError, IllConditioned, InvalidPotential, LevelMismatch, NotSelfAdjoint
from .geometry import (
    FourierFunction,
    SymplecticPotential,
    X1MX,
    as_field,
    as_kahler,
    laplacian,
)
from .quadrature import QuadratureRule, default_rule

MAX_K = 512
OSC_GUARDRAIL = 120.0
COND_LIMIT = 1e12
HERMITIAN_TOL = 1e-13
SELF_ADJOINT_TOL = 1e-11


@dataclass(frozen=True)
class QuantumLevel:
    """Tensor power k; sections form a space of dimension d_k = k + 1."""

    k: int

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or not 1 <= self.k <= MAX_K:
            raise ValueError(f"k must be an integer in [1, {MAX_K}], got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))

    @property
    def dim(self) -> int:
        return self.k + 1

    @property
    def manifold_dim(self) -> int:
        return 1


def as_level(level) -> QuantumLevel:
    return level if isinstance(level, QuantumLevel) else QuantumLevel(int(level))


def _hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


class InnerProduct:
    """A point of B_k: Hermitian positive-definite Gram matrix.

    The matrix is re-symmetrized on construction; construction fails with
    IllConditioned when it is not Hermitian to 1e-13 relative, not positive
    definite, or has condition number above 1e12.
    """

    def __init__(self, level, gram, quad_error: float = 0.0, check: bool = True):
        self.level = as_level(level)
        g = np.array(gram, dtype=complex)
        if g.shape != (self.level.dim, self.level.dim):
            raise LevelMismatch(f"Gram matrix of shape {g.shape} does not match d_k = {self.level.dim}")
        self.quad_error = float(quad_error)
        if check:
            scale = np.max(np.abs(g))
            if not np.isfinite(scale) or scale == 0:
                raise IllConditioned("Gram matrix is zero or not finite")
            if np.max(np.abs(g - g.conj().T)) > HERMITIAN_TOL * scale:
                raise IllConditioned("Gram matrix is not Hermitian")
        g = _hermitian_part(g)
        if np.count_nonzero(g - np.diag(np.diag(g))) == 0:
            g = np.diag(np.diag(g).real).astype(complex)
        self.gram = g
        self.gram.setflags(write=False)
        if check:
            lam = self.eigenvalues
            if lam[0] <= 0:
                raise IllConditioned(f"Gram matrix is not positive definite (min eigenvalue {lam[0]:.3g})")
            if lam[-1] / lam[0] > COND_LIMIT:
                raise IllConditioned(f"condition number {lam[-1] / lam[0]:.3g} exceeds {COND_LIMIT:.0e}")

    @classmethod
    def identity(cls, level) -> "InnerProduct":
        level = as_level(level)
        return cls(level, np.eye(level.dim))

    @cached_property
    def is_diagonal(self) -> bool:
        return np.count_nonzero(self.gram - np.diag(np.diag(self.gram))) == 0

    @cached_property
    def eig(self):
        if self.is_diagonal:
            d = np.diag(self.gram).real
            order = np.argsort(d)
            return d[order], np.eye(d.size)[:, order].astype(complex)
        return np.linalg.eigh(self.gram)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eig[0]

    @property
    def condition_number(self) -> float:
        lam = self.eigenvalues
        return float(lam[-1] / lam[0])

    def power(self, alpha: float) -> np.ndarray:
        """G^alpha via the Hermitian eigendecomposition."""
        if self.is_diagonal:
            return np.diag(np.diag(self.gram).real ** alpha).astype(complex)
        lam, U = self.eig
        return (U * lam**alpha) @ U.conj().T

    def inverse(self) -> np.ndarray:
        return self.power(-1.0)

    def scaled(self, c: float) -> "InnerProduct":
        return InnerProduct(self.level, c * self.gram)

    def __repr__(self):
        return f"InnerProduct(k={self.level.k}, diagonal={self.is_diagonal})"


class ToeplitzMatrix:
    """Matrix of an operator on H^0(L^k), self-adjoint against ``base``.

    Doubles as a tangent vector of B_k at ``base``.
    """

    def __init__(self, level, base: InnerProduct | None, mat, quad_error: float = 0.0):
        self.level = as_level(level)
        self.base = base if base is not None else InnerProduct.identity(self.level)
        if self.base.level != self.level:
            raise LevelMismatch("base inner product lives on another level")
        self.mat = np.asarray(mat, dtype=complex)
        self.quad_error = float(quad_error)

    def self_adjointness_defect(self) -> float:
        gm = self.base.gram @ self.mat
        scale = max(float(np.max(np.abs(gm))), 1e-300)
        return float(np.max(np.abs(gm - gm.conj().T)) / scale)

    def is_self_adjoint(self, tol: float = SELF_ADJOINT_TOL) -> bool:
        return self.self_adjointness_defect() <= tol

    def check_self_adjoint(self, tol: float = SELF_ADJOINT_TOL) -> "ToeplitzMatrix":
        d = self.self_adjointness_defect()
        if d > tol:
            raise NotSelfAdjoint(f"G T is not Hermitian (relative defect {d:.3g})")
        return self

    def _peer(self, other):
        if isinstance(other, ToeplitzMatrix):
            if other.level != self.level:
                raise LevelMismatch("operators live on different levels")
            return other.mat
        return None

    def _new(self, mat, err=0.0):
        return ToeplitzMatrix(self.level, self.base, mat, max(self.quad_error, err))

    def __add__(self, other):
        o = self._peer(other)
        if o is None:
            return self._new(self.mat + other * np.eye(self.level.dim))
        return self._new(self.mat + o, other.quad_error)

    __radd__ = __add__

    def __neg__(self):
        return self._new(-self.mat)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        return self._new(c * self.mat)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self._new(self.mat / c)

    def __matmul__(self, other):
        o = self._peer(other)
        return self._new(self.mat @ o, other.quad_error)

    def commutator(self, other) -> "ToeplitzMatrix":
        return self @ other - other @ self

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def operator_norm(self) -> float:
        """Norm induced by the base inner product."""
        if self.base.is_diagonal:
            s = np.sqrt(np.diag(self.base.gram).real)
            a = s[:, None] * self.mat / s[None, :]
        else:
            a = self.base.power(0.5) @ self.mat @ self.base.power(-0.5)
        return float(np.linalg.norm(a, 2))

    def metric_norm(self) -> float:
        """sqrt(tr(v^2)), the B_k length of a tangent vector."""
        return float(np.sqrt(max(np.trace(self.mat @ self.mat).real, 0.0)))

    def __repr__(self):
        return f"ToeplitzMatrix(k={self.level.k})"


@dataclass(frozen=True)
class BasisNorms:
    """Squared reference norms of the monomials z^0 .. z^k."""

    k: int
    N: np.ndarray = field(repr=False)
    quadrature_error: float = 0.0


def basis_norms(level, rule: QuadratureRule | None = None) -> BasisNorms:
    """N_j = ||z^j||_0^2 = 2 pi j! (k-j)! / (k+1)!, cross-checked by quadrature."""
    k = level.k if isinstance(level, QuantumLevel) else int(level)
    if k < 0:
        raise ValueError("k must be non-negative")
    closed = np.exp(log_basis_norms(k))
    rule = (rule or default_rule()).companion("legendre")
    j = np.arange(k + 1)[:, None]
    logint = xlogy(j, rule.nodes[None, :]) + xlogy(k - j, rule.complements[None, :])
    quad = conventions.AREA * (np.exp(logint) @ rule.weights)
    err = float(np.max(np.abs(quad - closed) / closed))
    return BasisNorms(k, closed, err)


def _measure_for(potential):
    if isinstance(potential, SymplecticPotential):
        return SymplecticMeasure(potential)
    return KahlerMeasure(as_kahler(potential))


def _guard(level: QuantumLevel, measure, rule: QuadratureRule):
    phi = measure.equivalent_phi(rule.nodes)
    osc = float(np.max(phi) - np.min(phi))
    if level.k * osc > OSC_GUARDRAIL:
        raise GuardrailError(f"k * osc(phi) = {level.k * osc:.3g} exceeds {OSC_GUARDRAIL}")


def hilb(level, potential, rule: QuadratureRule | None = None) -> InnerProduct:
    """Hilb_k: the L^2 inner product of the weight exp(-k(psi_0 + phi)) and omega_phi.

    ``potential`` is a KahlerPotential (integrated in the reference
    coordinate) or a SymplecticPotential (integrated in its own moment
    coordinate); both describe invariant data so the Gram matrix is diagonal.
    """
    level = as_level(level)
    rule = rule or default_rule()
    measure = _measure_for(potential)
    _guard(level, measure, rule)
    diag, err = band_moments(level.k, 0, measure, None, rule)
    return InnerProduct(level, np.diag(diag), quad_error=err)


def multiplication_matrix(level, potential, f, rule: QuadratureRule | None = None):
    """(M_f)_{ab} = <f s_b, s_a>_phi; returns (matrix, doubling error)."""
    level = as_level(level)
    rule = rule or default_rule()
    f = as_field(f)
    if f.max_mode > level.k:
        raise InvalidPotential(f"mode cutoff {f.max_mode} exceeds k = {level.k}")
    measure = _measure_for(potential)
    d = level.dim
    M = np.zeros((d, d), complex)
    err = 0.0
    for m, _ in sorted(f.modes.items()):
        vals, e = band_moments(level.k, m, measure, lambda x, m=m: f.mode_values(m, x), rule)
        err = max(err, e)
        lo = np.arange(d - abs(m))
        if m >= 0:
            M[lo + m, lo] += vals
        else:
            M[lo, lo - m] += vals
    return M, err


def _apply_inverse(G: InnerProduct, M: np.ndarray) -> np.ndarray:
    if G.is_diagonal:
        return M / np.diag(G.gram).real[:, None]
    return np.linalg.solve(G.gram, M)


def toeplitz(level, potential, f, rule: QuadratureRule | None = None,
             base: InnerProduct | None = None) -> ToeplitzMatrix:
    """Matrix of T_k^phi(f) = Pi_k^phi (f .) in the reference basis."""
    level = as_level(level)
    rule = rule or default_rule()
    base = base or hilb(level, potential, rule)
    M, err = multiplication_matrix(level, potential, f, rule)
    T = ToeplitzMatrix(level, base, _apply_inverse(base, M), max(err, base.quad_error))
    if as_field(f).real:
        T.check_self_adjoint()
    return T


def dhilb(level, phi, v, rule: QuadratureRule | None = None,
          base: InnerProduct | None = None) -> ToeplitzMatrix:
    """Derivative of Hilb_k at phi in the invariant direction v.

    Returns B = G^{-1} dG with dG assembled from the differentiated
    integrand exp(-k phi) [-k v rho_phi + (x(1-x) v')'].
    """
    level = as_level(level)
    rule = rule or default_rule()
    phi = as_kahler(phi)
    v = as_field(v)
    if not (isinstance(v, FourierFunction) and v.is_invariant and v.real):
        raise InvalidPotential("dhilb needs a real S^1-invariant direction")
    vp = v.invariant_part()
    flux = (X1MX * vp.deriv()).deriv()
    k = level.k

    def integrand(x):
        return -k * vp(x) * phi.density(x) + flux(x)

    base = base or hilb(level, phi, rule)
    dg, err = band_moments(k, 0, KahlerMeasure(phi, include_density=False), integrand, rule)
    B = ToeplitzMatrix(level, base, _apply_inverse(base, np.diag(dg)), max(err, base.quad_error))
    return B.check_self_adjoint()


def toeplitz_cov_proxy(level, phi, f, rule: QuadratureRule | None = None,
                       base: InnerProduct | None = None) -> ToeplitzMatrix:
    """Second-order covariant Toeplitz proxy T_k(f) + T_k(laplacian f) / k.

    The non-negative laplacian() makes this T_k(f - k^-1 ddbar-Laplacian f),
    accurate to O(k^-2).
    """
    level = as_level(level)
    rule = rule or default_rule()
    phi = as_kahler(phi)
    base = base or hilb(level, phi, rule)
    t0 = toeplitz(level, phi, f, rule, base)
    lap = laplacian(phi, f)
    t1 = toeplitz(level, phi, lap, rule, base)
    return t0 + t1 * (conventions.COVARIANT_SIGN / level.k)


# ---------------------------------------------------------------------------
# FS_k and Bergman kernels
# ---------------------------------------------------------------------------


def _log_sections(k: int, x) -> np.ndarray:
    """log |s_j(x)|^2_{h_0^k} for the reference basis; shape (k+1, len(x))."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    j = np.arange(k + 1)[:, None]
    return xlogy(j, x[None, :]) + xlogy(k - j, 1.0 - x[None, :]) - log_basis_norms(k)[:, None]


def _phases(k: int, theta, n: int) -> np.ndarray:
    if theta is None:
        return np.ones((k + 1, n))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (n,))
    return np.exp(1j * np.arange(k + 1)[:, None] * theta[None, :])


def log_bergman_density(level, H: InnerProduct, x, theta=None) -> np.ndarray:
    """log sum_j |s_j(x)|^2_{h_0^k} over an H-orthonormal basis."""
    level = as_level(level)
    if H.level != level:
        raise LevelMismatch("inner product lives on another level")
    k = level.k
    ls = _log_sections(k, x)
    if H.is_diagonal:
        return logsumexp(ls - np.log(np.diag(H.gram).real)[:, None], axis=0)
    lam, U = H.eig
    e = np.exp(0.5 * ls) * _phases(k, theta, ls.shape[1])
    proj = U.T @ e
    return np.log(np.sum(np.abs(proj) ** 2 / lam[:, None], axis=0))


def fs(level, H: InnerProduct, x, theta=None) -> np.ndarray:
    """FS_k(H)(x) = (1/k) log sum_j |s_j(x)|^2_{h_0^k}, H-orthonormal s_j."""
    level = as_level(level)
    return log_bergman_density(level, H, x, theta) / level.k


def bergman_kernel(level, H: InnerProduct, x1, x2, theta1=0.0, theta2=0.0) -> np.ndarray:
    """|Pi_k(x1, x2)| in the h_0^k (x) h_0^k pointwise norm."""
    level = as_level(level)
    if H.level != level:
        raise LevelMismatch("inner product lives on another level")
    k = level.k
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    n = max(x1.size, x2.size)
    x1 = np.broadcast_to(x1, (n,))
    x2 = np.broadcast_to(x2, (n,))
    e1 = np.exp(0.5 * _log_sections(k, x1)) * _phases(k, theta1, n)
    e2 = np.exp(0.5 * _log_sections(k, x2)) * _phases(k, theta2, n)
    ginv_e2 = _apply_inverse(H, e2.conj())
    val = np.abs(np.sum(e1 * ginv_e2, axis=0))
    return val if val.size > 1 else val[0]


def normalized_bergman_kernel(level, H: InnerProduct, x1, x2) -> np.ndarray:
    """|Pi_k(x1, x2)| / sqrt(Pi_k(x1, x1) Pi_k(x2, x2)), in [0, 1]."""
    raw = bergman_kernel(level, H, x1, x2)
    d1 = np.exp(log_bergman_density(level, H, np.atleast_1d(x1)))
    d2 = np.exp(log_bergman_density(level, H, np.atleast_1d(x2)))
    out = raw / np.sqrt(d1 * d2)
    return out if np.size(out) > 1 else float(np.ravel(out)[0])
