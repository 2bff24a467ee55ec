"""Fixed quadrature rules on the moment interval [0, 1].

Two radial rules are provided.  ``gauss_legendre`` integrates against dx;
``chebyshev_u`` integrates against sqrt(x (1 - x)) dx, which makes the
half-integer Bernstein moments that appear in odd angular modes exact.
Angular integrals use the uniform trapezoid rule.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

DEFAULT_NODES = 1024
DEFAULT_THETA_NODES = 256


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights on (0, 1), plus an angular node count.

    ``kind`` is ``"legendre"`` (weight 1) or ``"chebyshev_u"`` (weight
    sqrt(x(1-x))).  Weights of the Legendre rule sum to 1.
    """

    nodes: np.ndarray
    weights: np.ndarray
    n_theta: int = DEFAULT_THETA_NODES
    kind: str = "legendre"
    complements: np.ndarray | None = field(default=None, repr=False)
    _log_nodes: np.ndarray = field(init=False, repr=False)
    _log_1m_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        if np.any(nodes <= 0.0) or np.any(nodes >= 1.0) or np.any(weights <= 0.0):
            raise ValueError("nodes must lie in (0, 1) with positive weights")
        comp = 1.0 - nodes if self.complements is None else np.asarray(self.complements, dtype=float)
        for a in (nodes, weights, comp):
            a.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "complements", comp)
        object.__setattr__(self, "_log_nodes", np.log(nodes))
        object.__setattr__(self, "_log_1m_nodes", np.log(comp))

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def log_nodes(self) -> np.ndarray:
        return self._log_nodes

    @property
    def log_1m_nodes(self) -> np.ndarray:
        return self._log_1m_nodes

    def integrate(self, values) -> complex | float:
        """Weighted sum of ``values`` sampled at the nodes (last axis)."""
        return np.asarray(values) @ self.weights

    def theta_grid(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta

    def halved(self) -> "QuadratureRule":
        """The same family with half as many nodes (doubling checks)."""
        n = max(self.size // 2, 1)
        return make_rule(self.kind, n, self.n_theta)

    def companion(self, kind: str) -> "QuadratureRule":
        """The rule of another family with the same node count."""
        if kind == self.kind:
            return self
        return make_rule(kind, self.size, self.n_theta)


def _legendre_with_derivative(n: int, t: np.ndarray):
    p0, p1 = np.ones_like(t), t.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * t * p1 - (j - 1) * p0) / j
    return p1, n * (t * p1 - p0) / (t * t - 1.0)


@lru_cache(maxsize=64)
def gauss_legendre(n: int = DEFAULT_NODES, n_theta: int = DEFAULT_THETA_NODES) -> QuadratureRule:
    t, w = roots_legendre(n)
    if n > 1:
        # scipy's nodes are good to ~1e-12 at n = 1024; two Newton steps on the
        # recurrence bring the rule to roundoff level.
        for _ in range(2):
            p, dp = _legendre_with_derivative(n, t)
            t = t - p / dp
        _, dp = _legendre_with_derivative(n, t)
        w = 2.0 / ((1.0 - t * t) * dp * dp)
    return QuadratureRule(0.5 * (1.0 + t), 0.5 * w, n_theta, "legendre", complements=0.5 * (1.0 - t))


@lru_cache(maxsize=64)
def chebyshev_u(n: int = DEFAULT_NODES, n_theta: int = DEFAULT_THETA_NODES) -> QuadratureRule:
    # Gauss rule for int_{-1}^{1} g(t) sqrt(1 - t^2) dt, mapped to [0, 1]:
    # x = cos^2(a/2), 1 - x = sin^2(a/2).
    i = np.arange(n, 0, -1)
    angle = i * np.pi / (n + 1)
    w = np.pi / (n + 1) * np.sin(angle) ** 2
    return QuadratureRule(np.cos(angle / 2) ** 2, 0.25 * w, n_theta, "chebyshev_u",
                          complements=np.sin(angle / 2) ** 2)


def make_rule(kind: str, n: int, n_theta: int = DEFAULT_THETA_NODES) -> QuadratureRule:
    if kind == "legendre":
        return gauss_legendre(n, n_theta)
    if kind == "chebyshev_u":
        return chebyshev_u(n, n_theta)
    raise ValueError(f"unknown quadrature kind {kind!r}")


_default = {"n": DEFAULT_NODES, "n_theta": DEFAULT_THETA_NODES}


def default_rule() -> QuadratureRule:
    """The process-wide Gauss-Legendre rule (1024 nodes unless overridden)."""
    return gauss_legendre(_default["n"], _default["n_theta"])


def set_default_nodes(n: int, n_theta: int | None = None) -> None:
    """Override the default node count (used by ``selftest --nodes``)."""
    if n < 1:
        raise ValueError("node count must be positive")
    _default["n"] = int(n)
    if n_theta is not None:
        _default["n_theta"] = int(n_theta)


def check_grid(n: int = 2048, exclude: float = 0.0) -> np.ndarray:
    """Uniform cell-centred grid on [exclude, 1 - exclude]."""
    u = (np.arange(n) + 0.5) / n
    return exclude + (1.0 - 2.0 * exclude) * u
