"""Exception hierarchy shared by every module of the package."""


class BMLError(Exception):
    """Base class for all errors raised by bmlab."""


class InvalidPotential(BMLError, ValueError):
    """A potential or test function violates its construction invariants."""


class NonConvex(InvalidPotential):
    """Positivity of the Kähler form (equivalently convexity of u) fails."""


class GuardrailError(BMLError, ValueError):
    """A numerical-overflow guardrail (sup-norm or k*osc bound) is violated."""


class NoConvergence(BMLError, RuntimeError):
    """A Newton inversion did not converge."""


class IllConditioned(BMLError, ValueError):
    """A Gram matrix is not Hermitian positive definite or too ill-conditioned."""


class UnderResolved(BMLError, RuntimeError):
    """The quadrature doubling check disagrees beyond tolerance."""


class LevelMismatch(BMLError, ValueError):
    """Objects living on different quantum levels were combined."""


class NotSelfAdjoint(BMLError, ValueError):
    """A tangent vector is not self-adjoint with respect to its base point."""


class DomainExceeded(BMLError, ValueError):
    """A finite-difference stencil leaves the domain of the curve."""


class StepTooLarge(BMLError, RuntimeError):
    """Finite differences at h and h/2 disagree by more than 10%."""


class InsufficientData(BMLError, ValueError):
    """Fewer than two usable (k, value) pairs for a slope fit."""


class SlopeUnavailable(BMLError, ValueError):
    """A scenario needs at least three k values to report a slope."""


class ConfigError(BMLError, ValueError):
    """Invalid experiment or CLI configuration."""
