"""Sign and normalization conventions, frozen after numerical pinning.

See docs/CONVENTIONS.md for how each constant was pinned.  Nothing in the
package hard-codes these signs elsewhere.
"""
import math

# Pointwise norm of a section s of L^k at the point with Kähler potential phi:
# |s|^2 exp(-k (psi_0 + phi)).
WEIGHT_SIGN = -1

# laplacian() returns LAPLACIAN_SIGN * (complex d-dbar Laplacian), i.e. the
# non-negative operator.  Pinned by the finite-difference test of dhilb.
LAPLACIAN_SIGN = -1

# dhilb(v) == DHILB_SIGN * toeplitz(k v + laplacian(v)).
DHILB_SIGN = -1

# Covariant proxy: T(f) + COVARIANT_SIGN / k * T(laplacian f).  With the
# non-negative laplacian() this is T(f) - k^-1 T(ddbar-Laplacian f), which
# reproduces the Berezin transform to first order.
COVARIANT_SIGN = +1

# grad_pairing(f, g) == GRAD_PAIRING_CONSTANT * g^{w wbar} d_w f d_wbar g.
GRAD_PAIRING_CONSTANT = 1.0

# Total symplectic area of CP^1 (omega_0 = dx ^ dtheta on [0,1] x [0, 2 pi)).
AREA = math.tau
