"""Berezin-Toeplitz quantization of CP^1 and convergence of Bergman geodesics.

Modules: ``geometry`` (toric Kähler data), ``quantization`` (Hilb_k, FS_k,
Toeplitz operators), ``spd_cone`` (geometry of inner products), ``mabuchi``
(exact geodesics), ``experiments`` (k-sweeps) and ``cli``.
"""
from .conventions import COVARIANT_SIGN, DHILB_SIGN, GRAD_PAIRING_CONSTANT, LAPLACIAN_SIGN
from .geometry import X, FourierFunction, KahlerPotential, MomentPoly, SymplecticPotential
from .mabuchi import MabuchiGeodesic, bvp_geodesic, ivp_geodesic
from .quantization import InnerProduct, QuantumLevel, ToeplitzMatrix, dhilb, fs, hilb, toeplitz

__version__ = "0.1.0"

__all__ = [
    "COVARIANT_SIGN",
    "DHILB_SIGN",
    "GRAD_PAIRING_CONSTANT",
    "LAPLACIAN_SIGN",
    "X",
    "FourierFunction",
    "KahlerPotential",
    "MomentPoly",
    "SymplecticPotential",
    "MabuchiGeodesic",
    "bvp_geodesic",
    "ivp_geodesic",
    "InnerProduct",
    "QuantumLevel",
    "ToeplitzMatrix",
    "dhilb",
    "fs",
    "hilb",
    "toeplitz",
]
