"""Special functions used throughout the package."""
from .bessel import (
    MAX_ORDER,
    BesselZeroError,
    BesselZeroKind,
    bessel_zero,
    sph_jn_derivative_table,
    sph_jn_table,
    spherical_bessel_j,
    spherical_bessel_j_prime,
)
from .clebsch import AngularMomentumTriple, clebsch_gordan, clebsch_gordan_exact
from .harmonics import legendre_normalized, legendre_table, spherical_harmonic
from .quadrature import composite_nodes, gauss_legendre_nodes

__all__ = [
    "MAX_ORDER",
    "AngularMomentumTriple",
    "BesselZeroError",
    "BesselZeroKind",
    "bessel_zero",
    "clebsch_gordan",
    "clebsch_gordan_exact",
    "composite_nodes",
    "gauss_legendre_nodes",
    "legendre_normalized",
    "legendre_table",
    "sph_jn_derivative_table",
    "sph_jn_table",
    "spherical_bessel_j",
    "spherical_bessel_j_prime",
    "spherical_harmonic",
]
