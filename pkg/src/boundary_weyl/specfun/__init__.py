from .airy import (
    AiryBranch,
    AsymptoticSeries,
    PoleProximityError,
    airy_ai,
    airy_ai_prime,
    airy_pair,
    airy_quotient,
    airy_wronskian,
)
from .bessel import BesselDomainError, bessel_j, bessel_j_prime, bessel_y, bessel_y_prime
from .legendre import LegendreDivergenceError, legendre_p, legendre_p_dtheta

__all__ = [
    "AiryBranch",
    "AsymptoticSeries",
    "BesselDomainError",
    "LegendreDivergenceError",
    "PoleProximityError",
    "airy_ai",
    "airy_ai_prime",
    "airy_pair",
    "airy_quotient",
    "airy_wronskian",
    "bessel_j",
    "bessel_j_prime",
    "bessel_y",
    "bessel_y_prime",
    "legendre_p",
    "legendre_p_dtheta",
]
