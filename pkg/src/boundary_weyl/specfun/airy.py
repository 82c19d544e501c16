"""Airy functions, rotated Airy branches and Airy quotients on the complex plane.

Two evaluation routes:

* ``|z| <= SWITCH_RADIUS``: Maclaurin series. The series cancels badly where
  Ai is recessive, so it is summed in extended precision (mpmath numbers) with
  a working precision sized to the worst-case cancellation ``exp(2|zeta|)``.
* ``|z| > SWITCH_RADIUS``: ``Ai(z) = Psi(z) exp(-zeta)``, ``zeta = 2/3 z^{3/2}``,
  with ``Psi`` the usual asymptotic series, valid for ``|arg z| <= 2pi/3``.
  Outside that sector the connection formula
  ``Ai(z) = -w^2 Ai(w^2 z) - w Ai(w z)`` (``w = exp(2pi i/3)``) maps both
  terms back into it.

The switchover radius is 9: at ``|z| = 6`` the optimally truncated asymptotic
series is only good to about ``exp(-2 zeta) ~ 3e-9``; at 9 it reaches 1e-15.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum

import mpmath

SWITCH_RADIUS = 9.0
POLE_TUBE = 1e-3

# first zero of Ai on the negative axis, |a_1|
AI_FIRST_ZERO = 2.338107410459767

_OMEGA = cmath.exp(2j * math.pi / 3)
_AI0 = 0.3550280538878172  # 3^{-2/3} / Gamma(2/3)
_AIP0 = 0.2588194037928068  # 3^{-1/3} / Gamma(1/3)
_MAX_EXP = 700.0


class AiryBranch(Enum):
    PRINCIPAL = "principal"
    PLUS = "plus"
    MINUS = "minus"

    @property
    def rotation(self) -> complex:
        if self is AiryBranch.PLUS:
            return _OMEGA
        if self is AiryBranch.MINUS:
            return _OMEGA.conjugate()
        return 1.0 + 0j


class PoleProximityError(ValueError):
    """Argument lies inside the exclusion tube around a pole ray of an Airy quotient."""


@dataclass(frozen=True)
class AsymptoticSeries:
    """``leading`` power times ``sum_j coefficients[j] * z^(-step*j)``."""

    coefficients: tuple[complex, ...]
    order: float
    step: float = 1.5
    truncation: int = field(default=0)

    def __call__(self, z: complex, terms: int | None = None) -> complex:
        n = len(self.coefficients) if terms is None else terms
        zs = complex(z) ** (-self.step)
        acc = 0j
        for c in reversed(self.coefficients[:n]):
            acc = acc * zs + c
        return complex(z) ** self.order * acc


# ----------------------------------------------------------------------------
# Maclaurin route


def _maclaurin(z: complex) -> tuple[complex, complex]:
    zeta = (2.0 / 3.0) * abs(z) ** 1.5
    dps = 20 + int(math.ceil(2.0 * zeta / math.log(10.0)))
    with mpmath.workdps(dps):
        zz = mpmath.mpc(z)
        z3 = zz ** 3
        tol = mpmath.mpf(10) ** (-dps)
        # f, g are the two even/odd-type solutions; Ai = c1 f - c2 g
        f = t = mpmath.mpc(1)
        g = s = zz
        fp = u = zz * zz / 2
        gp = w = mpmath.mpc(1)
        k = 1
        while True:
            t = t * z3 / ((3 * k - 1) * (3 * k))
            s = s * z3 / ((3 * k) * (3 * k + 1))
            u = u * z3 / ((3 * k) * (3 * k + 2))
            w = w * z3 / ((3 * k - 2) * (3 * k))
            f += t
            g += s
            fp += u
            gp += w
            if k > 3 and max(abs(t), abs(s), abs(u), abs(w)) < tol * (1 + abs(f) + abs(g)):
                break
            k += 1
        c1 = 1 / (mpmath.cbrt(9) * mpmath.gamma(mpmath.mpf(2) / 3))
        c2 = 1 / (mpmath.cbrt(3) * mpmath.gamma(mpmath.mpf(1) / 3))
        ai = c1 * f - c2 * g
        aip = c1 * fp - c2 * gp
        return complex(ai), complex(aip)


# ----------------------------------------------------------------------------
# asymptotic route


def _u_coefficients(n: int) -> list[float]:
    # u_k = (2k+1)(2k+3)...(6k-1) / (216^k k!)
    out = [1.0]
    for k in range(1, n):
        prev = out[-1]
        out.append(prev * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
    return out


_U = _u_coefficients(60)
_V = [1.0] + [-(6 * k + 1) / (6 * k - 1) * _U[k] for k in range(1, 60)]


def _check_exponent(zeta: complex) -> None:
    if -zeta.real > _MAX_EXP:
        raise OverflowError(f"exp(-2/3 z^(3/2)) overflows: Re zeta = {zeta.real:.3g}")


def _asymptotic_sector(z: complex) -> tuple[complex, complex]:
    """Exponential asymptotics, valid for |arg z| <= 2pi/3 and |z| large."""
    zeta = (2.0 / 3.0) * z ** 1.5
    _check_exponent(zeta)
    inv = 1.0 / zeta
    su = sv = 0j
    p = 1.0 + 0j
    last = math.inf
    for k in range(len(_U)):
        tu = _U[k] * p
        tv = _V[k] * p
        size = abs(tu) + abs(tv)
        if size > last:  # optimal truncation
            break
        su += tu
        sv += tv
        if size < 1e-17:
            break
        last = size
        p = -p * inv
    e = cmath.exp(-zeta)
    z4 = z ** 0.25
    ai = e * su / (2.0 * math.sqrt(math.pi) * z4)
    aip = -z4 * e * sv / (2.0 * math.sqrt(math.pi))
    return ai, aip


def _asymptotic(z: complex) -> tuple[complex, complex]:
    if abs(cmath.phase(z)) <= 2.0 * math.pi / 3.0:
        return _asymptotic_sector(z)
    wm = _OMEGA.conjugate()
    wp = _OMEGA
    a1, d1 = _asymptotic_sector(z * wm)
    a2, d2 = _asymptotic_sector(z * wp)
    ai = -wm * a1 - wp * a2
    aip = -wm * wm * d1 - wp * wp * d2
    return ai, aip


def airy_pair(z: complex) -> tuple[complex, complex]:
    """Return ``(Ai(z), Ai'(z))``."""
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError("airy argument must be finite")
    if abs(z) <= SWITCH_RADIUS:
        return _maclaurin(z)
    return _asymptotic(z)


def airy_ai(z: complex) -> complex:
    return airy_pair(z)[0]


def airy_ai_prime(z: complex) -> complex:
    return airy_pair(z)[1]


def airy_ai_maclaurin(z: complex) -> tuple[complex, complex]:
    """Force the series route (used to check the overlap band)."""
    return _maclaurin(complex(z))


def airy_ai_asymptotic(z: complex) -> tuple[complex, complex]:
    """Force the asymptotic route (used to check the overlap band)."""
    return _asymptotic(complex(z))


def psi_prefactor(z: complex) -> complex:
    """``Psi(z) = Ai(z) exp(2/3 z^{3/2})``; tends to ``a_0 z^{-1/4}``."""
    z = complex(z)
    zeta = (2.0 / 3.0) * z ** 1.5
    return airy_ai(z) * cmath.exp(zeta)


def leading_prefactor_constant() -> float:
    """Closed form of ``a_0`` reproduced by :func:`psi_prefactor`, ``1/(2 sqrt(pi))``."""
    return 1.0 / (2.0 * math.sqrt(math.pi))


# ----------------------------------------------------------------------------
# rotated branches and quotients


def branch_pair(branch: AiryBranch, z: complex) -> tuple[complex, complex]:
    """``(A(z), dA/dz)`` for ``A(z) = Ai(rot * z)``."""
    rot = branch.rotation
    a, ap = airy_pair(rot * complex(z))
    return a, rot * ap


def pole_ray_distance(branch: AiryBranch, z: complex) -> float:
    """Distance from ``z`` to the ray carrying the zeros of the branch.

    Zeros of ``Ai`` lie on ``(-inf, -|a_1|]``; for ``Ai(w^{+-1} z)`` the ray is
    rotated to ``exp(+-i pi/3) [|a_1|, inf)``.
    """
    z = complex(z)
    if branch is AiryBranch.PRINCIPAL:
        w = -z
    elif branch is AiryBranch.PLUS:
        w = z * cmath.exp(-1j * math.pi / 3)
    else:
        w = z * cmath.exp(1j * math.pi / 3)
    if w.real >= AI_FIRST_ZERO:
        return abs(w.imag)
    return abs(w - AI_FIRST_ZERO)


def airy_quotient(branch: AiryBranch, z: complex, tube: float = POLE_TUBE) -> complex:
    """Logarithmic derivative ``A'(z)/A(z)`` of the selected branch."""
    if pole_ray_distance(branch, z) < tube:
        raise PoleProximityError(f"z={z!r} within {tube:g} of the {branch.value} pole ray")
    a, ap = branch_pair(branch, z)
    return ap / a


def airy_quotient_derivatives(branch: AiryBranch, z: complex, tube: float = POLE_TUBE):
    """``(Phi, Phi', Phi'')`` from the Riccati relation ``Phi' = z - Phi^2``."""
    phi = airy_quotient(branch, z, tube)
    d1 = complex(z) - phi * phi
    d2 = 1.0 - 2.0 * phi * d1
    return phi, d1, d2


def airy_wronskian(branch: AiryBranch, z: complex) -> complex:
    """``A'(z) Ai(z) - Ai'(z) A(z)``; constant in ``z``."""
    ai, aip = airy_pair(z)
    a, ap = branch_pair(branch, z)
    return ap * ai - aip * a


def quotient_series(terms: int = 8) -> AsymptoticSeries:
    """Large-``z`` series of the growing-branch quotient, ``z^{1/2} sum b_j z^{-3j/2}``.

    Coefficients follow from substituting the series into ``Phi' = z - Phi^2``;
    ``b_0 = 1`` selects the branch that grows like ``exp(+zeta)``.
    """
    b = [1.0]
    for j in range(1, terms):
        # d/dz of b_{j-1} z^{1/2 - 3(j-1)/2} matches -sum_{i+k=j} b_i b_k
        deriv = b[j - 1] * (0.5 - 1.5 * (j - 1))
        conv = sum(b[i] * b[j - i] for i in range(1, j))
        b.append(-(deriv + conv) / 2.0)
    return AsymptoticSeries(tuple(complex(c) for c in b), order=0.5, truncation=terms)
