"""Associated Legendre functions P_nu^m(x) of real degree, regular at x = 1.

Representation::

    P_nu^m(x) = (-1)^m prod_{j=1-m}^{m}(nu+j) / (2^m m!) * (1-x^2)^{m/2} * F(x)
    F(x)      = 2F1(m-nu, nu+m+1; m+1; (1-x)/2)

``F`` solves ``(1-x^2) F'' - 2(m+1) x F' + K F = 0`` with
``K = (nu-m)(nu+m+1)``. It is summed as a hypergeometric series on
``(1-x)/2 <= z_a`` and continued toward ``x = -1`` by Taylor steps of that
ODE. The step size is bounded by the distance to both singular points and by
the local oscillation length, which keeps each step under ~30 terms.

Everything heavy is compiled with numba and runs element by element, so a
value never depends on which other elements share the batch.
"""

from __future__ import annotations

import math

import numba
import numpy as np

_MAX_TERMS = 400
_EDGE = 1e-6  # closest approach to x = -1 for non-integer degree


class LegendreDivergenceError(ValueError):
    """Evaluation too close to x = -1, where the non-integer-degree branch is log-singular."""


@numba.njit(cache=True)
def _anchor_z(nu, m):
    k = (nu - m) * (nu + m + 1.0)
    if k <= 0.0:
        return 0.25
    return min(0.25, 2.3 * (m + 1.0) / k)


@numba.njit(cache=True)
def _series(nu, m, z):
    """(F, dF/dx) from the hypergeometric series at z = (1-x)/2."""
    a = m - nu
    b = nu + m + 1.0
    c = m + 1.0
    t = 1.0
    s = 1.0
    ds = 0.0  # dF/dz
    k = 0
    big = 1.0
    while k < _MAX_TERMS:
        # derivative term uses t_{k+1}/z = t_k * ratio / z
        r = (a + k) * (b + k) / ((c + k) * (k + 1.0))
        ds += t * r * (k + 1.0)
        t = t * r * z
        s += t
        big = max(big, abs(t))
        k += 1
        if abs(t) < 1e-17 * big and abs(t * (k + 1.0)) < 1e-17 * big and k > 2:
            break
        if t == 0.0:
            break
    return s, -0.5 * ds


@numba.njit(cache=True)
def _taylor_step(x0, f0, g0, h, m, kk):
    """Advance (F, F') from x0 to x0 + h."""
    w = 1.0 - x0 * x0
    d0 = f0
    d1 = g0 * h
    sf = d0 + d1
    sg = d1
    scale = abs(d0) + abs(d1) + 1e-300
    k = 0
    small = 0
    while k < _MAX_TERMS:
        d2 = (2.0 * x0 * (k + 1.0) * (k + m + 1.0) * h * d1
              + (k * (k - 1.0) + 2.0 * (m + 1.0) * k - kk) * h * h * d0) / (w * (k + 2.0) * (k + 1.0))
        sf += d2
        sg += (k + 2.0) * d2
        a2 = abs(d2)
        if a2 > scale:
            scale = a2
        if a2 < 1e-17 * scale:
            small += 1
            if small >= 2:
                break
        else:
            small = 0
        d0 = d1
        d1 = d2
        k += 1
    return sf, sg / h


@numba.njit(cache=True)
def _step_limit(x0, m, kk):
    lim = min(2.3 / (m + 1.0), 0.5) * (1.0 - x0)
    lim = min(lim, 0.5 * (1.0 + x0))
    s = math.sqrt(max(1.0 - x0 * x0, 0.0))
    lim = min(lim, s / math.sqrt(abs(kk) + 1.0))
    lim = min(lim, 0.05 * s)  # colatitude step <= 0.05
    return lim


@numba.njit(cache=True)
def _march_one(nu, m, xs, out_f, out_g, row):
    """Fill out_f[row, :], out_g[row, :] with F, F' at descending targets xs."""
    kk = (nu - m) * (nu + m + 1.0)
    za = _anchor_z(nu, m)
    xa = 1.0 - 2.0 * za
    n = xs.shape[0]
    i = 0
    while i < n and xs[i] >= xa:
        f, g = _series(nu, m, 0.5 * (1.0 - xs[i]))
        out_f[row, i] = f
        out_g[row, i] = g
        i += 1
    if i == n:
        return
    x0 = xa
    f0, g0 = _series(nu, m, za)
    while i < n:
        target = xs[i]
        h = -_step_limit(x0, m, kk)
        last = False
        if x0 + h <= target:
            h = target - x0
            last = True
        if h != 0.0:
            f0, g0 = _taylor_step(x0, f0, g0, h, m, kk)
        if last:
            x0 = target
            out_f[row, i] = f0
            out_g[row, i] = g0
            i += 1
        else:
            x0 = x0 + h


@numba.njit(cache=True, nogil=True)
def _march_batch(nus, ms, xs, out_f, out_g):
    for r in range(nus.shape[0]):
        _march_one(nus[r], ms[r], xs, out_f, out_g, r)


def hyp_f(nu, m, x):
    """``F`` and ``dF/dx`` for element arrays ``nu``, ``m`` at common targets ``x``.

    Returns two arrays of shape ``(len(nu), len(x))``. Targets may be in any
    order; the march runs over them in descending order.
    """
    nus = np.atleast_1d(np.asarray(nu, dtype=float))
    ms = np.broadcast_to(np.atleast_1d(np.asarray(m, dtype=float)), nus.shape).copy()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    order = np.argsort(-x, kind="stable")
    xs = np.ascontiguousarray(x[order])
    if xs.size and (xs[0] > 1.0 or xs[-1] <= -1.0):
        raise ValueError("x must lie in (-1, 1]")
    f = np.empty((nus.size, xs.size))
    g = np.empty_like(f)
    _march_batch(np.ascontiguousarray(nus), ms, xs, f, g)
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    return f[:, inv], g[:, inv]


def log_prefactor(nu: float, m: int) -> tuple[float, float]:
    """``(sign, log|c|)`` of ``(-1)^m prod_{j=1-m}^{m}(nu+j) / (2^m m!)``."""
    if m == 0:
        return 1.0, 0.0
    terms = nu + np.arange(1 - m, m + 1, dtype=float)
    if np.any(terms == 0.0):
        return 0.0, -math.inf
    sign = (-1.0) ** m * (-1.0) ** int(np.count_nonzero(terms < 0))
    logc = float(np.sum(np.log(np.abs(terms)))) - m * math.log(2.0) - math.lgamma(m + 1.0)
    return sign, logc


def _validate(nu, m, x):
    if nu < 0 or m < 0 or int(m) != m:
        raise ValueError("need nu >= 0 and integer m >= 0")
    if not (-1.0 <= x <= 1.0):
        raise ValueError("x must lie in (-1, 1]")
    integer = float(nu).is_integer()
    if 1.0 + x < _EDGE and not integer:
        raise LegendreDivergenceError(f"P_nu^m diverges at x = -1 for non-integer nu = {nu}")
    return integer


def _at_minus_one(nu, m):
    l = int(nu)
    if m > l:
        return 0.0
    return float((-1) ** l) if m == 0 else 0.0


def legendre_p(nu: float, m: int, x: float) -> float:
    """``P_nu^m(x)`` with the Condon-Shortley phase, as in ``scipy.special.lpmv``."""
    nu, x = float(nu), float(x)
    integer = _validate(nu, m, x)
    if x == -1.0:
        return _at_minus_one(nu, m) if integer else math.nan
    sign, logc = log_prefactor(nu, m)
    if sign == 0.0:
        return 0.0
    f, _ = hyp_f(nu, m, x)
    w = 1.0 - x * x
    if m > 0 and w == 0.0:
        return 0.0
    return sign * math.exp(logc + 0.5 * m * math.log(w) if m else logc) * f[0, 0]


def legendre_p_dtheta(nu: float, m: int, x: float) -> float:
    """``d/dtheta P_nu^m(cos theta)`` evaluated at ``x = cos theta``."""
    nu, x = float(nu), float(x)
    _validate(nu, m, x)
    if x == -1.0:
        raise LegendreDivergenceError("theta derivative requested at x = -1")
    sign, logc = log_prefactor(nu, m)
    if sign == 0.0:
        return 0.0
    f, g = hyp_f(nu, m, x)
    f, g = f[0, 0], g[0, 0]
    w = 1.0 - x * x
    c = sign * math.exp(logc)
    if m == 0:
        return -c * math.sqrt(w) * g
    if w == 0.0:
        # only m = 1 survives at the pole
        return -c * (-x * f) if m == 1 else 0.0
    return -c * (w ** (0.5 * (m + 1)) * g - m * x * w ** (0.5 * (m - 1)) * f)


def cap_radial(nu, m: int, theta):
    """Unnormalized radial factor ``u(theta) = sin^m(theta) F(-cos theta)`` and ``du/dtheta``.

    Proportional to ``P_nu^m(-cos theta)``; vectorized over ``nu`` (rows) and
    ``theta`` (columns).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    x = -np.cos(theta)
    f, g = hyp_f(nu, m, x)
    s = np.sin(theta)
    w = s * s
    if m == 0:
        return f, s * g
    sm1 = s ** (m - 1)
    u = sm1 * s * f
    du = sm1 * (w * g - m * x * f)
    return u, du
