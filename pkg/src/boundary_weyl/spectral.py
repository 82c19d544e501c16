"""Boundary spectral accumulants, smoothing kernels, Weyl fits, sup-norm scans, wave traces.

Every reduction over modes runs in index order on fixed chunks (``CHUNK``)
with a compensated (``math.fsum``) combine, so a value never depends on
thread count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import roots_legendre

from .domains import BoundaryPoint
from .eigensolver import BC, Spectrum, ZonalMode

CHUNK = 4096
TAIL_TOL = 1e-8
COND_LIMIT = 1e8
MIN_FIT_EIGENVALUES = 200

# unit-frequency kernel table
_RHO_STEP = 0.005
_RHO_XMAX = 800.0
_BUMP_NODES = 1200


class IncompleteSpectrumError(ValueError):
    pass


class IllConditionedFitError(ValueError):
    pass


class UnderResolvedGridError(ValueError):
    pass


class TailTruncationWarning(UserWarning):
    pass


def _fsum_chunks(values: np.ndarray) -> float:
    parts = [math.fsum(values[i : i + CHUNK]) for i in range(0, values.size, CHUNK)]
    return math.fsum(parts)


# ----------------------------------------------------------------------------
# smoothing kernels


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 0.5
    out[inside] = np.exp(-1.0 / (1.0 - 4.0 * s[inside] ** 2))
    return out


def _smooth_step(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return a / (a + b)


@lru_cache(maxsize=None)
def _half_nodes(n: int = _BUMP_NODES):
    t, w = roots_legendre(n)
    return 0.25 * (t + 1.0), 0.25 * w  # nodes on [0, 1/2]


@lru_cache(maxsize=None)
def _bump_l2() -> float:
    s, w = _half_nodes()
    return 2.0 * float(np.sum(w * _bump(s) ** 2))


@lru_cache(maxsize=None)
def _rho_table(shape: str):
    """Cubic spline of rho on [0, _RHO_XMAX] for the unit kernel."""
    x = np.arange(0.0, _RHO_XMAX + _RHO_STEP / 2, _RHO_STEP)
    s, w = _half_nodes()
    vals = np.empty_like(x)
    if shape == "fejer_bump":
        bw = w * _bump(s)
        for i in range(0, x.size, 2000):
            B = 2.0 * (np.cos(np.outer(x[i : i + 2000], s)) @ bw)
            vals[i : i + 2000] = B * B / (2.0 * math.pi * _bump_l2())
    elif shape == "plateau":
        # rho_hat = 1 on [0, 1/2], smooth descent to 0 at 1
        t, wt = roots_legendre(2 * _BUMP_NODES)
        t = 0.5 * (t + 1.0)
        wt = 0.5 * wt
        prof = wt * _plateau_hat(t)
        for i in range(0, x.size, 2000):
            vals[i : i + 2000] = (np.cos(np.outer(x[i : i + 2000], t)) @ prof) / math.pi
    else:
        raise ValueError(f"no tabulated rho for shape {shape!r}")
    return CubicSpline(x, vals, bc_type=((1, 0.0), "not-a-knot"))


def _plateau_hat(t):
    t = np.abs(np.asarray(t, dtype=float))
    return 1.0 - _smooth_step(2.0 * (t - 0.5))


@dataclass(frozen=True)
class SmoothingKernel:
    """Even kernel with compactly supported Fourier transform.

    ``fejer_bump``: ``rho_hat = (b*b)/||b||^2`` with ``b(s) = exp(-1/(1-4s^2))``
    on ``|s| < 1/2``, so ``rho = |b_hat|^2/(2 pi ||b||^2) >= 0``.
    ``plateau``: ``rho_hat = 1`` on ``[-1/2, 1/2]`` with a smooth descent to 0
    at 1; ``rho`` takes both signs.
    ``gaussian``: ``rho_hat(t) = exp(-t^2 sigma^2 / 2)``, wave trace only.
    Scaling: ``rho_T(x) = T rho(T x)``, so ``rho_hat_T(t) = rho_hat(t/T)``.
    """

    T: float
    shape: str = "fejer_bump"
    sigma: float = 0.0

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.shape not in ("fejer_bump", "plateau", "gaussian"):
            raise ValueError(f"unknown kernel shape {self.shape!r}")

    def rho_hat_unit(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        if self.shape == "gaussian":
            return np.exp(-0.5 * (t * self.sigma) ** 2)
        if self.shape == "plateau":
            return _plateau_hat(t)
        # (b*b)(t) = int b(s) b(t-s) ds over the overlap [t-1/2, 1/2]
        tn, wn = roots_legendre(_BUMP_NODES)
        out = np.zeros_like(t)
        for i, ti in np.ndenumerate(t):
            if ti >= 1.0:
                continue
            lo, hi = ti - 0.5, 0.5
            s = lo + (hi - lo) * 0.5 * (tn + 1.0)
            out[i] = 0.5 * (hi - lo) * np.sum(wn * _bump(s) * _bump(ti - s))
        return out / _bump_l2()

    def rho_hat(self, t):
        return self.rho_hat_unit(np.asarray(t, dtype=float) / self.T)

    def rho_unit(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        if self.shape == "gaussian":
            s = self.sigma
            return np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2 * math.pi))
        spl = _rho_table(self.shape)
        return np.where(x <= _RHO_XMAX, spl(np.minimum(x, _RHO_XMAX)), 0.0)

    def rho(self, x):
        return self.T * self.rho_unit(self.T * np.asarray(x, dtype=float))

    def tail_mass(self, x0: float) -> float:
        """``int_{|x| > x0} |rho_T|``, from the unit table."""
        y = self.T * x0
        if y >= _RHO_XMAX:
            return 0.0
        grid = np.linspace(y, _RHO_XMAX, 20001)
        vals = np.abs(self.rho_unit(grid))
        return float(2.0 * np.trapezoid(vals, grid))


# ----------------------------------------------------------------------------
# accumulants


def trace_weights(spec: Spectrum, q: BoundaryPoint, raw: bool = False) -> np.ndarray:
    """``|phi_j^b(q)|^2`` for every mode, in spectrum order."""
    tr = spec.traces(q, raw)
    return tr * tr


def _check_range(spec: Spectrum, lam) -> None:
    if np.any(np.asarray(lam) > spec.lambda_max * (1 + 1e-14)):
        raise IncompleteSpectrumError(f"lambda beyond certified lambda_max = {spec.lambda_max}")


def pi_b(spec: Spectrum, q: BoundaryPoint, lam, raw: bool = False):
    """``sum_{lambda_j <= lambda} |phi_j^b(q)|^2``; accepts scalar or array ``lam``."""
    _check_range(spec, lam)
    w = trace_weights(spec, q, raw)
    cum = np.concatenate([[0.0], np.cumsum(w)])
    idx = spec.counting(lam)
    out = cum[idx]
    return float(out) if np.ndim(out) == 0 else out


def remainder(spec: Spectrum, q: BoundaryPoint, lam, C_ref: float | None = None, n: int = 2):
    if C_ref is None:
        C_ref = two_term_fit(spec, q, default_window(spec)).leading_coeff
    return pi_b(spec, q, lam) - C_ref * np.asarray(lam, dtype=float) ** n


def jump(spec: Spectrum, q: BoundaryPoint, lam_star: float) -> float:
    """Trace mass of the eigenvalue cluster containing ``lam_star``."""
    w = trace_weights(spec, q)
    for a, b in spec.clusters():
        lo, hi = spec.lam[a], spec.lam[b - 1]
        if lo * (1 - 1e-8) - 1e-12 <= lam_star <= hi * (1 + 1e-8) + 1e-12:
            return _fsum_chunks(w[a:b])
    return 0.0


def cluster_jumps(spec: Spectrum, q: BoundaryPoint):
    """``(lambda, jump)`` for every cluster."""
    w = trace_weights(spec, q)
    cl = spec.clusters()
    lam = np.array([spec.lam[a] for a, _ in cl])
    jmp = np.array([math.fsum(w[a:b]) for a, b in cl])
    return lam, jmp


def smoothed_density(spec: Spectrum, q: BoundaryPoint, lam, kernel: SmoothingKernel, plus_branch: bool = True):
    """``sum_j [rho_T(lambda - lambda_j) + rho_T(lambda + lambda_j)] |phi_j^b(q)|^2``."""
    if kernel.shape == "gaussian":
        raise ValueError("smoothed density uses a compactly supported rho_hat")
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    w = trace_weights(spec, q)
    out = np.empty(lam_arr.size)
    for i, x in enumerate(lam_arr):
        terms = kernel.rho(x - spec.lam) * w
        if plus_branch:
            terms = terms + kernel.rho(x + spec.lam) * w
        out[i] = _fsum_chunks(terms)
        _tail_check(spec, q, x, kernel, out[i])
    return float(out[0]) if np.ndim(lam) == 0 else out


def _tail_check(spec, q, x, kernel, value):
    # unseen modes beyond lambda_max: density ~ 2 C lambda, C bounded by the half-space scale
    dens = 2.0 * spec.lambda_max / math.pi
    bound = dens * kernel.tail_mass(spec.lambda_max - x)
    if bound > TAIL_TOL * abs(value):
        warnings.warn(
            f"spectral tail beyond lambda_max may contribute {bound:.2e} at lambda={x:.3g}",
            TailTruncationWarning,
            stacklevel=3,
        )


# ----------------------------------------------------------------------------
# fits


@dataclass
class WeylFit:
    q: BoundaryPoint
    exponent: float
    leading_coeff: float
    second_coeff: float
    fit_window: tuple[float, float]
    residual_rms: float
    condition: float = field(default=float("nan"))
    eigen_count: int = 0

    def to_dict(self) -> dict:
        return {
            "q": {"component": self.q.component, "coord": self.q.coord},
            "exponent": self.exponent,
            "leading_coeff": self.leading_coeff,
            "second_coeff": self.second_coeff,
            "fit_window": list(self.fit_window),
            "residual_rms": self.residual_rms,
            "condition": self.condition,
            "eigen_count": self.eigen_count,
        }


def default_window(spec: Spectrum) -> tuple[float, float]:
    return (0.4 * spec.lambda_max, spec.lambda_max)


def loglog_exponent(spec: Spectrum, q: BoundaryPoint, window, samples: int = 2000) -> float:
    lam = np.linspace(window[0], window[1], samples)
    y = pi_b(spec, q, lam)
    return float(np.polyfit(np.log(lam), np.log(y), 1)[0])


def two_term_fit(spec: Spectrum, q: BoundaryPoint, window, samples: int = 2000, n: int = 2) -> WeylFit:
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise IllConditionedFitError("empty fit window")
    _check_range(spec, hi)
    count = int(spec.counting(hi) - spec.counting(lo))
    if count < MIN_FIT_EIGENVALUES:
        raise IllConditionedFitError(f"window holds {count} eigenvalues, need {MIN_FIT_EIGENVALUES}")
    lam = np.linspace(lo, hi, samples)
    y = pi_b(spec, q, lam)
    X = np.stack([lam**n, lam ** (n - 1)], axis=1)
    cond = float(np.linalg.cond(X))
    if cond > COND_LIMIT:
        raise IllConditionedFitError(f"design condition number {cond:.3g}")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    return WeylFit(
        q=q,
        exponent=float(np.polyfit(np.log(lam), np.log(y), 1)[0]),
        leading_coeff=float(coef[0]),
        second_coeff=float(coef[1]),
        fit_window=(lo, hi),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        condition=cond,
        eigen_count=count,
    )


def power_fit(x, y) -> tuple[float, float]:
    """Least-squares ``y = a x^p``; returns ``(p, a)``."""
    p, loga = np.polyfit(np.log(np.asarray(x)), np.log(np.asarray(y)), 1)
    return float(p), float(math.exp(loga))


def half_space_constant(bc, n: int = 2) -> float:
    """Leading coefficient of the boundary spectral function for a flat boundary.

    Image method: Neumann doubles ``omega_n/(2 pi)^n``. For Dirichlet the raw
    normal-derivative kernel grows like ``2 omega_n lambda^(n+2) / ((n+2)(2 pi)^n)``;
    weighting each mode by ``lambda_j^-2`` and integrating gives ``2 omega_n/(n (2 pi)^n)``.
    """
    omega = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
    base = omega / (2.0 * math.pi) ** n
    return 2.0 * base if BC(bc) == BC.NEUMANN else 2.0 * base / n


# ----------------------------------------------------------------------------
# sup norms


@dataclass
class SupnormRow:
    lam: float
    sup_trace: float
    ratio: float
    argmax: float


def _golden_max(fun, a, b, iters: int = 60):
    """Vectorized golden-section maximization of ``fun`` on ``[a, b]``."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        keep = np.where(left, c, d)
        fkeep = np.where(left, fc, fd)
        p = np.where(left, b - g * (b - a), a + g * (b - a))
        fp = fun(p)
        c = np.where(left, p, keep)
        fc = np.where(left, fp, fkeep)
        d = np.where(left, keep, p)
        fd = np.where(left, fkeep, fp)
    x = 0.5 * (a + b)
    return x, fun(x)


def supnorm_scan(modes, boundary_grid, component: int = 0, n: int = 2) -> list[SupnormRow]:
    """Per-mode sup of the boundary trace over ``boundary_grid`` with local refinement."""
    grid = np.sort(np.mod(np.asarray(boundary_grid, dtype=float), 2 * math.pi))
    step = 2 * math.pi / grid.size
    if isinstance(modes, Spectrum):
        amp = modes.boundary_amplitudes(component)
        m = modes.m
        par = modes.parity
        lam = modes.lam
        from .eigensolver import angular_factor

        def tr(idx, phi):
            return amp[idx, None] * angular_factor(m[idx, None], par[idx, None], phi)

        count = len(modes)
        if grid.size < 8 * max(int(m.max(initial=0)), 1):
            raise UnderResolvedGridError("boundary grid must give >= 8 points per angular period")
    else:
        zlist = list(modes)
        lam = np.array([z.lam for z in zlist])
        count = len(zlist)

        def tr(idx, phi):
            phi = np.broadcast_to(phi, (idx.size, np.shape(phi)[-1]))
            return np.stack([zlist[i].trace(phi[k]) for k, i in enumerate(idx)])

        if grid.size < 8 * max(max((z.l for z in zlist), default=1), 1):
            raise UnderResolvedGridError("boundary grid must give >= 8 points per oscillation")
    rows = []
    for s in range(0, count, 512):
        idx = np.arange(s, min(s + 512, count))
        vals = np.abs(tr(idx, grid[None, :]))
        k = np.argmax(vals, axis=1)
        g0 = grid[k]
        a = g0 - step
        b = g0 + step

        def f(x, idx=idx):
            return np.abs(tr(idx, x[:, None]))[:, 0]

        x, fx = _golden_max(f, a, b)
        best = np.maximum(fx, vals[np.arange(idx.size), k])
        moved = np.abs(x - g0)
        if np.any(moved > step * (1 + 1e-9)):
            raise UnderResolvedGridError("refinement moved the maximum by more than one grid step")
        for j, i in enumerate(idx):
            L = float(lam[i])
            ratio = best[j] / L ** ((n - 1) / 2) if L > 0 else float("nan")
            rows.append(SupnormRow(L, float(best[j]), float(ratio), float(np.mod(x[j], 2 * math.pi))))
    return rows


def zonal_ratio_limit() -> float:
    """Limit of ``sup|trace| / lambda^(1/2)`` for the hemisphere zonal sequence."""
    return 1.0 / math.sqrt(math.pi)


def envelope(lam, ratio, lo: float, hi: float, width: float):
    """Bin maxima of ``ratio`` over ``[lo, hi)`` in bins of ``width``."""
    lam = np.asarray(lam)
    ratio = np.asarray(ratio)
    edges = np.arange(lo, hi + 1e-12, width)
    centers, maxima = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (lam >= a) & (lam < b)
        if sel.any():
            centers.append(0.5 * (a + b))
            maxima.append(float(ratio[sel].max()))
    return np.array(centers), np.array(maxima)


# ----------------------------------------------------------------------------
# wave trace


def default_sigma(lambda_max: float, tol: float = TAIL_TOL) -> float:
    """Smallest Gaussian width whose cutoff at lambda_max is below ``tol``."""
    return math.sqrt(2.0 * math.log(1.0 / tol)) / lambda_max


def wave_trace(spec: Spectrum, q: BoundaryPoint, t_grid, sigma: float):
    """``sum_j exp(-(sigma lambda_j)^2/2) cos(t lambda_j) |phi_j^b(q)|^2``."""
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    w = trace_weights(spec, q) * np.exp(-0.5 * (sigma * spec.lam) ** 2)
    cut = math.exp(-0.5 * (sigma * spec.lambda_max) ** 2)
    if cut > TAIL_TOL:
        warnings.warn(f"Gaussian cutoff at lambda_max is {cut:.2e}", TailTruncationWarning, stacklevel=2)
    out = np.empty(t.size)
    for s in range(0, t.size, 64):
        tt = t[s : s + 64]
        # fixed-order dot products per chunk of modes
        acc = np.zeros(tt.size)
        for c in range(0, spec.lam.size, CHUNK):
            acc = acc + np.cos(np.outer(tt, spec.lam[c : c + CHUNK])) @ w[c : c + CHUNK]
        out[s : s + 64] = acc
    return out


def local_maxima(t, y):
    t = np.asarray(t)
    y = np.asarray(y)
    i = np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
    return t[i], y[i]


__all__ = [
    "BC",
    "IllConditionedFitError",
    "IncompleteSpectrumError",
    "SmoothingKernel",
    "SupnormRow",
    "TailTruncationWarning",
    "UnderResolvedGridError",
    "WeylFit",
    "ZonalMode",
    "cluster_jumps",
    "default_sigma",
    "envelope",
    "half_space_constant",
    "jump",
    "local_maxima",
    "loglog_exponent",
    "pi_b",
    "power_fit",
    "remainder",
    "smoothed_density",
    "supnorm_scan",
    "two_term_fit",
    "wave_trace",
    "zonal_ratio_limit",
]
