"""Tangential-frequency filters acting on boundary traces.

A separable mode's boundary trace is a single angular harmonic ``e^{+-i m phi}``,
so a multiplier ``a_0(eta)`` acts on it as the scalar ``a_0(eta_j)`` with
``eta_j = m / (lambda_j rho_b)``. Symbols are even in ``eta``: the real cos/sin
pair mixes ``+m`` and ``-m``, and an even symbol keeps the action diagonal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

from .billiard import LoopScan
from .domains import DEFAULT_GLANCING_BAND, BoundaryCovector, BoundaryPoint, classify_covector
from .eigensolver import EigenMode, Spectrum
from .spectral import _fsum_chunks, trace_weights


class FilterKind(str, Enum):
    AWAY_FROM_GLANCING = "away_from_glancing"
    GLANCING_BAND = "glancing_band"
    LOOP_CUTOFF = "loop_cutoff"


class InfeasibleBudgetError(ValueError):
    """Loop directions already occupy more coball measure than the budget allows."""


@lru_cache(maxsize=8)
def _gauss(nodes: int):
    return roots_legendre(nodes)


def smooth_ramp(u):
    """C-infinity ramp: 1 for u <= 0, 0 for u >= 1."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
        b = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class SymbolFilter:
    profile: Callable
    kind: FilterKind
    eps: float = 0.0
    label: str = ""
    knots: tuple = field(default=(), compare=False)

    def __call__(self, eta):
        return np.clip(self.profile(np.abs(np.asarray(eta, dtype=float))), 0.0, 1.0)

    def l2_mass(self, lo: float = -1.0, hi: float = 1.0, weight=None, nodes: int = 4000) -> float:
        """``int |a_0|^2 w d eta`` over ``[lo, hi]`` by Gauss-Legendre."""
        t, w = _gauss(nodes)
        eta = 0.5 * (hi - lo) * (t + 1.0) + lo
        val = self(eta) ** 2
        if weight is not None:
            val = val * weight(eta)
        return float(0.5 * (hi - lo) * np.sum(w * val))

    def to_dict(self, samples: int = 401) -> dict:
        eta = np.linspace(0.0, 1.5, samples)
        return {
            "kind": self.kind.value,
            "eps": self.eps,
            "label": self.label,
            "knots": {"eta": eta.tolist(), "a0": self(eta).tolist()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SymbolFilter":
        x = np.asarray(d["knots"]["eta"])
        y = np.asarray(d["knots"]["a0"])
        return cls(lambda e: np.interp(e, x, y, right=0.0), FilterKind(d["kind"]), float(d["eps"]), d.get("label", ""))

    def check_support(self, grid=None) -> bool:
        """Support condition of the filter kind on an evaluation grid."""
        eta = np.linspace(0.0, 2.0, 20001) if grid is None else np.abs(np.asarray(grid))
        a = self(eta)
        near = np.abs(eta - 1.0) < self.eps
        if self.kind == FilterKind.AWAY_FROM_GLANCING:
            return bool(np.all(a[near] == 0.0))
        if self.kind == FilterKind.GLANCING_BAND:
            return bool(np.all(a[~near] == 0.0))
        return True


# ----------------------------------------------------------------------------
# symbol factories


def _bump_profile(center: float, halfwidth: float):
    def prof(eta):
        u = (np.asarray(eta) - center) / halfwidth
        out = np.zeros_like(u, dtype=float)
        inside = np.abs(u) < 1
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
        return out

    return prof


def bump_symbol(center: float, halfwidth: float, eps: float = DEFAULT_GLANCING_BAND) -> SymbolFilter:
    """Smooth bump in ``|eta|`` with peak 1 (mirrored when ``center > 0``)."""
    if center + halfwidth > 1.0 - eps:
        raise ValueError("bump reaches into the glancing band")
    return SymbolFilter(_bump_profile(center, halfwidth), FilterKind.AWAY_FROM_GLANCING, eps,
                        f"bump(c={center},w={halfwidth})")


def plateau_symbol(flat: float, edge: float, eps: float = DEFAULT_GLANCING_BAND) -> SymbolFilter:
    """1 on ``|eta| <= flat``, smooth descent to 0 at ``edge``."""
    if edge > 1.0 - eps:
        raise ValueError("plateau reaches into the glancing band")

    def prof(eta):
        return smooth_ramp((np.asarray(eta) - flat) / (edge - flat))

    return SymbolFilter(prof, FilterKind.AWAY_FROM_GLANCING, eps, f"plateau({flat},{edge})")


def hyperbolic_indicator(eps: float = DEFAULT_GLANCING_BAND) -> SymbolFilter:
    """Mollified indicator of ``|eta| < 1 - eps``; ramp of width ``eps/4`` inside."""
    hi = 1.0 - eps
    lo = hi - 0.25 * eps

    def prof(eta):
        return smooth_ramp((np.asarray(eta) - lo) / (hi - lo))

    return SymbolFilter(prof, FilterKind.AWAY_FROM_GLANCING, eps, f"hyperbolic(eps={eps})")


def constant_symbol(value: float = 1.0) -> SymbolFilter:
    return SymbolFilter(lambda e: np.full(np.shape(e), float(value)), FilterKind.AWAY_FROM_GLANCING, 0.0,
                        f"const({value})")


def glancing_band(eps: float) -> SymbolFilter:
    """Mollified indicator of ``||eta| - 1| < eps``; ramps of width ``eps/4`` inside."""
    if not 0 < eps <= 0.5:
        raise ValueError("glancing band needs 0 < eps <= 0.5")

    def prof(eta):
        d = np.abs(np.asarray(eta) - 1.0)
        return smooth_ramp((d - 0.75 * eps) / (0.25 * eps))

    return SymbolFilter(prof, FilterKind.GLANCING_BAND, eps, f"glancing(eps={eps})")


# ----------------------------------------------------------------------------
# action on modes


def mode_eta(mode: EigenMode, component: int) -> float:
    if mode.lam == 0.0:
        return 0.0
    return mode.m / (mode.lam * mode.domain.boundary_radius(component))


def spectrum_eta(spec: Spectrum, component: int) -> np.ndarray:
    rb = spec.domain.boundary_radius(component)
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = np.where(spec.lam > 0, spec.m / (spec.lam * rb), 0.0)
    return eta


def classify_mode(mode: EigenMode, component: int, eps: float = DEFAULT_GLANCING_BAND):
    eta = mode_eta(mode, component)
    return classify_covector(mode.domain, BoundaryCovector(BoundaryPoint(component, 0.0), eta), eps)


def apply_filter(filt: SymbolFilter, mode: EigenMode, q: BoundaryPoint) -> float:
    from .eigensolver import boundary_trace

    return float(filt(mode_eta(mode, q.component))) * boundary_trace(mode, q)


def fourier_filter_trace(filt: SymbolFilter, mode: EigenMode, q: BoundaryPoint, grid: int = 1024) -> float:
    """Reference action: sample the rim trace, multiply its DFT by ``a_0(k / (lambda rho_b))``."""
    from .eigensolver import boundary_trace

    phi = 2.0 * math.pi * np.arange(grid) / grid
    f = np.array([boundary_trace(mode, BoundaryPoint(q.component, p)) for p in phi])
    F = np.fft.fft(f)
    k = np.fft.fftfreq(grid, d=1.0 / grid)
    rb = mode.domain.boundary_radius(q.component)
    eta = np.zeros_like(k) if mode.lam == 0 else k / (mode.lam * rb)
    coef = F * filt(eta) / grid
    return float(np.real(np.sum(coef * np.exp(1j * k * q.coord))))


def filtered_weights(spec: Spectrum, filt: SymbolFilter, q: BoundaryPoint) -> np.ndarray:
    a = filt(spectrum_eta(spec, q.component))
    return (a * a) * trace_weights(spec, q)


def _window(spec: Spectrum, lam: float, width: float = 1.0):
    if lam + width > spec.lambda_max * (1 + 1e-14):
        from .spectral import IncompleteSpectrumError

        raise IncompleteSpectrumError("window extends past the certified lambda_max")
    return (spec.lam >= lam) & (spec.lam < lam + width)


def filtered_window_sum(spec: Spectrum, filt: SymbolFilter, q: BoundaryPoint, lam: float, width: float = 1.0) -> float:
    """``sum_{lambda_j in [lambda, lambda + width)} |a_0(eta_j) phi_j^b(q)|^2``."""
    sel = _window(spec, lam, width)
    return _fsum_chunks(filtered_weights(spec, filt, q)[sel])


def windows_sum(spec, filt, q, lam_lo: float, lam_hi: float) -> float:
    """Filtered sum aggregated over the unit windows tiling ``[lam_lo, lam_hi)``."""
    sel = (spec.lam >= lam_lo) & (spec.lam < lam_hi)
    if lam_hi > spec.lambda_max * (1 + 1e-14):
        from .spectral import IncompleteSpectrumError

        raise IncompleteSpectrumError("range extends past the certified lambda_max")
    return _fsum_chunks(filtered_weights(spec, filt, q)[sel])


@dataclass
class WindowLaw:
    """Measured window constant and the predicted value for a symbol."""

    value: float
    predicted: float
    constant: float


def window_law(spec, filt, baseline, q, lam: float, n: int = 2, width: float = 1.0, weight=None) -> WindowLaw:
    """Windowed sum with its companion ``C lambda^(n-1) int |a_0|^2`` (C from the baseline)."""
    base = filtered_window_sum(spec, baseline, q, lam, width)
    C = base / (lam ** (n - 1) * baseline.l2_mass(weight=weight)) if base > 0 else float("nan")
    val = filtered_window_sum(spec, filt, q, lam, width)
    return WindowLaw(val, C * lam ** (n - 1) * filt.l2_mass(weight=weight), C)


# ----------------------------------------------------------------------------
# glancing band


@dataclass
class GlancingMass:
    eps: float
    lam: float
    mass: float
    normalized: float  # mass / lambda^(n-1)


def glancing_mass(spec: Spectrum, eps: float, q: BoundaryPoint, lam: float, width: float = 1.0, n: int = 2) -> GlancingMass:
    m = filtered_window_sum(spec, glancing_band(eps), q, lam, width)
    return GlancingMass(eps, lam, m, m / lam ** (n - 1))


@dataclass
class LinearFit:
    slope: float
    residual_rms: float
    relative_residual: float  # rms(resid) / (slope * rms(x))
    x: list
    y: list


def through_origin_fit(x, y) -> LinearFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = float(np.dot(x, y) / np.dot(x, x))
    res = y - s * x
    rr = float(np.sqrt(np.mean(res**2)))
    scale = abs(s) * float(np.sqrt(np.mean(x**2)))
    return LinearFit(s, rr, rr / scale if scale > 0 else float("inf"), x.tolist(), y.tolist())


def glancing_slope(spec, q, eps_values, lam_lo: float, lam_hi: float, n: int = 2) -> LinearFit:
    """Fit ``<mass/lambda^(n-1)> = s * eps`` with the mass averaged over unit windows."""
    starts = np.arange(lam_lo, lam_hi - 1 + 1e-9, 1.0)
    ys = []
    for e in eps_values:
        vals = [glancing_mass(spec, e, q, float(l), n=n).normalized for l in starts]
        ys.append(float(np.mean(vals)))
    return through_origin_fit(eps_values, ys)


# ----------------------------------------------------------------------------
# loop cutoff


def build_loop_cutoff(scan: LoopScan, T: float, budget: float, width: float | None = None) -> SymbolFilter:
    """Filter ``1 - chi_T`` equal to 1 on a neighbourhood of the detected loop directions.

    Loop directions are reflected ``eta -> -eta`` (every model is symmetric
    about the normal line at q). The complement measure is reported as a
    fraction of the coball ``[-1, 1]``.
    """
    if scan.estimate.horizon != T:
        raise ValueError("scan horizon differs from T")
    eta = np.abs(scan.eta[scan.is_loop])
    if width is None:
        width = math.pi / scan.psi.size
    if eta.size == 0:
        filt = SymbolFilter(lambda e: np.zeros(np.shape(e)), FilterKind.LOOP_CUTOFF, 0.0, "loop_cutoff(empty)")
        return filt
    eta = np.sort(eta)
    # merge [e - w, e + w] into disjoint intervals
    starts, ends = [eta[0] - width], [eta[0] + width]
    for e in eta[1:]:
        if e - width <= ends[-1]:
            ends[-1] = e + width
        else:
            starts.append(e - width)
            ends.append(e + width)
    lo = np.array(starts)
    hi = np.array(ends)

    def prof(e):
        e = np.asarray(e, dtype=float)
        d = np.min(np.maximum(lo[:, None] - e.ravel()[None, :], e.ravel()[None, :] - hi[:, None]), axis=0)
        return smooth_ramp(d.reshape(e.shape) / width)

    filt = SymbolFilter(prof, FilterKind.LOOP_CUTOFF, 0.0, f"loop_cutoff(T={T})")
    measure = _linear_mass(filt)
    if measure > budget:
        raise InfeasibleBudgetError(f"loop neighbourhood measure {measure:.3g} exceeds budget {budget:.3g}")
    return filt


def _linear_mass(filt: SymbolFilter, nodes: int = 200_001) -> float:
    """``(1/2) int_{-1}^{1} a_0 d eta``, the normalized coball measure of the filter."""
    e = np.linspace(-1.0, 1.0, nodes)
    return float(0.5 * np.trapezoid(filt(e), e))


def cutoff_complement_measure(filt: SymbolFilter) -> float:
    return _linear_mass(filt)
