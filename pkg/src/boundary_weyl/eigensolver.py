"""Separable Dirichlet/Neumann spectra on the annulus and the cap complement.

Boundary traces follow the Cauchy-data normalization: Neumann modes report
their restriction, Dirichlet modes report ``lambda^-1 d_nu phi`` with the
inward normal. ``raw=True`` drops the ``lambda^-1``.

Angular factors are real: ``1/sqrt(2 pi)`` for m = 0, ``cos(m phi)/sqrt(pi)``
and ``sin(m phi)/sqrt(pi)`` for m >= 1.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import special
from scipy.special import roots_legendre

from .domains import Annulus, BoundaryPoint, DomainModel, SphereCapComplement, domain_from_dict
from .specfun.legendre import cap_radial, hyp_f

SCHEMA_VERSION = 1
ROOT_TOL = 1e-12
CLUSTER_RTOL = 1e-8
ANNULUS_LAMBDA_LIMIT = 400.0
CAP_LAMBDA_LIMIT = 200.0
CAP_NU_STEP = 0.25
AUDIT_REFINE = 4

_SQ2PI = math.sqrt(2.0 * math.pi)
_SQPI = math.sqrt(math.pi)


class BC(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class Parity(int, Enum):
    NONE = 0  # m = 0
    COS = 1
    SIN = 2


class MissedRootError(RuntimeError):
    """Sign-change counts on the bracketing grid and the refined audit grid disagree."""


class SpectrumRangeError(ValueError):
    pass


def angular_factor(m, parity, phi):
    m = np.asarray(m)
    parity = np.asarray(parity)
    arg = m * phi
    return np.where(parity == 0, 1.0 / _SQ2PI, np.where(parity == 1, np.cos(arg), np.sin(arg)) / _SQPI)


# ----------------------------------------------------------------------------
# annulus


def _scaled(f, g):
    """(f, g) / sqrt(f^2 + g^2), tolerant of overflow in g."""
    bad = ~np.isfinite(g)
    f = np.where(bad, 0.0, f)
    g2 = np.where(bad, np.sign(g), g)
    mod = np.hypot(f, g2)
    return f / mod, g2 / mod


def annulus_secular(bc: BC, m, lam, r1: float, r2: float):
    """Scaled cross product whose zeros in lambda are the eigenvalues for order m."""
    a = lam * r1
    b = lam * r2
    if bc == BC.DIRICHLET:
        ja, ya = _scaled(special.jv(m, a), special.yv(m, a))
        jb, yb = _scaled(special.jv(m, b), special.yv(m, b))
    else:
        ja, ya = _scaled(special.jvp(m, a), special.yvp(m, a))
        jb, yb = _scaled(special.jvp(m, b), special.yvp(m, b))
    return ja * yb - jb * ya


def _annulus_grid(m: int, r1: float, r2: float, lam_max: float):
    h = 0.45 * math.pi / (r2 - r1)
    lo = max(m / r2, 1e-6)
    n = max(int(math.ceil((lam_max - lo) / h)), 1)
    coarse = lo + (lam_max - lo) * np.arange(n + 1) / n
    fine = lo + (lam_max - lo) * np.arange(AUDIT_REFINE * n + 1) / (AUDIT_REFINE * n)
    return coarse, fine


def _sign_changes(v):
    s = np.signbit(v)
    return np.nonzero(s[1:] != s[:-1])[0]


def _bisect(fun, a, b, fa, tol=ROOT_TOL):
    a = a.copy()
    b = b.copy()
    fa = fa.copy()
    while True:
        width = b - a
        if np.all(width <= tol * np.maximum(1.0, np.abs(a))):
            break
        mid = 0.5 * (a + b)
        fm = fun(mid)
        left = np.signbit(fm) != np.signbit(fa)
        b = np.where(left, mid, b)
        a = np.where(left, a, mid)
        fa = np.where(left, fa, fm)
    return 0.5 * (a + b)


def _annulus_roots_m(bc, m, r1, r2, lam_max):
    coarse, fine = _annulus_grid(m, r1, r2, lam_max)
    vf = annulus_secular(bc, m, fine, r1, r2)
    vc = vf[::AUDIT_REFINE]
    idx = _sign_changes(vc)
    n_fine = _sign_changes(vf).size
    if idx.size != n_fine:
        raise MissedRootError(f"annulus {bc.value} m={m}: {idx.size} brackets vs {n_fine} on audit grid")
    if idx.size == 0:
        return np.empty(0)
    a, b = coarse[idx], coarse[idx + 1]
    fa = vc[idx]
    return _bisect(lambda x: annulus_secular(bc, m, x, r1, r2), a, b, fa)


def _annulus_radial(bc, m, lam, r, r1):
    """Reference radial factor normalized so its boundary data at r1 are O(1)."""
    a = lam * r1
    if bc == BC.DIRICHLET:
        cj, cy = _scaled(special.jv(m, a), special.yv(m, a))
    else:
        cj, cy = _scaled(special.jvp(m, a), special.yvp(m, a))
    x = lam * r
    R = special.jv(m, x) * cy - special.yv(m, x) * cj
    dR = lam * (special.jvp(m, x) * cy - special.yvp(m, x) * cj)
    return R, dR


def _annulus_norm_sq(bc, m, lam, r1, r2):
    """Closed-form integral of r R(r)^2 over [r1, r2] (Lommel)."""
    out = 0.0
    for r, sgn in ((r2, 1.0), (r1, -1.0)):
        R, dR = _annulus_radial(bc, m, lam, r, r1)
        zp = dR / lam
        out = out + sgn * 0.5 * r * r * (zp * zp + (1.0 - (m / (lam * r)) ** 2) * R * R)
    return out


# ----------------------------------------------------------------------------
# cap complement


def nu_of_lambda(lam):
    return -0.5 + np.sqrt(0.25 + np.asarray(lam, dtype=float) ** 2)


def cap_secular(bc: BC, m: int, nu, x_b: float):
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    f, g = hyp_f(nu, m, [x_b])
    f, g = f[:, 0], g[:, 0]
    if bc == BC.DIRICHLET:
        return f
    return (1.0 - x_b * x_b) * g - m * x_b * f


def _cap_grid(bc, m, nu_max):
    lo = float(nu_of_lambda(m))
    if m == 0 and bc == BC.NEUMANN:
        lo = 0.05
    n = max(int(math.ceil((nu_max - lo) / CAP_NU_STEP)), 1)
    coarse = lo + (nu_max - lo) * np.arange(n + 1) / n
    fine = lo + (nu_max - lo) * np.arange(AUDIT_REFINE * n + 1) / (AUDIT_REFINE * n)
    return coarse, fine


def _illinois(fun, a, b, fa, fb, tol=ROOT_TOL, max_iter=200):
    a, b, fa, fb = a.copy(), b.copy(), fa.copy(), fb.copy()
    side = np.zeros(a.size, int)
    for _ in range(max_iter):
        done = np.abs(b - a) <= tol * np.maximum(1.0, np.abs(a))
        if np.all(done):
            break
        c = (a * fb - b * fa) / (fb - fa)
        # keep iterates strictly inside; fall back to bisection on degenerate steps
        bad = ~np.isfinite(c) | (c <= np.minimum(a, b)) | (c >= np.maximum(a, b))
        c = np.where(bad, 0.5 * (a + b), c)
        c = np.where(done, a, c)
        fc = fun(c)
        same_a = np.signbit(fc) == np.signbit(fa)
        upd = ~done
        ia = upd & same_a
        ib = upd & ~same_a
        # replace the endpoint with the same sign, halve the stale one (Illinois)
        fb = np.where(ia & (side == -1), fb * 0.5, fb)
        fa = np.where(ib & (side == 1), fa * 0.5, fa)
        a = np.where(ia, c, a)
        fa = np.where(ia, fc, fa)
        b = np.where(ib, c, b)
        fb = np.where(ib, fc, fb)
        side = np.where(ia, -1, np.where(ib, 1, side))
        exact = upd & (fc == 0)
        a = np.where(exact, c, a)
        b = np.where(exact, c, b)
    return 0.5 * (a + b)


def _cap_roots_m(bc, m, x_b, nu_max):
    coarse, fine = _cap_grid(bc, m, nu_max)
    vf = cap_secular(bc, m, fine, x_b)
    vc = vf[::AUDIT_REFINE]
    idx = _sign_changes(vc)
    n_fine = _sign_changes(vf).size
    if idx.size != n_fine:
        raise MissedRootError(f"cap {bc.value} m={m}: {idx.size} brackets vs {n_fine} on audit grid")
    if idx.size == 0:
        return np.empty(0)
    return _illinois(lambda v: cap_secular(bc, m, v, x_b), coarse[idx], coarse[idx + 1], vc[idx], vc[idx + 1])


def _cap_quadrature(r: float, nu_max: float):
    nq = int(math.ceil(nu_max * (math.pi - r))) + 50
    t, w = roots_legendre(nq)
    half = 0.5 * (math.pi - r)
    theta = r + half * (t + 1.0)
    return theta, w * half


def _cap_norm_sq(nus, m, r):
    if nus.size == 0:
        return np.empty(0)
    theta, w = _cap_quadrature(r, float(nus.max()))
    u, _ = cap_radial(nus, m, theta)
    return (u * u * np.sin(theta)) @ w


def _cap_boundary(nus, m, r):
    u, du = cap_radial(nus, m, [r])
    return u[:, 0], du[:, 0]


# ----------------------------------------------------------------------------
# mode objects


@dataclass(frozen=True)
class EigenMode:
    bc: BC
    domain: DomainModel
    m: int
    k: int  # radial index (annulus) or root index (cap), 1-based; 0 for the constant mode
    nu: float  # cap degree, nan on the annulus
    lam: float
    norm_const: float
    parity: Parity

    def radial(self, rho):
        """Normalized radial factor and its derivative at radius / colatitude ``rho``."""
        rho = np.asarray(rho, dtype=float)
        if self.lam == 0.0:
            return np.full_like(rho, self.norm_const), np.zeros_like(rho)
        if isinstance(self.domain, Annulus):
            R, dR = _annulus_radial(self.bc, self.m, self.lam, rho, self.domain.r_inner)
            return self.norm_const * R, self.norm_const * dR
        u, du = cap_radial(self.nu, self.m, np.atleast_1d(rho))
        return (self.norm_const * u[0]).reshape(rho.shape), (self.norm_const * du[0]).reshape(rho.shape)

    def angular(self, phi):
        return angular_factor(self.m, int(self.parity), phi)

    def value(self, rho, phi):
        R, _ = self.radial(rho)
        return R * self.angular(phi)

    def boundary_radius_coord(self, component: int) -> float:
        if isinstance(self.domain, Annulus):
            return self.domain.r_inner if component == 0 else self.domain.r_outer
        return self.domain.cap_radius


def _normal_sign(domain, component):
    # d/drho points into M except on the outer annulus rim
    return -1.0 if isinstance(domain, Annulus) and component == 1 else 1.0


def boundary_trace(mode: EigenMode, q: BoundaryPoint, raw: bool = False) -> float:
    rb = mode.boundary_radius_coord(q.component)
    R, dR = mode.radial(rb)
    ang = mode.angular(q.coord)
    if mode.bc == BC.NEUMANN:
        return float(R * ang)
    dn = _normal_sign(mode.domain, q.component) * dR
    scale = 1.0 if raw else 1.0 / mode.lam
    return float(scale * dn * ang)


# ----------------------------------------------------------------------------
# spectrum container


class Spectrum:
    """Sorted list of modes with vectorized boundary-trace evaluation."""

    def __init__(self, domain, bc, lambda_max, m, k, nu, lam, norm, parity):
        self.domain = domain
        self.bc = BC(bc)
        self.lambda_max = float(lambda_max)
        order = np.lexsort((parity, m, lam))
        self.m = np.asarray(m, dtype=int)[order]
        self.k = np.asarray(k, dtype=int)[order]
        self.nu = np.asarray(nu, dtype=float)[order]
        self.lam = np.asarray(lam, dtype=float)[order]
        self.norm = np.asarray(norm, dtype=float)[order]
        self.parity = np.asarray(parity, dtype=int)[order]
        self._amp = {}

    def __len__(self):
        return self.lam.size

    def __getitem__(self, j):
        return EigenMode(
            self.bc, self.domain, int(self.m[j]), int(self.k[j]), float(self.nu[j]),
            float(self.lam[j]), float(self.norm[j]), Parity(int(self.parity[j])),
        )

    def __iter__(self):
        return (self[j] for j in range(len(self)))

    def boundary_amplitudes(self, component: int, raw: bool = False) -> np.ndarray:
        """Radial part of the boundary trace for every mode on ``component``."""
        key = (component, raw)
        if key in self._amp:
            return self._amp[key]
        amp = np.empty(len(self))
        const = self.lam == 0.0
        dom = self.domain
        if isinstance(dom, Annulus):
            r1 = dom.r_inner
            rb = r1 if component == 0 else dom.r_outer
            idx = ~const
            R, dR = _annulus_radial(self.bc, self.m[idx], self.lam[idx], rb, r1)
            vals = R if self.bc == BC.NEUMANN else _normal_sign(dom, component) * dR
            amp[idx] = self.norm[idx] * vals
        else:
            r = dom.cap_radius
            for mm in np.unique(self.m):
                sel = (self.m == mm) & ~const
                if not sel.any():
                    continue
                u, du = _cap_boundary(self.nu[sel], int(mm), r)
                amp[sel] = self.norm[sel] * (u if self.bc == BC.NEUMANN else du)
        amp[const] = self.norm[const]
        if self.bc == BC.DIRICHLET and not raw:
            amp = amp / self.lam
        self._amp[key] = amp
        return amp

    def traces(self, q: BoundaryPoint, raw: bool = False) -> np.ndarray:
        amp = self.boundary_amplitudes(q.component, raw)
        return amp * angular_factor(self.m, self.parity, q.coord)

    def clusters(self, rtol: float = CLUSTER_RTOL):
        """Index ranges ``[start, stop)`` of eigenvalue clusters."""
        lam = self.lam
        if lam.size == 0:
            return []
        brk = np.nonzero(np.diff(lam) > rtol * np.maximum(lam[1:], 1.0))[0] + 1
        edges = np.concatenate([[0], brk, [lam.size]])
        return list(zip(edges[:-1], edges[1:]))

    def counting(self, lam):
        return np.searchsorted(self.lam, np.asarray(lam), side="right")

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "domain": self.domain.to_dict(),
            "bc": self.bc.value,
            "lambda_max": self.lambda_max,
            "modes": {
                "m": self.m.tolist(),
                "k": self.k.tolist(),
                "nu": [None if math.isnan(v) else v for v in self.nu.tolist()],
                "lambda": self.lam.tolist(),
                "norm_const": self.norm.tolist(),
                "parity": self.parity.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Spectrum":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError("spectrum schema version mismatch")
        md = d["modes"]
        nu = [math.nan if v is None else v for v in md["nu"]]
        return cls(domain_from_dict(d["domain"]), d["bc"], d["lambda_max"], md["m"], md["k"], nu,
                   md["lambda"], md["norm_const"], md["parity"])


def cache_key(domain: DomainModel, bc, lambda_max: float) -> str:
    blob = json.dumps({"domain": domain.to_dict(), "bc": BC(bc).value, "lambda_max": float(lambda_max),
                       "schema_version": SCHEMA_VERSION}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def save_spectrum(spec: Spectrum, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), sort_keys=True))


def load_spectrum(path) -> Spectrum:
    return Spectrum.from_dict(json.loads(Path(path).read_text()))


# ----------------------------------------------------------------------------
# builders


def _expand(bc, rows):
    """rows: (m, k, nu, lam, norm) per (m, k); duplicate m >= 1 into cos/sin."""
    out = {key: [] for key in ("m", "k", "nu", "lam", "norm", "parity")}
    for m, k, nu, lam, norm in rows:
        pars = (0,) if m == 0 else (1, 2)
        for p in pars:
            out["m"].append(m)
            out["k"].append(k)
            out["nu"].append(nu)
            out["lam"].append(lam)
            out["norm"].append(norm)
            out["parity"].append(p)
    return out


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def annulus_spectrum(bc, r1: float, r2: float, lambda_max: float, threads: int = 1) -> Spectrum:
    bc = BC(bc)
    dom = Annulus(r1, r2)
    if lambda_max > ANNULUS_LAMBDA_LIMIT:
        raise SpectrumRangeError(f"lambda_max <= {ANNULUS_LAMBDA_LIMIT} at default accuracy")
    m_max = int(math.floor(lambda_max * r2))

    def per_m(m):
        roots = _annulus_roots_m(bc, m, r1, r2, lambda_max)
        roots = roots[roots <= lambda_max]
        if roots.size == 0:
            return []
        nsq = _annulus_norm_sq(bc, m, roots, r1, r2)
        norm = 1.0 / np.sqrt(nsq)
        return [(m, k + 1, math.nan, float(lam), float(c)) for k, (lam, c) in enumerate(zip(roots, norm))]

    rows = [row for part in _map(per_m, range(m_max + 1), threads) for row in part]
    if bc == BC.NEUMANN and lambda_max >= 0:
        rows.insert(0, (0, 0, math.nan, 0.0, 1.0 / math.sqrt(dom.area() / (2.0 * math.pi))))
    ex = _expand(bc, rows)
    return Spectrum(dom, bc, lambda_max, ex["m"], ex["k"], ex["nu"], ex["lam"], ex["norm"], ex["parity"])


def cap_spectrum(bc, r: float, lambda_max: float, threads: int = 1) -> Spectrum:
    bc = BC(bc)
    dom = SphereCapComplement(r)
    if lambda_max > CAP_LAMBDA_LIMIT:
        raise SpectrumRangeError(f"lambda_max <= {CAP_LAMBDA_LIMIT} at default accuracy")
    x_b = -math.cos(r)
    nu_max = float(nu_of_lambda(lambda_max))
    m_max = int(math.floor(lambda_max))

    def per_m(m):
        if nu_of_lambda(m) >= nu_max:
            return []
        nus = _cap_roots_m(bc, m, x_b, nu_max)
        lam = np.sqrt(nus * (nus + 1.0))
        keep = lam <= lambda_max
        nus, lam = nus[keep], lam[keep]
        if nus.size == 0:
            return []
        norm = 1.0 / np.sqrt(_cap_norm_sq(nus, m, r))
        return [(m, k + 1, float(n), float(l), float(c)) for k, (n, l, c) in enumerate(zip(nus, lam, norm))]

    rows = [row for part in _map(per_m, range(m_max + 1), threads) for row in part]
    if bc == BC.NEUMANN:
        rows.insert(0, (0, 0, 0.0, 0.0, 1.0 / math.sqrt(dom.area() / (2.0 * math.pi))))
    ex = _expand(bc, rows)
    return Spectrum(dom, bc, lambda_max, ex["m"], ex["k"], ex["nu"], ex["lam"], ex["norm"], ex["parity"])


def build_spectrum(domain: DomainModel, bc, lambda_max: float, threads: int = 1) -> Spectrum:
    if isinstance(domain, Annulus):
        return annulus_spectrum(bc, domain.r_inner, domain.r_outer, lambda_max, threads)
    if isinstance(domain, SphereCapComplement):
        return cap_spectrum(bc, domain.cap_radius, lambda_max, threads)
    raise TypeError(f"no separable spectrum for {domain!r}")


def cached_spectrum(domain: DomainModel, bc, lambda_max: float, cache_dir=None, threads: int = 1) -> Spectrum:
    """Build or reuse a spectrum; a stale schema version triggers a rebuild."""
    if cache_dir is None:
        return build_spectrum(domain, bc, lambda_max, threads)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"spectrum-{cache_key(domain, bc, lambda_max)}.json"
    if path.exists():
        try:
            return load_spectrum(path)
        except (ValueError, KeyError):
            pass
    spec = build_spectrum(domain, bc, lambda_max, threads)
    save_spectrum(spec, path)
    return spec


# ----------------------------------------------------------------------------
# closed-form hemisphere zonal modes


@dataclass(frozen=True)
class ZonalMode:
    """Neumann hemisphere mode ``sqrt(2) Y_l^0`` with axis through the rim point ``q0``."""

    l: int
    axis_coord: float = 0.0
    bc: BC = BC.NEUMANN

    @property
    def lam(self) -> float:
        return math.sqrt(self.l * (self.l + 1.0))

    @property
    def amplitude(self) -> float:
        return math.sqrt(2.0) * math.sqrt((2 * self.l + 1) / (4.0 * math.pi))

    def value(self, xyz):
        xyz = np.asarray(xyz, dtype=float)
        axis = np.array([math.cos(self.axis_coord), math.sin(self.axis_coord), 0.0])
        return self.amplitude * special.eval_legendre(self.l, np.clip(xyz @ axis, -1.0, 1.0))

    def trace(self, phi):
        return self.amplitude * special.eval_legendre(self.l, np.cos(np.asarray(phi) - self.axis_coord))


def hemisphere_zonal_mode(l: int, axis_coord: float = 0.0) -> ZonalMode:
    if l < 2 or l % 2:
        raise ValueError("zonal mode degree must be even and >= 2")
    return ZonalMode(int(l), axis_coord)
