"""Billiard (broken geodesic) flow, boundary returns and loop-direction measures.

All propagation is event driven with closed-form intersections:

* annulus: line/circle quadratics,
* Sinai torus: straight flight across unit cells of the square lattice, with
  the obstacle at the centre of each cell,
* cap complement: great circles ``x cos t + v sin t`` whose height is
  ``A cos(t - t0)``; the rim ``z = cos r`` is crossed upward at
  ``t = (t0 - arccos(cos r / A)) mod 2 pi``.

Grazing events (discriminant below ``GRAZE_TOL``) are never perturbed: the
sample is flagged as discarded. So is a whispering-gallery sample that needs
more than ``_MAX_EVENTS`` reflections within the horizon.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .domains import (
    TWO_PI,
    Annulus,
    BoundaryCovector,
    BoundaryPoint,
    DomainModel,
    SinaiTorus,
    SphereCapComplement,
    boundary_frame,
)

GRAZE_TOL = 1e-12
CHUNK = 8192
_MAX_EVENTS = 20_000  # reflections per trajectory


class TangencyDegeneracy(RuntimeError):
    """Trajectory grazes a boundary circle; continuation is ill-conditioned."""


# ----------------------------------------------------------------------------
# per-model kernels; all take arrays of shape (n, d)


def _rows_dot(a, b):
    return np.einsum("ij,ij->i", a, b)


class _PlanarKernel:
    def free(self, p, v, t):
        return p + t[:, None] * v, v


class _AnnulusKernel(_PlanarKernel):
    def __init__(self, dom: Annulus):
        self.r = (dom.r_inner, dom.r_outer)

    def next_hit(self, p, v, comp, t_left):
        n = p.shape[0]
        b = _rows_dot(p, v)
        pp = _rows_dot(p, p)
        t = np.full(n, np.inf)
        hit_comp = np.full(n, -1)
        graze = np.zeros(n, bool)
        # inner circle: approaching only when b < 0
        c1 = pp - self.r[0] ** 2
        d1 = b * b - c1
        approach = (b < 0) & (comp != 0)
        graze |= approach & (np.abs(d1) < GRAZE_TOL)
        ok1 = approach & (d1 >= GRAZE_TOL)
        t1 = np.where(ok1, -b - np.sqrt(np.where(ok1, d1, 0.0)), np.inf)
        # outer circle: always hit from inside unless we sit on it moving outward
        c2 = pp - self.r[1] ** 2
        d2 = np.maximum(b * b - c2, 0.0)
        t2 = -b + np.sqrt(d2)
        t2 = np.where((comp == 1) & (b >= 0), np.inf, t2)
        t2 = np.where(t2 <= 0, np.inf, t2)
        use1 = t1 <= t2
        t = np.where(use1, t1, t2)
        hit_comp = np.where(use1, 0, 1)
        hit = (t <= t_left) & ~graze
        tt = np.where(hit, t, t_left)
        q, w = self.free(p, v, tt)
        rad = np.where(hit_comp == 0, self.r[0], self.r[1])
        norm = np.sqrt(_rows_dot(q, q))
        q = np.where(hit[:, None], q * (rad / norm)[:, None], q)
        return tt, q, w, hit, np.where(hit, hit_comp, -1), graze

    def frame(self, p, comp):
        phi = np.arctan2(p[:, 1], p[:, 0])
        tan = np.stack([-np.sin(phi), np.cos(phi)], axis=1)
        out = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        nrm = np.where((comp == 0)[:, None], out, -out)
        return np.mod(phi, TWO_PI), tan, nrm


class _SinaiKernel(_PlanarKernel):
    def __init__(self, dom: SinaiTorus):
        self.L = dom.side
        self.a = dom.obstacle_radius

    def next_hit(self, p, v, comp, t_left):
        n = p.shape[0]
        h = 0.5 * self.L
        p = p.copy()
        left = t_left.astype(float).copy()
        spent = np.zeros(n)
        hit = np.zeros(n, bool)
        graze = np.zeros(n, bool)
        active = np.ones(n, bool)
        on_obstacle = comp == 0
        while active.any():
            idx = np.nonzero(active)[0]
            q = p[idx]
            w = v[idx]
            b = _rows_dot(q, w)
            c = _rows_dot(q, q) - self.a**2
            disc = b * b - c
            appr = (b < 0) & ~on_obstacle[idx]
            gz = appr & (np.abs(disc) < GRAZE_TOL)
            ok = appr & (disc >= GRAZE_TOL)
            th = np.where(ok, -b - np.sqrt(np.where(ok, disc, 0.0)), np.inf)
            with np.errstate(divide="ignore", invalid="ignore"):
                tx = np.where(w[:, 0] != 0, (np.sign(w[:, 0]) * h - q[:, 0]) / w[:, 0], np.inf)
                ty = np.where(w[:, 1] != 0, (np.sign(w[:, 1]) * h - q[:, 1]) / w[:, 1], np.inf)
            te = np.minimum(tx, ty)
            lf = left[idx]
            done_hit = (th <= lf) & ~gz
            done_free = ~done_hit & ~gz & (te >= lf)
            wrap = ~done_hit & ~done_free & ~gz
            graze[idx[gz]] = True
            # obstacle hits
            j = idx[done_hit]
            p[j] = q[done_hit] + th[done_hit, None] * w[done_hit]
            p[j] *= (self.a / np.sqrt(_rows_dot(p[j], p[j])))[:, None]
            spent[j] += th[done_hit]
            hit[j] = True
            # flight ends inside this cell
            j = idx[done_free]
            p[j] = q[done_free] + lf[done_free, None] * w[done_free]
            spent[j] += lf[done_free]
            # wrap through a cell wall
            j = idx[wrap]
            te_w = te[wrap]
            qn = q[wrap] + te_w[:, None] * w[wrap]
            wx = tx[wrap] <= te_w
            wy = ty[wrap] <= te_w
            qn[wx, 0] = -np.sign(w[wrap][wx, 0]) * h
            qn[wy, 1] = -np.sign(w[wrap][wy, 1]) * h
            p[j] = qn
            spent[j] += te_w
            left[j] -= te_w
            on_obstacle[j] = False
            active[idx[done_hit | done_free | gz]] = False
        return spent, p, v, hit, np.where(hit, 0, -1), graze

    def frame(self, p, comp):
        phi = np.arctan2(p[:, 1], p[:, 0])
        tan = np.stack([-np.sin(phi), np.cos(phi)], axis=1)
        nrm = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        return np.mod(phi, TWO_PI), tan, nrm


class _SphereKernel:
    def __init__(self, dom: SphereCapComplement):
        self.r = dom.cap_radius
        self.c = math.cos(dom.cap_radius)
        self.s = math.sin(dom.cap_radius)

    def free(self, p, v, t):
        ct, st = np.cos(t)[:, None], np.sin(t)[:, None]
        return p * ct + v * st, -p * st + v * ct

    def next_hit(self, p, v, comp, t_left):
        A = np.hypot(p[:, 2], v[:, 2])
        t0 = np.arctan2(v[:, 2], p[:, 2])
        graze = np.abs(A - self.c) < GRAZE_TOL
        reach = (A > self.c) & ~graze
        alpha = np.arccos(np.clip(self.c / np.where(reach, A, 1.0), -1.0, 1.0))
        t = np.where(reach, np.mod(t0 - alpha, TWO_PI), np.inf)
        hit = (t <= t_left) & reach
        tt = np.where(hit, t, t_left)
        q, w = self.free(p, v, tt)
        # snap exactly onto the rim and restore tangency/unit speed
        qh = q[hit]
        rho = np.hypot(qh[:, 0], qh[:, 1])
        qh[:, 0] *= self.s / rho
        qh[:, 1] *= self.s / rho
        qh[:, 2] = self.c
        q[hit] = qh
        wh = w[hit]
        wh -= _rows_dot(wh, qh)[:, None] * qh
        wh /= np.sqrt(_rows_dot(wh, wh))[:, None]
        w[hit] = wh
        return tt, q, w, hit, np.where(hit, 0, -1), graze

    def frame(self, p, comp):
        phi = np.arctan2(p[:, 1], p[:, 0])
        tan = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=1)
        ez = np.array([0.0, 0.0, 1.0])
        nrm = (p * self.c - ez) / self.s
        return np.mod(phi, TWO_PI), tan, nrm


def _kernel(domain: DomainModel):
    if isinstance(domain, Annulus):
        return _AnnulusKernel(domain)
    if isinstance(domain, SinaiTorus):
        return _SinaiKernel(domain)
    if isinstance(domain, SphereCapComplement):
        return _SphereKernel(domain)
    raise TypeError(f"unsupported domain {domain!r}")


def _reflect(v, nrm):
    return v - 2.0 * _rows_dot(v, nrm)[:, None] * nrm


# ----------------------------------------------------------------------------
# flow


@dataclass
class FlowState:
    position: np.ndarray
    direction: np.ndarray
    component: int = -1  # boundary component the state sits on, -1 if interior


def _run(domain, p, v, comp, horizon, record: bool):
    """Propagate arrays of states for ``horizon``; optionally record every boundary hit."""
    ker = _kernel(domain)
    n = p.shape[0]
    p = np.array(p, dtype=float)
    v = np.array(v, dtype=float)
    comp = np.array(comp, dtype=int)
    clock = np.zeros(n)
    active = np.ones(n, bool)
    discarded = np.zeros(n, bool)
    rec = ([], [], [], [], [])
    events = 0
    while active.any():
        events += 1
        if events > _MAX_EVENTS:
            discarded |= active
            break
        idx = np.nonzero(active)[0]
        left = horizon[idx] - clock[idx]
        dt, q, w, hit, hcomp, gz = ker.next_hit(p[idx], v[idx], comp[idx], left)
        discarded[idx[gz]] = True
        clock[idx] += dt
        phi, tan, nrm = ker.frame(q, hcomp)
        eta = _rows_dot(w, tan)
        w = np.where(hit[:, None], _reflect(w, nrm), w)
        p[idx] = q
        v[idx] = w
        comp[idx] = np.where(hit, hcomp, np.where(dt > 0, -1, comp[idx]))
        if record:
            ok = hit & ~gz
            j = idx[ok]
            for lst, val in zip(rec, (j, clock[j], hcomp[ok], phi[ok], eta[ok])):
                lst.append(val)
        active[idx[~hit | gz]] = False
    if record:
        rec = tuple(np.concatenate(r) if r else np.empty(0) for r in rec)
        order = np.argsort(rec[0], kind="stable")  # by sample, then event order
        rec = tuple(r[order] for r in rec)
        rec = (rec[0].astype(int), rec[1], rec[2].astype(int), rec[3], rec[4])
    return p, v, comp, discarded, rec


def flow(domain: DomainModel, state: FlowState, t: float, strict: bool = True) -> FlowState:
    """Propagate one state for time ``t >= 0`` along the broken geodesic flow."""
    if t < 0:
        raise ValueError("time must be non-negative")
    p = np.asarray(state.position, dtype=float)[None, :]
    v = np.asarray(state.direction, dtype=float)[None, :]
    p2, v2, c2, disc, _ = _run(domain, p, v, [state.component], np.array([float(t)]), False)
    if disc[0] and strict:
        raise TangencyDegeneracy("trajectory grazes the boundary")
    return FlowState(p2[0], v2[0], int(c2[0]))


def flow_many(domain: DomainModel, positions, directions, t, components=None):
    """Vectorized flow; returns positions, directions, components and a grazing mask."""
    p = np.atleast_2d(np.asarray(positions, dtype=float))
    v = np.atleast_2d(np.asarray(directions, dtype=float))
    comp = np.full(p.shape[0], -1) if components is None else np.asarray(components)
    horizon = np.broadcast_to(np.asarray(t, dtype=float), (p.shape[0],)).copy()
    p2, v2, c2, disc, _ = _run(domain, p, v, comp, horizon, False)
    return p2, v2, c2, disc


def launch_state(domain: DomainModel, covector: BoundaryCovector) -> FlowState:
    """Inward unit direction with tangential component ``eta`` (|eta| < 1)."""
    if abs(covector.eta) >= 1:
        raise ValueError("launch needs |eta| < 1")
    pos, tan, nrm = boundary_frame(domain, covector.at)
    eta = covector.eta
    d = math.sqrt(1.0 - eta * eta) * nrm + eta * tan
    return FlowState(pos, d, covector.at.component)


# ----------------------------------------------------------------------------
# loop scan


@dataclass
class LoopRecord:
    launch: BoundaryCovector
    returns: list  # (time, BoundaryPoint, tangential eta)
    horizon: float


@dataclass
class FocalityEstimate:
    at: BoundaryPoint
    horizon: float
    sample_count: int
    loop_measure: float
    position_tolerance: float
    ci_halfwidth: float
    discarded: int = 0
    discard_fraction: float = 0.0
    loop_count: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["at"] = {"component": self.at.component, "coord": self.at.coord}
        return d


@dataclass
class LoopScan:
    """Scan result; boundary hits are stored flat, grouped by sample in time order."""

    estimate: FocalityEstimate
    psi: np.ndarray  # launch angle from the inward normal
    eta: np.ndarray
    is_loop: np.ndarray
    first_loop_time: np.ndarray  # nan if no loop
    discarded: np.ndarray
    hit_sample: np.ndarray
    hit_time: np.ndarray
    hit_component: np.ndarray
    hit_coord: np.ndarray
    hit_eta: np.ndarray
    q: BoundaryPoint = field(default=None)

    def _span(self, i):
        a = np.searchsorted(self.hit_sample, i, side="left")
        b = np.searchsorted(self.hit_sample, i, side="right")
        return a, b

    def returns(self, i: int) -> list:
        a, b = self._span(i)
        return [
            (float(self.hit_time[k]), BoundaryPoint(int(self.hit_component[k]), float(self.hit_coord[k])),
             float(self.hit_eta[k]))
            for k in range(a, b)
        ]

    def records(self, only_loops: bool = False) -> list[LoopRecord]:
        out = []
        for i in range(self.psi.size):
            if only_loops and not self.is_loop[i]:
                continue
            out.append(LoopRecord(BoundaryCovector(self.q, float(self.eta[i])), self.returns(i), self.estimate.horizon))
        return out

    def write_csv(self, path, only_loops: bool = False) -> None:
        rows = [i for i in range(self.psi.size) if not only_loops or self.is_loop[i]]
        counts = [self._span(i)[1] - self._span(i)[0] for i in rows]
        kmax = max(counts, default=0)
        header = ["sample_id", "eta"]
        for k in range(1, kmax + 1):
            header += [f"return_time_{k}", f"return_coord_{k}", f"return_eta_{k}"]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for i in rows:
                a, b = self._span(i)
                row = [i, repr(float(self.eta[i]))]
                for k in range(a, b):
                    row += [repr(float(self.hit_time[k])), repr(float(self.hit_coord[k])), repr(float(self.hit_eta[k]))]
                row += [""] * (3 * kmax + 2 - len(row))
                wr.writerow(row)

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.estimate.to_dict(), fh, indent=2, sort_keys=True)


def sample_directions(n: int, seed) -> np.ndarray:
    """Stratified launch angles in (-pi/2, pi/2) with one jittered point per stratum."""
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    return -0.5 * math.pi + math.pi * (np.arange(n) + u) / n


def _scan_chunk(domain, q, psi, T):
    pos, tan, nrm = boundary_frame(domain, q)
    d = np.cos(psi)[:, None] * nrm[None, :] + np.sin(psi)[:, None] * tan[None, :]
    p = np.broadcast_to(pos, d.shape).copy()
    comp = np.full(psi.size, q.component)
    horizon = np.full(psi.size, float(T))
    _, _, _, disc, rec = _run(domain, p, d, comp, horizon, True)
    return disc, rec


def loop_scan(
    domain: DomainModel,
    q: BoundaryPoint,
    T: float,
    N: int,
    delta: float,
    seed,
    threads: int = 1,
    min_samples: int = 1000,
) -> LoopScan:
    """Sample N inward directions at q and detect returns within delta (arc length) by time T.

    Samples are processed in fixed chunks of ``CHUNK`` and reassembled in
    sample order, so the result does not depend on ``threads``.
    """
    if T <= 0 or delta <= 0:
        raise ValueError("need T > 0 and delta > 0")
    if N < min_samples:
        raise ValueError(f"need N >= {min_samples}")
    psi = sample_directions(N, seed)
    starts = list(range(0, N, CHUNK))
    chunks = [psi[i : i + CHUNK] for i in starts]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda ch: _scan_chunk(domain, q, ch, T), chunks))
    else:
        parts = [_scan_chunk(domain, q, ch, T) for ch in chunks]
    disc = np.concatenate([pt[0] for pt in parts])
    rec = [np.concatenate([pt[1][f] + (off if f == 0 else 0) for pt, off in zip(parts, starts)]) for f in range(5)]
    return _summarize(domain, q, psi, T, delta, disc, rec)


def _summarize(domain, q, psi, T, delta, disc, rec) -> LoopScan:
    row, t, c, ph, et = rec
    rb = domain.boundary_radius(q.component)
    dphi = np.abs(np.mod(ph - q.coord + math.pi, TWO_PI) - math.pi)
    # a return before 2 delta is a near-tangent launch chord landing inside the window
    close = (c == q.component) & (rb * dphi <= delta) & (t <= T) & (t > 2.0 * delta) & ~disc[row]
    first = np.full(psi.size, np.inf)
    np.minimum.at(first, row[close], t[close])
    is_loop = np.isfinite(first)
    first = np.where(is_loop, first, np.nan)
    n_eff = int(psi.size - disc.sum())
    loops = int(is_loop.sum())
    meas = loops / n_eff if n_eff else float("nan")
    ci = 1.96 * math.sqrt(max(meas * (1 - meas), 0.0) / n_eff) if n_eff else float("nan")
    est = FocalityEstimate(
        at=q,
        horizon=float(T),
        sample_count=int(psi.size),
        loop_measure=float(meas),
        position_tolerance=float(delta),
        ci_halfwidth=float(ci),
        discarded=int(disc.sum()),
        discard_fraction=float(disc.mean()),
        loop_count=loops,
    )
    return LoopScan(est, psi, np.sin(psi), is_loop, first, disc, row, t, c, ph, et, q)


def min_loop_length(domain: DomainModel, q_grid, T_cap: float, N: int = 20_000, delta: float = 1e-3, seed=0):
    """Shortest detected first-return time over the given rim points, or None."""
    best = math.inf
    for q in q_grid:
        scan = loop_scan(domain, q, T_cap, N, delta, seed)
        if np.any(scan.is_loop):
            best = min(best, float(np.nanmin(scan.first_loop_time)))
    return None if not math.isfinite(best) else best


# ----------------------------------------------------------------------------
# closed-form oracle for the cap complement (rotation invariant, so the
# tangential momentum is conserved and every bounce is identical)


def cap_bounce(r: float, psi):
    """Bounce time and azimuth advance (mod 2 pi) for launch angle ``psi``."""
    psi = np.asarray(psi, dtype=float)
    c, s = math.cos(r), math.sin(r)
    A = np.sqrt(c * c + (np.cos(psi) * s) ** 2)
    alpha = np.arccos(np.clip(c / A, -1.0, 1.0))
    tb = TWO_PI - 2.0 * alpha
    X = s * np.cos(tb) + np.cos(psi) * c * np.sin(tb)
    Y = np.sin(psi) * np.sin(tb)
    return tb, np.mod(np.arctan2(Y, X), TWO_PI)


def cap_loop_measure_oracle(r: float, T: float, delta: float, grid: int = 2_000_000) -> float:
    """Fraction of launch angles returning within ``delta`` of the launch point by time ``T``."""
    psi = -0.5 * math.pi + math.pi * (np.arange(grid) + 0.5) / grid
    tb, dphi = cap_bounce(r, psi)
    s = math.sin(r)
    loop = np.zeros(grid, bool)
    kmax = int(T // tb.min()) if tb.min() > 0 else 0
    for k in range(1, kmax + 1):
        ang = np.mod(k * dphi, TWO_PI)
        dist = s * np.minimum(ang, TWO_PI - ang)
        loop |= (k * tb <= T) & (dist <= delta)
    return float(loop.mean())


def cap_avoiding_band(r: float) -> float:
    """Measure of inward directions at a rim point whose great circle misses the cap.

    A transversal great circle through a rim point enters the cap unless the
    rim is itself a great circle, so the band is all directions at r = pi/2
    and empty for r < pi/2.
    """
    return 1.0 if abs(r - math.pi / 2) < 1e-15 else 0.0
