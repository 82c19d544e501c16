"""Command-line runner.

    boundary-weyl {spectrum,weyl,microlocal,billiard,wavetrace,supnorm,all} --config cfg.json [--out DIR]
    boundary-weyl --compare A B [--tol X] [--rtol Y]

Every artifact is CSV (series) or JSON (scalars and fits), written with
sorted keys and ``repr`` floats. ``manifest.json`` lists each artifact with its
module, operation and sha256 next to the config hash; wall-clock timings go to
``timings.json`` so that the manifest stays bit-identical across reruns.
Exit codes: 0 ok, 1 validation, 2 tolerance breach, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .billiard import cap_loop_measure_oracle, loop_scan, min_loop_length
from .config import ConfigError, ExperimentConfig, load_config
from .domains import BoundaryPoint, SinaiTorus, SphereCapComplement, total_boundary_length
from .eigensolver import BC, cached_spectrum, hemisphere_zonal_mode
from .microlocal import (
    bump_symbol,
    glancing_band,
    glancing_slope,
    hyperbolic_indicator,
    plateau_symbol,
    spectrum_eta,
    windows_sum,
)
from .spectral import (
    IllConditionedFitError,
    TAIL_TOL,
    SmoothingKernel,
    TailTruncationWarning,
    UnderResolvedGridError,
    cluster_jumps,
    envelope,
    half_space_constant,
    local_maxima,
    pi_b,
    power_fit,
    smoothed_density,
    supnorm_scan,
    two_term_fit,
    wave_trace,
    zonal_ratio_limit,
)

log = logging.getLogger("boundary_weyl")

SUBCOMMANDS = ("spectrum", "weyl", "microlocal", "billiard", "wavetrace", "supnorm", "all")
SPECTRAL = ("spectrum", "weyl", "microlocal", "wavetrace", "supnorm")
MANIFEST_SCHEMA = 1
ENVELOPE_START = 30.0
ENVELOPE_WIDTH = 10.0

EXIT_OK, EXIT_VALIDATION, EXIT_TOLERANCE, EXIT_INTERNAL = 0, 1, 2, 3


class SchemaMismatch(ValueError):
    pass


# ----------------------------------------------------------------------------
# writing


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


class Run:
    """Output directory plus the manifest being assembled."""

    def __init__(self, cfg: ExperimentConfig, threads: int):
        self.cfg = cfg
        self.threads = threads
        self.out = Path(cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.artifacts: list[dict] = []
        self.timings: dict[str, float] = {}
        self.skipped: dict[str, str] = {}
        self._spec = None

    def _record(self, name: str, module: str, op: str) -> None:
        digest = hashlib.sha256((self.out / name).read_bytes()).hexdigest()
        self.artifacts.append({"file": name, "module": module, "operation": op, "sha256": digest})

    def json(self, name: str, data, module: str, op: str) -> None:
        (self.out / name).write_text(json.dumps(_clean(data), sort_keys=True, indent=1) + "\n")
        self._record(name, module, op)

    def csv(self, name: str, header, columns, module: str, op: str) -> None:
        with open(self.out / name, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for row in zip(*columns):
                wr.writerow([_fmt(v) for v in row])
        self._record(name, module, op)

    def spectrum(self):
        if self._spec is None:
            c = self.cfg
            if isinstance(c.domain, SinaiTorus):
                raise ConfigError("domain.kind: the sinai model has no separable spectrum")
            cache = c.cache_dir if c.cache_dir is not None else self.out / "cache"
            self._spec = cached_spectrum(c.domain, c.bc, c.lambda_max, cache, self.threads)
        return self._spec

    def rims(self):
        return [BoundaryPoint(c, x) for c, x in self.cfg.rim_points]

    def manifest(self, subcommand: str) -> None:
        data = {
            "manifest_schema": MANIFEST_SCHEMA,
            "code_version": __version__,
            "config_hash": self.cfg.config_hash(),
            "config": self.cfg.canonical(),
            "subcommand": subcommand,
            "artifacts": self.artifacts,
            "skipped": self.skipped,
        }
        (self.out / "manifest.json").write_text(json.dumps(_clean(data), sort_keys=True, indent=1) + "\n")
        (self.out / "timings.json").write_text(json.dumps(self.timings, sort_keys=True, indent=1) + "\n")


# ----------------------------------------------------------------------------
# subcommands


def _weyl_window(cfg, spec):
    return cfg.weyl_window or (0.4 * spec.lambda_max, spec.lambda_max)


def run_spectrum(run: Run) -> None:
    spec = run.spectrum()
    run.json("spectrum.json", spec.to_dict(), "eigensolver", "build_spectrum")
    dom = spec.domain
    area = dom.area()
    L = total_boundary_length(dom)
    lam = np.linspace(0.5 * spec.lambda_max, spec.lambda_max, 400)
    excess = (spec.counting(lam) - area * lam**2 / (4 * math.pi)) / lam
    sign = -1.0 if spec.bc == BC.DIRICHLET else 1.0
    summary = {
        "mode_count": len(spec),
        "lambda_max": spec.lambda_max,
        "lambda_min": float(spec.lam[0]) if len(spec) else None,
        "area": area,
        "boundary_length": L,
        "weyl_boundary_term": {
            "measured_mean": float(np.mean(excess)),
            "predicted": sign * L / (4 * math.pi),
            "max_abs": float(np.max(np.abs(excess))),
        },
        "audit": "passed",
    }
    run.json("spectrum_summary.json", summary, "eigensolver", "sturm_audit")


def run_weyl(run: Run) -> None:
    cfg, spec = run.cfg, run.spectrum()
    rims = run.rims()
    lam = np.linspace(0.0, spec.lambda_max, int(round(2 * spec.lambda_max)) + 1)
    window = _weyl_window(cfg, spec)
    cols, header, fits = [lam], ["lam"], []
    for i, q in enumerate(rims):
        y = pi_b(spec, q, lam)
        entry = {"q": {"component": q.component, "coord": q.coord}}
        try:
            fit = two_term_fit(spec, q, window)
            entry.update(fit.to_dict())
            rem = y - fit.leading_coeff * lam**2
            sel = lam >= window[0]
            entry["remainder_over_lambda_max"] = float(np.max(np.abs(rem[sel]) / lam[sel]))
        except IllConditionedFitError as exc:
            entry["status"] = f"fit skipped: {exc}"
            rem = np.full(lam.size, math.nan)
        fits.append(entry)
        cols += [y, rem]
        header += [f"pi_b_{i}", f"remainder_{i}"]
    run.csv("weyl_pi_b.csv", header, cols, "spectral", "pi_b")
    oracle = {
        "half_space": half_space_constant(spec.bc),
        "omega_n_over_2pi_n": 1.0 / (4 * math.pi),
    }
    run.json("weyl_fit.json", {"fits": fits, "oracles": oracle, "window": list(window)}, "spectral", "two_term_fit")

    # smoothed density on the range where the unseen tail is negligible
    kernel = SmoothingKernel(cfg.kernel.T, cfg.kernel.shape)
    margin = 0.0
    while kernel.tail_mass(margin) > 0.1 * TAIL_TOL and margin < spec.lambda_max:
        margin += 0.5
    lo = 10.0
    hi = spec.lambda_max - margin
    dens = {"T": cfg.kernel.T, "shape": cfg.kernel.shape, "range": [lo, hi], "tail_margin": margin}
    if hi > lo and len(spec):
        grid = np.arange(lo, hi + 1e-9, 0.5)
        cols, header = [grid], ["lam"]
        exps = []
        for i, q in enumerate(rims):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TailTruncationWarning)
                s = smoothed_density(spec, q, grid, kernel)
            cols.append(s)
            header.append(f"density_{i}")
            sel = grid >= window[0]
            if sel.sum() >= 3 and np.all(s[sel] > 0):
                exps.append(power_fit(grid[sel], s[sel])[0])
            else:
                exps.append(None)
        run.csv("smoothed_density.csv", header, cols, "spectral", "smoothed_density")
        dens["exponent"] = exps
    else:
        dens["status"] = "range empty"
    run.json("smoothed_density.json", dens, "spectral", "smoothed_density")

    cl_lam, cols, header, jmax = None, [], [], []
    for i, q in enumerate(rims):
        cl_lam, j = cluster_jumps(spec, q)
        cols.append(j)
        header.append(f"jump_{i}")
        pos = cl_lam > 0
        jmax.append(float(np.max(j[pos] / cl_lam[pos])) if pos.any() else None)
    if cl_lam is not None:
        run.csv("jumps.csv", ["lam"] + header, [cl_lam] + cols, "spectral", "cluster_jumps")
    run.json("jumps.json", {"max_jump_over_lambda": jmax}, "spectral", "cluster_jumps")


def _symbols(eps):
    return [bump_symbol(0.0, 0.5, eps), bump_symbol(0.3, 0.4, eps), plateau_symbol(0.6, 0.8, eps)]


def run_microlocal(run: Run) -> None:
    cfg, spec = run.cfg, run.spectrum()
    eps = cfg.filter.eps
    lo, hi = cfg.filter.window or (0.5 * spec.lambda_max, spec.lambda_max)
    base = hyperbolic_indicator(eps)
    syms = _symbols(eps)
    rows = {k: [] for k in ("q", "label", "l2_mass", "l2_mass_weighted", "window_sum", "ratio",
                            "predicted", "predicted_weighted")}
    summary = []
    for i, q in enumerate(run.rims()):
        wgt = (lambda e: 1.0 / np.sqrt(1.0 - e * e)) if spec.bc == BC.NEUMANN else (lambda e: np.sqrt(1.0 - e * e))
        b = windows_sum(spec, base, q, lo, hi)
        bm, bw = base.l2_mass(), base.l2_mass(weight=wgt)
        for f in syms:
            s = windows_sum(spec, f, q, lo, hi)
            m, mw = f.l2_mass(), f.l2_mass(weight=wgt)
            for k, v in zip(rows, (i, f.label, m, mw, s, s / b, m / bm, mw / bw)):
                rows[k].append(v)
        eta = np.abs(spectrum_eta(spec, q.component))
        sel = (spec.lam >= lo) & (spec.lam < hi)
        w = spec.traces(q)[sel] ** 2
        ell = float(w[eta[sel] > 1.0 + eps].sum() / w.sum()) if w.sum() > 0 else None
        fit = glancing_slope(spec, q, list(cfg.filter.eps_list), lo, hi)
        summary.append({
            "q": {"component": q.component, "coord": q.coord},
            "baseline_window_sum": b,
            "elliptic_fraction": ell,
            "glancing": {"eps": fit.x, "mass": fit.y, "slope": fit.slope,
                         "relative_residual": fit.relative_residual},
        })
    run.csv("microlocal_symbols.csv", list(rows), list(rows.values()), "microlocal", "windows_sum")
    run.json("microlocal.json", {"window": [lo, hi], "eps": eps, "rims": summary,
                                 "band_profile": glancing_band(eps).to_dict(samples=21)},
             "microlocal", "glancing_slope")


def run_billiard(run: Run) -> None:
    cfg = run.cfg
    b = cfg.billiard
    out = []
    for i, q in enumerate(run.rims()):
        scan = loop_scan(cfg.domain, q, b.T, b.N, b.delta, b.seed, threads=run.threads)
        run.csv(f"billiard_samples_{i}.csv", ["sample_id", "psi", "eta", "is_loop", "first_loop_time", "discarded"],
                [np.arange(scan.psi.size), scan.psi, scan.eta, scan.is_loop.astype(int), scan.first_loop_time,
                 scan.discarded.astype(int)], "billiard", "loop_scan")
        scan.write_csv(run.out / f"billiard_loops_{i}.csv", only_loops=True)
        run._record(f"billiard_loops_{i}.csv", "billiard", "loop_scan")
        entry = scan.estimate.to_dict()
        if scan.is_loop.any():
            entry["min_loop_time"] = float(np.nanmin(scan.first_loop_time))
        if isinstance(cfg.domain, SphereCapComplement):
            entry["closed_form_measure"] = cap_loop_measure_oracle(cfg.domain.cap_radius, b.T, b.delta)
        out.append(entry)
    run.json("billiard.json", {"estimates": out, "seed": b.seed}, "billiard", "loop_scan")


def run_wavetrace(run: Run) -> None:
    cfg, spec = run.cfg, run.spectrum()
    w = cfg.wave
    t = np.round(np.arange(0.0, w.t_max + 0.5 * w.dt, w.dt), 12)
    cols, header, peaks = [t], ["t"], []
    for i, q in enumerate(run.rims()):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TailTruncationWarning)
            y = wave_trace(spec, q, t, w.sigma)
        cols.append(y)
        header.append(f"trace_{i}")
        ell = min_loop_length(cfg.domain, [q], w.t_max, N=20_000, delta=1e-3, seed=cfg.billiard.seed)
        tm, ym = local_maxima(t, np.abs(y))
        keep = ym >= 0.01 * abs(y[0])
        entry = {"q": {"component": q.component, "coord": q.coord}, "peak_at_zero": float(y[0]),
                 "loop_length": ell, "local_maxima": np.stack([tm[keep], ym[keep]], axis=1).tolist()}
        if ell is not None and ell > 0.6:
            mid = (t > 0.3) & (t < ell - 0.3)
            entry["midrange_fraction"] = float(np.max(np.abs(y[mid])) / abs(y[0])) if mid.any() else None
        peaks.append(entry)
    run.csv("wavetrace.csv", header, cols, "spectral", "wave_trace")
    run.json("wavetrace.json", {"sigma": w.sigma, "rims": peaks}, "spectral", "wave_trace")


def run_supnorm(run: Run) -> None:
    cfg, spec = run.cfg, run.spectrum()
    grid = 2 * math.pi * np.arange(cfg.boundary_grid) / cfg.boundary_grid
    comps = sorted({q.component for q in run.rims()})
    lam_all, ratio_all, cols = [], [], {k: [] for k in ("component", "lam", "sup_trace", "ratio", "argmax")}
    for c in comps:
        rows = supnorm_scan(spec, grid, component=c)
        for r in rows:
            for k, v in zip(cols, (c, r.lam, r.sup_trace, r.ratio, r.argmax)):
                cols[k].append(v)
        lam_all += [r.lam for r in rows]
        ratio_all += [r.ratio for r in rows]
    run.csv("supnorm.csv", list(cols), list(cols.values()), "spectral", "supnorm_scan")
    summary = {"envelope_bins": [ENVELOPE_START, spec.lambda_max, ENVELOPE_WIDTH]}
    dom = spec.domain
    if isinstance(dom, SphereCapComplement) and abs(dom.cap_radius - math.pi / 2) < 1e-12 and spec.bc == BC.NEUMANN:
        ls = [l for l in range(2, int(spec.lambda_max) + 2, 2) if math.sqrt(l * (l + 1)) <= spec.lambda_max]
        zonal = [hemisphere_zonal_mode(l) for l in ls]
        zgrid = 2 * math.pi * np.arange(max(cfg.boundary_grid, 8 * max(ls, default=1))) / max(
            cfg.boundary_grid, 8 * max(ls, default=1))
        zr = supnorm_scan(zonal, zgrid)
        run.csv("zonal_supnorm.csv", ["l", "lam", "sup_trace", "ratio"],
                [ls, [r.lam for r in zr], [r.sup_trace for r in zr], [r.ratio for r in zr]],
                "spectral", "supnorm_scan")
        ratios = np.array([r.ratio for r in zr])
        tail = ratios[-max(1, len(ratios) // 4):]
        summary["zonal"] = {"tail_mean": float(tail.mean()), "baseline": zonal_ratio_limit(),
                            "relative_deviation": float(abs(tail.mean() / zonal_ratio_limit() - 1.0))}
        lam_all += [r.lam for r in zr]
        ratio_all += [r.ratio for r in zr]
    centers, maxima = envelope(lam_all, ratio_all, ENVELOPE_START, spec.lambda_max, ENVELOPE_WIDTH)
    run.csv("supnorm_envelope.csv", ["lam", "envelope"], [centers, maxima], "spectral", "envelope")
    if centers.size >= 2:
        summary["envelope_slope"] = power_fit(centers, maxima)[0]
    summary["envelope_max"] = float(maxima.max()) if maxima.size else None
    summary["hemisphere_limit"] = zonal_ratio_limit()
    run.json("supnorm.json", summary, "spectral", "supnorm_scan")


RUNNERS = {
    "spectrum": run_spectrum,
    "weyl": run_weyl,
    "microlocal": run_microlocal,
    "billiard": run_billiard,
    "wavetrace": run_wavetrace,
    "supnorm": run_supnorm,
}


def execute(subcommand: str, cfg: ExperimentConfig, threads: int = 1) -> Run:
    run = Run(cfg, threads)
    todo = list(RUNNERS) if subcommand == "all" else [subcommand]
    sinai = isinstance(cfg.domain, SinaiTorus)
    for name in todo:
        if sinai and name in SPECTRAL:
            if subcommand != "all":
                raise ConfigError("domain.kind: the sinai model has no separable spectrum")
            run.skipped[name] = "no separable spectrum"
            continue
        t0 = time.perf_counter()
        log.info("running %s", name)
        RUNNERS[name](run)
        run.timings[name] = time.perf_counter() - t0
    run.manifest(subcommand)
    return run


# ----------------------------------------------------------------------------
# compare


def _read_csv(path: Path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _flatten(x, prefix=""):
    if isinstance(x, dict):
        for k in sorted(x):
            yield from _flatten(x[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(x, list):
        for i, v in enumerate(x):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, x


def _series_report(a, b, tol, rtol):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    both_nan = np.isnan(a) & np.isnan(b)
    d = np.where(both_nan, 0.0, a - b)
    dev = np.abs(d)
    dev = np.where(np.isnan(dev), np.inf, dev)
    limit = tol + rtol * np.abs(np.nan_to_num(b))
    if d.size == 0:
        return {"max_abs_dev": 0.0, "min_signed": 0.0, "max_signed": 0.0, "ordering": "equal", "breach": False}
    fin = d[np.isfinite(d)]
    lo = float(fin.min()) if fin.size else 0.0
    hi = float(fin.max()) if fin.size else 0.0
    if lo == hi == 0.0:
        order = "equal"
    elif lo > 0:
        order = "a>b"
    elif hi < 0:
        order = "a<b"
    else:
        order = "mixed"
    return {"max_abs_dev": float(dev.max()), "min_signed": lo, "max_signed": hi, "ordering": order,
            "breach": bool(np.any(dev > limit))}


def _to_float(s):
    try:
        return float(s) if s != "" else math.nan
    except ValueError:
        return None


def compare_files(a: Path, b: Path, tol: float = 0.0, rtol: float = 0.0) -> dict:
    if a.suffix != b.suffix:
        raise SchemaMismatch(f"{a.name} vs {b.name}: different artifact types")
    report = {}
    if a.suffix == ".csv":
        ha, ra = _read_csv(a)
        hb, rb = _read_csv(b)
        if ha != hb or len(ra) != len(rb):
            raise SchemaMismatch(f"{a.name}: header or row count differs")
        for j, name in enumerate(ha):
            ca = [_to_float(r[j]) for r in ra]
            cb = [_to_float(r[j]) for r in rb]
            if any(v is None for v in ca + cb):
                same = all(r1[j] == r2[j] for r1, r2 in zip(ra, rb))
                report[name] = {"max_abs_dev": 0.0 if same else math.inf, "ordering": "equal" if same else "mixed",
                                "breach": not same}
            else:
                report[name] = _series_report(ca, cb, tol, rtol)
    elif a.suffix == ".json":
        fa = dict(_flatten(json.loads(a.read_text())))
        fb = dict(_flatten(json.loads(b.read_text())))
        if set(fa) != set(fb):
            raise SchemaMismatch(f"{a.name}: key sets differ")
        for k in sorted(fa):
            va, vb = fa[k], fb[k]
            if isinstance(va, (int, float)) and isinstance(vb, (int, float)) and not isinstance(va, bool):
                report[k] = _series_report([va], [vb], tol, rtol)
            else:
                report[k] = {"max_abs_dev": 0.0 if va == vb else math.inf, "breach": va != vb,
                             "ordering": "equal" if va == vb else "mixed"}
    else:
        raise SchemaMismatch(f"{a.name}: unsupported artifact type")
    return report


IGNORED = {"timings.json"}


def compare(a, b, tol: float = 0.0, rtol: float = 0.0) -> dict:
    a, b = Path(a), Path(b)
    if a.is_dir() != b.is_dir():
        raise SchemaMismatch("cannot compare a directory with a file")
    if not a.is_dir():
        series = {a.name: compare_files(a, b, tol, rtol)}
    else:
        ma = json.loads((a / "manifest.json").read_text())
        mb = json.loads((b / "manifest.json").read_text())
        if ma.get("manifest_schema") != mb.get("manifest_schema"):
            raise SchemaMismatch("manifest schema differs")
        fa = [x["file"] for x in ma["artifacts"]]
        fb = [x["file"] for x in mb["artifacts"]]
        if fa != fb:
            raise SchemaMismatch("artifact lists differ")
        series = {f: compare_files(a / f, b / f, tol, rtol) for f in fa if f not in IGNORED}
    breach = any(v["breach"] for s in series.values() for v in s.values())
    return {"tolerance": {"abs": tol, "rel": rtol}, "breach": breach, "series": series}


# ----------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boundary-weyl", description=__doc__.split("\n\n")[0])
    p.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS + ("compare",))
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--compare", nargs=2, metavar=("A", "B"), type=Path)
    p.add_argument("--tol", type=float, default=0.0, help="absolute tolerance for compare")
    p.add_argument("--rtol", type=float, default=0.0, help="relative tolerance for compare")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.compare or args.subcommand == "compare":
            if not args.compare:
                raise ConfigError("compare: pass --compare A B")
            report = compare(*args.compare, tol=args.tol, rtol=args.rtol)
            text = json.dumps(_clean(report), sort_keys=True, indent=1)
            if args.out:
                args.out.mkdir(parents=True, exist_ok=True)
                (args.out / "compare_report.json").write_text(text + "\n")
            print(text)
            return EXIT_TOLERANCE if report["breach"] else EXIT_OK
        if args.subcommand is None:
            raise ConfigError("subcommand: required")
        if args.config is None:
            raise ConfigError("--config: required")
        if args.threads < 1:
            raise ConfigError("--threads: must be >= 1")
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed: must be an unsigned 64-bit integer")
        cfg = load_config(args.config).with_overrides(seed=args.seed, output_dir=args.out)
        run = execute(args.subcommand, cfg, args.threads)
        print(json.dumps({"out": str(run.out), "artifacts": len(run.artifacts), "skipped": run.skipped}))
        return EXIT_OK
    except (ConfigError, SchemaMismatch, UnderResolvedGridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
