"""Experiment configuration: a single JSON file, validated field by field.

Physical parameters have no defaults. Derived analysis windows default to
fixed fractions of ``lambda_max`` and are echoed into the manifest.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .domains import DomainError, DomainModel, domain_from_dict

CONFIG_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Validation failure; the message names the offending field."""


@dataclass(frozen=True)
class KernelConfig:
    T: float
    shape: str = "fejer_bump"


@dataclass(frozen=True)
class FilterConfig:
    eps: float
    eps_list: tuple = (0.05, 0.1, 0.2)
    window: tuple | None = None


@dataclass(frozen=True)
class BilliardConfig:
    T: float
    N: int
    delta: float
    seed: int


@dataclass(frozen=True)
class WaveConfig:
    sigma: float
    t_max: float = 2.5
    dt: float = 0.002


@dataclass(frozen=True)
class ExperimentConfig:
    domain: DomainModel
    bc: str
    lambda_max: float
    boundary_grid: int
    kernel: KernelConfig
    filter: FilterConfig
    billiard: BilliardConfig
    wave: WaveConfig
    output_dir: str
    rim_points: tuple = ()
    weyl_window: tuple | None = None
    cache_dir: str | None = None
    schema_version: int = CONFIG_SCHEMA_VERSION
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def canonical(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("raw", "domain", "output_dir", "cache_dir")}
        d["domain"] = self.domain.to_dict()
        return d

    def with_overrides(self, seed=None, output_dir=None) -> "ExperimentConfig":
        from dataclasses import replace

        cfg = self
        if seed is not None:
            cfg = replace(cfg, billiard=replace(cfg.billiard, seed=int(seed)))
        if output_dir is not None:
            cfg = replace(cfg, output_dir=str(output_dir))
        return cfg


def _req(d: dict, key: str, path: str):
    if key not in d:
        raise ConfigError(f"{path}{key}: required field missing")
    return d[key]


def _num(v, path: str, positive: bool = True, integer: bool = False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{path}: must be finite")
    if positive and v <= 0:
        raise ConfigError(f"{path}: must be positive")
    if integer:
        if int(v) != v:
            raise ConfigError(f"{path}: must be an integer")
        return int(v)
    return float(v)


def _pair(v, path):
    if v is None:
        return None
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ConfigError(f"{path}: expected [lo, hi]")
    lo, hi = _num(v[0], path + "[0]"), _num(v[1], path + "[1]")
    if lo >= hi:
        raise ConfigError(f"{path}: lo must be below hi")
    return (lo, hi)


def parse_config(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("config: top level must be an object")
    sv = d.get("schema_version", CONFIG_SCHEMA_VERSION)
    if sv != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {CONFIG_SCHEMA_VERSION}, got {sv!r}")
    try:
        domain = domain_from_dict(_req(d, "domain", ""))
    except DomainError as exc:
        raise ConfigError(str(exc) if str(exc).startswith("domain") else f"domain: {exc}") from None
    bc = _req(d, "bc", "")
    if bc not in ("dirichlet", "neumann"):
        raise ConfigError(f"bc: expected 'dirichlet' or 'neumann', got {bc!r}")
    lam_max = _num(_req(d, "lambda_max", ""), "lambda_max")
    grid = _num(_req(d, "boundary_grid", ""), "boundary_grid", integer=True)
    k = _req(d, "kernel", "")
    kernel = KernelConfig(_num(_req(k, "T", "kernel."), "kernel.T"), str(k.get("shape", "fejer_bump")))
    if kernel.shape not in ("fejer_bump", "plateau"):
        raise ConfigError(f"kernel.shape: unknown shape {kernel.shape!r}")
    f = _req(d, "filter", "")
    eps = _num(_req(f, "eps", "filter."), "filter.eps")
    if eps > 0.5:
        raise ConfigError("filter.eps: must lie in (0, 0.5]")
    eps_list = tuple(_num(e, f"filter.eps_list[{i}]") for i, e in enumerate(f.get("eps_list", (0.05, 0.1, 0.2))))
    filt = FilterConfig(eps, eps_list, _pair(f.get("window"), "filter.window"))
    b = _req(d, "billiard", "")
    bil = BilliardConfig(
        _num(_req(b, "T", "billiard."), "billiard.T"),
        _num(_req(b, "N", "billiard."), "billiard.N", integer=True),
        _num(_req(b, "delta", "billiard."), "billiard.delta"),
        _num(_req(b, "seed", "billiard."), "billiard.seed", positive=False, integer=True),
    )
    if bil.N < 1000:
        raise ConfigError("billiard.N: need at least 1000 samples")
    w = _req(d, "wave", "")
    wave = WaveConfig(_num(_req(w, "sigma", "wave."), "wave.sigma"), _num(w.get("t_max", 2.5), "wave.t_max"),
                      _num(w.get("dt", 0.002), "wave.dt"))
    out = _req(d, "output_dir", "")
    rims = []
    for i, p in enumerate(d.get("rim_points", [[0, 0.0]])):
        if not (isinstance(p, (list, tuple)) and len(p) == 2):
            raise ConfigError(f"rim_points[{i}]: expected [component, coord]")
        comp = _num(p[0], f"rim_points[{i}][0]", positive=False, integer=True)
        if comp not in domain.components:
            raise ConfigError(f"rim_points[{i}][0]: unknown component {comp}")
        rims.append((comp, _num(p[1], f"rim_points[{i}][1]", positive=False)))
    return ExperimentConfig(
        domain=domain,
        bc=bc,
        lambda_max=lam_max,
        boundary_grid=grid,
        kernel=kernel,
        filter=filt,
        billiard=bil,
        wave=wave,
        output_dir=str(out),
        rim_points=tuple(rims),
        weyl_window=_pair(d.get("weyl_window"), "weyl_window"),
        cache_dir=d.get("cache_dir"),
        raw=d,
    )


def load_config(path) -> ExperimentConfig:
    try:
        d = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from None
    return parse_config(d)
