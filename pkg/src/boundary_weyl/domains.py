"""Model geometries: annulus, spherical cap complement, flat torus with a disk removed.

Sign convention for curvature: the geodesic curvature of a boundary circle is
``kappa = <nabla_T T, N_in>`` with ``N_in`` the unit normal pointing into M.
Components that bend away from M (dispersing, concave from inside) get
``kappa < 0``; the outer annulus rim, which bends toward M, gets ``kappa > 0``.
With n = 2 the mean curvature equals kappa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

TWO_PI = 2.0 * math.pi
DEFAULT_GLANCING_BAND = 0.1


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Annulus:
    r_inner: float
    r_outer: float
    kind = "annulus"
    dimension = 2

    def __post_init__(self):
        if not (0 < self.r_inner < self.r_outer):
            raise DomainError("annulus needs 0 < r_inner < r_outer")

    @property
    def components(self) -> tuple[int, ...]:
        return (0, 1)  # 0 inner, 1 outer

    def area(self) -> float:
        return math.pi * (self.r_outer**2 - self.r_inner**2)

    def boundary_radius(self, component: int) -> float:
        _check_component(self, component)
        return self.r_inner if component == 0 else self.r_outer

    def to_dict(self) -> dict:
        return {"kind": self.kind, "r_inner": self.r_inner, "r_outer": self.r_outer}


@dataclass(frozen=True)
class SphereCapComplement:
    """Unit sphere minus the polar cap ``theta < cap_radius``."""

    cap_radius: float
    kind = "cap"
    dimension = 2

    def __post_init__(self):
        if not (0 < self.cap_radius <= math.pi / 2 + 1e-15):
            raise DomainError("cap radius must lie in (0, pi/2]")

    @property
    def components(self) -> tuple[int, ...]:
        return (0,)

    def area(self) -> float:
        return TWO_PI * (1.0 + math.cos(self.cap_radius))

    def cap_area(self) -> float:
        return TWO_PI * (1.0 - math.cos(self.cap_radius))

    def boundary_radius(self, component: int) -> float:
        _check_component(self, component)
        return math.sin(self.cap_radius)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "cap_radius": self.cap_radius}


@dataclass(frozen=True)
class SinaiTorus:
    """Square torus of side L with a disk of radius a centred at the origin removed."""

    side: float
    obstacle_radius: float
    kind = "sinai"
    dimension = 2

    def __post_init__(self):
        if not (self.side > 0 and 0 < self.obstacle_radius < self.side / 2):
            raise DomainError("sinai torus needs L > 0 and 0 < a < L/2")

    @property
    def components(self) -> tuple[int, ...]:
        return (0,)

    def area(self) -> float:
        return self.side**2 - math.pi * self.obstacle_radius**2

    def boundary_radius(self, component: int) -> float:
        _check_component(self, component)
        return self.obstacle_radius

    def to_dict(self) -> dict:
        return {"kind": self.kind, "side": self.side, "obstacle_radius": self.obstacle_radius}


DomainModel = Union[Annulus, SphereCapComplement, SinaiTorus]


def domain_from_dict(d: dict) -> DomainModel:
    kind = d.get("kind")
    try:
        if kind == "annulus":
            return Annulus(float(d["r_inner"]), float(d["r_outer"]))
        if kind == "cap":
            return SphereCapComplement(float(d["cap_radius"]))
        if kind == "sinai":
            return SinaiTorus(float(d["side"]), float(d["obstacle_radius"]))
    except KeyError as exc:
        raise DomainError(f"domain.{exc.args[0]}: missing field") from None
    raise DomainError(f"domain.kind: unknown kind {kind!r}")


def _check_component(domain, component: int) -> None:
    if component not in domain.components:
        raise DomainError(f"unknown boundary component {component} for {domain.kind}")


@dataclass(frozen=True)
class BoundaryPoint:
    component: int
    coord: float

    def __post_init__(self):
        object.__setattr__(self, "coord", float(self.coord) % TWO_PI)


@dataclass(frozen=True)
class BoundaryCovector:
    at: BoundaryPoint
    eta: float


class CovectorClass(Enum):
    HYPERBOLIC = "hyperbolic"
    GLANCING = "glancing"
    ELLIPTIC = "elliptic"


@dataclass(frozen=True)
class CurvatureReport:
    at: BoundaryPoint
    mean_curvature: float
    convention: str = "kappa = <nabla_T T, N_in>, N_in pointing into M"


def boundary_length(domain: DomainModel, component: int) -> float:
    return TWO_PI * domain.boundary_radius(component)


def total_boundary_length(domain: DomainModel) -> float:
    return sum(boundary_length(domain, c) for c in domain.components)


def mean_curvature(domain: DomainModel, q: BoundaryPoint) -> CurvatureReport:
    _check_component(domain, q.component)
    if isinstance(domain, Annulus):
        k = -1.0 / domain.r_inner if q.component == 0 else 1.0 / domain.r_outer
    elif isinstance(domain, SphereCapComplement):
        r = domain.cap_radius
        k = 0.0 if abs(r - math.pi / 2) < 1e-15 else -math.cos(r) / math.sin(r)
    else:
        k = -1.0 / domain.obstacle_radius
    return CurvatureReport(q, k)


def classify_covector(
    domain: DomainModel, v: BoundaryCovector, eps: float = DEFAULT_GLANCING_BAND
) -> CovectorClass:
    del domain  # classification depends on |eta| only
    a = abs(v.eta)
    if abs(a - 1.0) <= eps:
        return CovectorClass.GLANCING
    return CovectorClass.HYPERBOLIC if a < 1.0 else CovectorClass.ELLIPTIC


def boundary_frame(domain: DomainModel, q: BoundaryPoint):
    """``(position, unit tangent, inward unit normal)`` as ambient vectors.

    Planar models use R^2; the sphere uses R^3 with the cap centred on +z.
    For the torus the obstacle sits at the origin of the fundamental cell.
    """
    phi = q.coord
    c, s = math.cos(phi), math.sin(phi)
    if isinstance(domain, Annulus):
        rb = domain.boundary_radius(q.component)
        pos = np.array([rb * c, rb * s])
        tan = np.array([-s, c])
        out = np.array([c, s])
        nrm = out if q.component == 0 else -out
        return pos, tan, nrm
    if isinstance(domain, SinaiTorus):
        a = domain.obstacle_radius
        return np.array([a * c, a * s]), np.array([-s, c]), np.array([c, s])
    r = domain.cap_radius
    sr, cr = math.sin(r), math.cos(r)
    pos = np.array([sr * c, sr * s, cr])
    tan = np.array([-s, c, 0.0])
    # d/dtheta of the position: points away from the cap, i.e. into M
    nrm = np.array([cr * c, cr * s, -sr])
    return pos, tan, nrm
