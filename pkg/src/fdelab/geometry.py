"""Weighted 1-D model geometry ``g = exp(2*lam(t)) dx^2`` with potential ``f(x, t)``.

All tensor quantities are reduced to coordinate components: for a scalar
``v`` the norm ``|grad v|^2`` is ``exp(-2 lam) v_x^2`` and the weighted
Laplacian is ``exp(-2 lam) (v_xx - f_x v_x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np
import sympy as sp

from .errors import DomainError
from .fields import Grid, SpaceTimeField


# ---------------------------------------------------------------- domains


@dataclass(frozen=True)
class PeriodicCircle:
    length: float = 2.0 * math.pi

    def __post_init__(self):
        if not self.length > 0:
            raise DomainError("circle length must be positive")

    def grid(self, nx: int) -> Grid:
        if nx < 4:
            raise DomainError("need at least 4 nodes")
        dx = self.length / nx
        return Grid(x=np.arange(nx) * dx, dx=dx, periodic=True)

    def coordinate_distance(self, x, x0):
        d = np.mod(np.abs(np.asarray(x, dtype=float) - x0), self.length)
        return np.minimum(d, self.length - d)


@dataclass(frozen=True)
class Interval:
    x_lo: float
    x_hi: float

    def __post_init__(self):
        if not self.x_hi > self.x_lo:
            raise DomainError("interval needs x_lo < x_hi")

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo

    def grid(self, nx: int) -> Grid:
        if nx < 5:
            raise DomainError("need at least 5 nodes")
        x = np.linspace(self.x_lo, self.x_hi, nx)
        return Grid(x=x, dx=(self.x_hi - self.x_lo) / (nx - 1), periodic=False)

    def coordinate_distance(self, x, x0):
        return np.abs(np.asarray(x, dtype=float) - x0)


Domain = Union[PeriodicCircle, Interval]


# ---------------------------------------------------------- conformal factor


@dataclass(frozen=True)
class ConstantFactor:
    lambda0: float = 0.0

    def value(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.lambda0)

    def rate(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def sym(self, t):
        return sp.Float(self.lambda0)

    @property
    def static(self) -> bool:
        return True


@dataclass(frozen=True)
class LinearFactor:
    lambda0: float = 0.0
    rate_: float = 0.0

    def value(self, t):
        return self.lambda0 + self.rate_ * np.asarray(t, dtype=float)

    def rate(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.rate_)

    def sym(self, t):
        return sp.Float(self.lambda0) + sp.Float(self.rate_) * t

    @property
    def static(self) -> bool:
        return self.rate_ == 0.0


ConformalFactor = Union[ConstantFactor, LinearFactor]


# ---------------------------------------------------------------- potentials


@dataclass(frozen=True)
class ZeroPotential:
    def value(self, x, t):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(t)).shape)

    dx = dxx = dt = value

    def sym(self, x, t):
        return sp.Integer(0)

    spatially_constant = True
    time_independent = True

    def periodic_on(self, length: float) -> bool:
        return True


@dataclass(frozen=True)
class QuadraticPotential:
    """``f = a x^2 / 2``; ``a = 1`` is the Gaussian weight."""

    a: float = 1.0

    def value(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        return 0.5 * self.a * x * x

    def dx(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        return self.a * x

    def dxx(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        return np.full(x.shape, self.a)

    def dt(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        return np.zeros(x.shape)

    def sym(self, x, t):
        return sp.Float(self.a) * x**2 / 2

    @property
    def spatially_constant(self) -> bool:
        return self.a == 0.0

    time_independent = True

    def periodic_on(self, length: float) -> bool:
        return self.a == 0.0


@dataclass(frozen=True)
class CosinePotential:
    """``f = a cos(kappa x)``."""

    a: float = 0.3
    kappa: float = 1.0

    def value(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        return self.a * np.cos(self.kappa * x)

    def dx(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        return -self.a * self.kappa * np.sin(self.kappa * x)

    def dxx(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        return -self.a * self.kappa**2 * np.cos(self.kappa * x)

    def dt(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        return np.zeros(x.shape)

    def sym(self, x, t):
        return sp.Float(self.a) * sp.cos(sp.Float(self.kappa) * x)

    @property
    def spatially_constant(self) -> bool:
        return self.a == 0.0

    time_independent = True

    def periodic_on(self, length: float) -> bool:
        turns = self.kappa * length / (2.0 * math.pi)
        return self.a == 0.0 or abs(turns - round(turns)) < 1e-12


@dataclass(frozen=True)
class TimeScaledPotential:
    """``f = (1 + rate t) base(x)``."""

    base: "Potential"
    rate: float = 0.0

    def _scale(self, t):
        return 1.0 + self.rate * np.asarray(t, float)

    def value(self, x, t):
        return self._scale(t) * self.base.value(x, t)

    def dx(self, x, t):
        return self._scale(t) * self.base.dx(x, t)

    def dxx(self, x, t):
        return self._scale(t) * self.base.dxx(x, t)

    def dt(self, x, t):
        return self.rate * self.base.value(x, t)

    def sym(self, x, t):
        return (1 + sp.Float(self.rate) * t) * self.base.sym(x, t)

    @property
    def spatially_constant(self) -> bool:
        return self.base.spatially_constant

    @property
    def time_independent(self) -> bool:
        return self.rate == 0.0 or self.base.spatially_constant

    def periodic_on(self, length: float) -> bool:
        return self.base.periodic_on(length)


Potential = Union[ZeroPotential, QuadraticPotential, CosinePotential, TimeScaledPotential]


# ----------------------------------------------------------------- geometry


@dataclass(frozen=True)
class GeometrySpec:
    m: float
    domain: Domain = field(default_factory=PeriodicCircle)
    conformal: ConformalFactor = field(default_factory=ConstantFactor)
    potential: Potential = field(default_factory=ZeroPotential)
    boundary: Literal["periodic", "dirichlet"] = "periodic"
    n: int = 1

    def __post_init__(self):
        if self.n != 1:
            raise DomainError("only the one-dimensional model is supported")
        if not self.m >= self.n:
            raise DomainError(f"synthetic dimension m={self.m} must be >= n={self.n}")
        if self.m == self.n and not self.potential.spatially_constant:
            raise DomainError("m == n forces a spatially constant potential")
        closed = isinstance(self.domain, PeriodicCircle)
        if closed != (self.boundary == "periodic"):
            raise DomainError("periodic boundary goes with the circle, dirichlet with intervals")
        if closed and not self.potential.periodic_on(self.domain.length):
            raise DomainError("potential is not periodic on the circle")

    @property
    def closed(self) -> bool:
        return isinstance(self.domain, PeriodicCircle)

    @property
    def static(self) -> bool:
        return self.conformal.static and self.potential.time_independent

    def grid(self, nx: int) -> Grid:
        return self.domain.grid(nx)

    def metric_factor(self, t):
        """``exp(-2 lam(t))``, the inverse metric coefficient."""
        return np.exp(-2.0 * self.conformal.value(t))

    def bakry_emery_m(self, x, t):
        """Coordinate component ``f_xx - f_x^2/(m - n)``; zero when ``m == n``."""
        if self.m == self.n:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(t)).shape)
        fx = self.potential.dx(x, t)
        return self.potential.dxx(x, t) - fx * fx / (self.m - self.n)

    def geodesic_distance(self, x, x0: float, t: float):
        return np.exp(self.conformal.value(t)) * self.domain.coordinate_distance(x, x0)


def f_laplacian(v: np.ndarray, t: float, geom: GeometrySpec, grid: Grid) -> np.ndarray:
    """Discrete weighted Laplacian of ``v`` on ``grid`` at time ``t``."""
    v = grid.check(v)
    if not np.isfinite(t):
        raise DomainError("time must be finite")
    fx = geom.potential.dx(grid.x, t)
    return geom.metric_factor(t) * (grid.d2(v) - fx * grid.d1(v))


# ------------------------------------------------------- cylinders / bounds


@dataclass(frozen=True)
class Cylinder:
    x0: float
    t0: float
    R: float
    T: float

    def __post_init__(self):
        if not (self.R > 0 and self.T > 0):
            raise DomainError("cylinder needs R > 0 and T > 0")

    def scaled(self, radius_factor: float) -> "Cylinder":
        return Cylinder(self.x0, self.t0, self.R * radius_factor, self.T)

    def mask(self, geom: GeometrySpec, grid: Grid, times: np.ndarray, open_bottom: bool = False):
        """Boolean (times x nodes) membership mask."""
        times = np.asarray(times, float)
        rows = []
        for t in times:
            inside_t = (t <= self.t0 + 1e-12) and (
                t > self.t0 - self.T + 1e-12 if open_bottom else t >= self.t0 - self.T - 1e-12
            )
            rows.append(inside_t & (geom.geodesic_distance(grid.x, self.x0, t) <= self.R + 1e-12))
        return np.array(rows)


@dataclass(frozen=True)
class CurvatureBounds:
    k: float
    h: float
    kappa_super: float | None = None


def _k_from_samples(geom: GeometrySpec, x: np.ndarray, t: np.ndarray) -> float:
    if geom.m == 1:
        return 0.0
    be = geom.bakry_emery_m(x, t)
    lower = -geom.metric_factor(t) * be / (geom.m - 1.0)
    return float(max(0.0, np.max(lower)))


def curvature_bounds(
    geom: GeometrySpec, cyl: Cylinder | None, grid: Grid, times: np.ndarray | None = None
) -> CurvatureBounds:
    """Smallest ``k, h >= 0`` with ``Ric_f^m >= -(m-1) k g`` and ``d_t g >= -2 h g`` on the samples.

    ``cyl=None`` samples the whole domain; ``times`` defaults to 65 points of the
    cylinder's time window.
    """
    if times is None:
        if cyl is None:
            raise DomainError("times required when no cylinder is given")
        times = np.linspace(cyl.t0 - cyl.T, cyl.t0, 65)
    times = np.asarray(times, float)
    if cyl is None:
        mask = np.ones((times.size, grid.n), bool)
    else:
        mask = cyl.mask(geom, grid, times)
    tt, xx = np.meshgrid(times, grid.x, indexing="ij")
    if not mask.any():
        raise DomainError("cylinder contains no grid samples")
    k = _k_from_samples(geom, xx[mask], tt[mask])
    h = float(max(0.0, np.max(-geom.conformal.rate(times))))
    return CurvatureBounds(k=k, h=h)


def diffusivity_coefficient(v: np.ndarray, p: float, regime: Literal["I", "II"]) -> np.ndarray:
    """Multiplier of ``Ric_f^m`` in the super flow condition."""
    if regime == "I":
        return (1.0 - p) * v
    return p * v ** (2.0 * (p - 1.0) / (2.0 * p - 1.0))


def superflow_margin(
    geom: GeometrySpec,
    field_v: SpaceTimeField,
    regime: Literal["I", "II"],
    p: float,
    cyl: Cylinder | None = None,
) -> CurvatureBounds:
    """Bounds over the field's samples, including the smallest super-flow constant.

    The super flow condition reads ``lam' + c(v) exp(-2 lam) BE_m >= -kappa``
    in coordinates, where ``c(v)`` is the regime's diffusivity multiplier.
    """
    if not 0.0 < p < 1.0 or (regime == "II" and p <= 0.5):
        raise DomainError(f"p={p} outside the regime {regime} range")
    if regime not in ("I", "II"):
        raise DomainError(f"unknown regime {regime!r}")
    v = field_v.values
    grid = field_v.grid
    t = field_v.times[:, None]
    mask = (
        np.ones(v.shape, bool) if cyl is None else cyl.mask(geom, grid, field_v.times)
    )
    if not mask.any():
        raise DomainError("cylinder contains no field samples")
    margin = geom.conformal.rate(t) + diffusivity_coefficient(v, p, regime) * geom.metric_factor(
        t
    ) * geom.bakry_emery_m(grid.x[None, :], t)
    kappa = float(max(0.0, -np.min(margin[mask])))
    tt, xx = np.meshgrid(field_v.times, grid.x, indexing="ij")
    k = _k_from_samples(geom, xx[mask], tt[mask])
    h = float(max(0.0, np.max(-geom.conformal.rate(field_v.times))))
    return CurvatureBounds(k=k, h=h, kappa_super=kappa)
