"""Method-of-lines solver for ``u_t = Delta_f(u^p) + N(t, x, u)`` and exact reference solutions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, Union

import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp

from .errors import CFLViolation, DomainError, PositivityLoss
from .fields import Grid, Meaning, SpaceTimeField, first_derivative, one_sided_first_derivative
from .geometry import (
    ConstantFactor,
    GeometrySpec,
    Interval,
    LinearFactor,
    PeriodicCircle,
    ZeroPotential,
)
from .nonlinearity import (
    Nonlinearity,
    ZeroReaction,
    density_from_pressure,
    pressure_from_density,
)

POSITIVITY_FRACTION = 1e-12


# ------------------------------------------------------------------ oracles


@dataclass(frozen=True)
class QuadraticPressure:
    """Exact first-regime pressure ``a(t) x^2 + b(t)`` on the flat line without source.

    ``a = a0 / (1 + 2(1+p) a0 t)`` and ``b = b0 (1 + 2(1+p) a0 t)^((1-p)/(1+p))``.
    """

    p: float
    a0: float = 0.5
    b0: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise DomainError("p must lie in (0, 1)")
        if self.a0 < 0.0 or self.b0 <= 0.0:
            raise DomainError("need a0 >= 0 and b0 > 0")

    def _growth(self, t):
        g = 1.0 + 2.0 * (1.0 + self.p) * self.a0 * np.asarray(t, float)
        if np.any(g <= 0.0):
            raise DomainError("time outside the oracle's lifespan")
        return g

    def pressure(self, x, t):
        g = self._growth(t)
        a = self.a0 / g
        b = self.b0 * g ** ((1.0 - self.p) / (1.0 + self.p))
        return a * np.asarray(x, float) ** 2 + b

    def density(self, x, t):
        return density_from_pressure(self.pressure(x, t), self.p, "I")

    def sym_pressure(self, x, t):
        p, a0, b0 = sp.Float(self.p), sp.Float(self.a0), sp.Float(self.b0)
        g = 1 + 2 * (1 + p) * a0 * t
        return a0 / g * x**2 + b0 * g ** ((1 - p) / (1 + p))

    def check_geometry(self, geom: GeometrySpec, nonlin: Nonlinearity) -> None:
        flat = isinstance(geom.potential, ZeroPotential) and geom.conformal.static and (
            float(geom.conformal.value(0.0)) == 0.0
        )
        if not flat or geom.closed or not isinstance(nonlin, ZeroReaction):
            raise DomainError("the quadratic pressure solves the flat, source-free problem on an interval only")

    def values(self, grid: Grid, times: np.ndarray) -> np.ndarray:
        return np.array([self.density(grid.x, t) for t in times])


@dataclass(frozen=True)
class ConstantODE:
    """Spatially constant solution of ``u' = N(t, u)``, integrated to 1e-12."""

    u0: float = 1.0

    def check_geometry(self, geom: GeometrySpec, nonlin: Nonlinearity) -> None:
        if not nonlin.x_independent:
            raise DomainError("constant solutions need an x-independent source")

    def trajectory(self, nonlin: Nonlinearity, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, float)
        if times.size == 1:
            return np.array([self.u0])
        sol = solve_ivp(
            lambda t, y: nonlin.value(t, 0.0, y),
            (times[0], times[-1]),
            [self.u0],
            t_eval=times,
            rtol=1e-12,
            atol=1e-14,
            method="DOP853",
        )
        if not sol.success:
            raise DomainError(f"ODE integration failed: {sol.message}")
        return sol.y[0]

    def values(self, grid: Grid, times: np.ndarray, nonlin: Nonlinearity) -> np.ndarray:
        return np.repeat(self.trajectory(nonlin, times)[:, None], grid.n, axis=1)


Oracle = Union[QuadraticPressure, ConstantODE]


def oracle_field(
    oracle: Oracle, geom: GeometrySpec, nonlin: Nonlinearity, grid: Grid, times: np.ndarray
) -> SpaceTimeField:
    """Density field of an exact solution sampled on ``grid`` and ``times``."""
    oracle.check_geometry(geom, nonlin)
    times = np.asarray(times, float)
    if isinstance(oracle, ConstantODE):
        vals = oracle.values(grid, times, nonlin)
    else:
        vals = oracle.values(grid, times)
    return SpaceTimeField(grid, times, vals, Meaning.U)


def backward_positivity_time(nonlin: Nonlinearity, u0: float, t_min: float = -1e3) -> float | None:
    """First negative time at which ``u' = N(u)`` from ``u(0) = u0`` reaches zero, if any."""
    if u0 <= 0.0:
        raise DomainError("initial value must be positive")

    def hits_zero(t, y):
        return y[0]

    hits_zero.terminal = True
    hits_zero.direction = -1
    sol = solve_ivp(
        lambda t, y: nonlin.value(t, 0.0, np.maximum(y, 0.0)),
        (0.0, t_min),
        [u0],
        events=hits_zero,
        rtol=1e-12,
        atol=1e-14,
        method="DOP853",
    )
    if sol.t_events[0].size:
        return float(sol.t_events[0][0])
    return None


# -------------------------------------------------------- initial profiles


def _bump_coordinate(geom: GeometrySpec, x, center):
    if isinstance(geom.domain, PeriodicCircle):
        L = geom.domain.length
        return L / math.pi * np.sin(math.pi * (np.asarray(x, float) - center) / L)
    return np.asarray(x, float) - center


@dataclass(frozen=True)
class ConstantPlusBump:
    """``base + amp exp(-d^2 / (2 width^2))``; ``d`` is a smooth periodic offset on the circle."""

    base: float = 1.0
    amp: float = 0.5
    center: float = 0.0
    width: float = 0.5

    def values(self, geom: GeometrySpec, grid: Grid, t: float) -> np.ndarray:
        d = _bump_coordinate(geom, grid.x, self.center)
        return self.base + self.amp * np.exp(-0.5 * (d / self.width) ** 2)


@dataclass(frozen=True)
class ConstantPlusWave:
    """``base + amp sin(2 pi mode (x - x_lo)/L + phase)``."""

    base: float = 1.0
    amp: float = 0.3
    mode: int = 1
    phase: float = 0.0

    def values(self, geom: GeometrySpec, grid: Grid, t: float) -> np.ndarray:
        lo = geom.domain.x_lo if isinstance(geom.domain, Interval) else 0.0
        arg = 2.0 * math.pi * self.mode * (grid.x - lo) / geom.domain.length + self.phase
        return self.base + self.amp * np.sin(arg)


@dataclass(frozen=True)
class OracleTrace:
    """Initial data taken from an exact solution at the start time."""

    oracle: Oracle

    def values(self, geom: GeometrySpec, grid: Grid, t: float, nonlin: Nonlinearity | None = None):
        if isinstance(self.oracle, ConstantODE):
            return np.full(grid.n, self.oracle.u0)
        return self.oracle.density(grid.x, t)


@dataclass(frozen=True)
class ExplicitTable:
    """Tabulated ``(x, u)`` pairs, linearly interpolated onto the grid."""

    x: tuple
    u: tuple

    def values(self, geom: GeometrySpec, grid: Grid, t: float) -> np.ndarray:
        xs, us = np.asarray(self.x, float), np.asarray(self.u, float)
        if xs.size != us.size or xs.size < 2 or np.any(np.diff(xs) <= 0):
            raise DomainError("table needs matching, strictly increasing x values")
        if isinstance(geom.domain, PeriodicCircle):
            return np.interp(grid.x, xs, us, period=geom.domain.length)
        return np.interp(grid.x, xs, us)


InitialCondition = Union[ConstantPlusBump, ConstantPlusWave, OracleTrace, ExplicitTable]


# ---------------------------------------------------------------- scenario


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything needed to produce one solution field.

    ``n_slices`` stored slices are spread uniformly over ``[t_start, t_start + horizon]``.
    Interval boundaries are either taken from ``oracle`` or frozen at the initial values.
    """

    geometry: GeometrySpec
    nonlinearity: Nonlinearity
    p: float
    initial: InitialCondition
    nx: int = 64
    t_start: float = 0.0
    horizon: float = 0.1
    n_slices: int = 11
    cfl: float = 0.4
    dt: float | None = None
    boundary_source: Literal["oracle", "frozen"] = "frozen"
    oracle: Oracle | None = None
    gradient_scheme: Literal["central", "forward"] = "central"

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"p={self.p} outside (0, 1)")
        if self.horizon <= 0.0 or self.n_slices < 2:
            raise DomainError("need a positive horizon and at least two slices")
        if not 0.0 < self.cfl <= 1.0:
            raise DomainError("cfl must lie in (0, 1]")
        if self.boundary_source == "oracle" and self.oracle is None and not self.geometry.closed:
            raise DomainError("oracle boundary data requested without an oracle")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_start + self.horizon, self.n_slices)

    def refined(self, level: int) -> "ScenarioSpec":
        """Grid halved ``level`` times with nested nodes; slice spacing halves too."""
        factor = 2**level
        nx = self.nx * factor if self.geometry.closed else (self.nx - 1) * factor + 1
        return replace(self, nx=nx, n_slices=(self.n_slices - 1) * factor + 1,
                       dt=None if self.dt is None else self.dt / factor**2)


def initial_values(scn: ScenarioSpec, grid: Grid) -> np.ndarray:
    if isinstance(scn.initial, OracleTrace):
        scn.initial.oracle.check_geometry(scn.geometry, scn.nonlinearity)
        return scn.initial.values(scn.geometry, grid, scn.t_start)
    return scn.initial.values(scn.geometry, grid, scn.t_start)


def stable_step(scn: ScenarioSpec, grid: Grid, u: np.ndarray, t: float, span: float) -> float:
    """Largest explicit step allowed for the current state over ``[t, t + span]``."""
    geom = scn.geometry
    diff = scn.p * float(np.max(u ** (scn.p - 1.0)))
    lam_min = float(min(geom.conformal.value(t), geom.conformal.value(t + span)))
    metric = math.exp(-2.0 * lam_min)
    limit = scn.cfl * grid.dx**2 / (metric * diff)
    drift = float(np.max(np.abs(geom.potential.dx(grid.x, np.array([t, t + span])[:, None]))))
    if drift > 0.0:
        limit = min(limit, scn.cfl * grid.dx / (metric * diff * drift))
    react = float(np.max(np.abs(scn.nonlinearity.du(t, grid.x, u))))
    if react > 0.0:
        limit = min(limit, scn.cfl / react)
    return limit


def _rhs_factory(scn: ScenarioSpec, grid: Grid):
    geom = scn.geometry
    deriv = first_derivative if scn.gradient_scheme == "central" else one_sided_first_derivative

    def rhs(t: float, u: np.ndarray) -> np.ndarray:
        w = u**scn.p
        fx = geom.potential.dx(grid.x, t)
        diffusion = geom.metric_factor(t) * (grid.d2(w) - fx * deriv(w, grid.dx, grid.periodic))
        return diffusion + scn.nonlinearity.value(t, grid.x, u)

    return rhs


def solve(scn: ScenarioSpec) -> SpaceTimeField:
    """Integrate the density equation with RK4, storing ``scn.n_slices`` slices.

    Each inter-slice interval is split into equal sub-steps that respect the
    stability bound of the state at the start of the interval. Any stage value
    at or below ``1e-12 * min(u0)`` aborts with :class:`PositivityLoss`.
    """
    geom = scn.geometry
    grid = geom.grid(scn.nx)
    u = initial_values(scn, grid).astype(float)
    if np.any(u <= 0.0) or not np.all(np.isfinite(u)):
        raise DomainError("initial data must be finite and positive")
    floor = POSITIVITY_FRACTION * float(u.min())
    rhs = _rhs_factory(scn, grid)
    times = scn.times

    if geom.closed:
        boundary = None
    elif scn.boundary_source == "oracle":
        oracle = scn.oracle
        oracle.check_geometry(geom, scn.nonlinearity)
        if isinstance(oracle, ConstantODE):
            def boundary(t, t0=scn.t_start):
                if t <= t0:
                    return np.full(2, oracle.u0)
                return np.full(2, oracle.trajectory(scn.nonlinearity, [t0, t])[-1])
        else:
            ends = grid.x[[0, -1]]
            boundary = lambda t: oracle.density(ends, t)
    else:
        frozen = u[[0, -1]].copy()
        boundary = lambda t: frozen

    def guard(state: np.ndarray, t: float) -> np.ndarray:
        if boundary is not None:
            state = state.copy()
            state[[0, -1]] = boundary(t)
        bad = np.flatnonzero(~(state > floor))
        if bad.size:
            j = int(bad[0])
            raise PositivityLoss(j, t, float(state[j]), floor)
        return state

    out = np.empty((times.size, grid.n))
    out[0] = u
    steps = 0
    smallest = math.inf
    for k in range(times.size - 1):
        t, span = float(times[k]), float(times[k + 1] - times[k])
        allowed = stable_step(scn, grid, u, t, span)
        if scn.dt is not None:
            n_sub = max(1, int(round(span / scn.dt)))
            if span / n_sub > allowed * (1.0 + 1e-12):
                raise CFLViolation(f"dt={span / n_sub:.3e} exceeds the stable step {allowed:.3e}")
        else:
            n_sub = max(1, math.ceil(span / allowed - 1e-12))
        h = span / n_sub
        smallest = min(smallest, h)
        for i in range(n_sub):
            s = t + i * h
            k1 = rhs(s, u)
            y = guard(u + 0.5 * h * k1, s + 0.5 * h)
            k2 = rhs(s + 0.5 * h, y)
            y = guard(u + 0.5 * h * k2, s + 0.5 * h)
            k3 = rhs(s + 0.5 * h, y)
            y = guard(u + h * k3, s + h)
            k4 = rhs(s + h, y)
            u = guard(u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), s + h)
            steps += 1
        out[k + 1] = u
    meta = {"steps": steps, "dt_min": smallest, "floor": floor, "nx": grid.n, "dx": grid.dx}
    return SpaceTimeField(grid, times, out, Meaning.U, meta=meta)


def pressure_transform(fld: SpaceTimeField, p: float, regime: Literal["I", "II"]) -> SpaceTimeField:
    """Density field to the regime's pressure variable (and back, for pressure input)."""
    if fld.meaning == Meaning.U:
        target = Meaning.V_I if regime == "I" else Meaning.V_II
        vals = pressure_from_density(fld.values, p, regime)
    else:
        expected = Meaning.V_I if regime == "I" else Meaning.V_II
        if fld.meaning != expected:
            raise DomainError(f"field holds {fld.meaning.value}, not regime {regime} pressure")
        target = Meaning.U
        vals = density_from_pressure(fld.values, p, regime)
    return SpaceTimeField(fld.grid, fld.times, vals, target, meta=dict(fld.meta))


# ---------------------------------------------------------- convergence


@dataclass
class ConvergenceReport:
    nx: list[int]
    dx: list[float]
    err_linf: list[float]
    err_l2: list[float]
    order_linf: list[float]
    order_l2: list[float]
    reference: str
    monotone: bool = field(init=False)

    def __post_init__(self):
        self.monotone = all(b < a for a, b in zip(self.err_linf, self.err_linf[1:]))

    def as_dict(self) -> dict:
        return {
            "nx": self.nx,
            "dx": self.dx,
            "err_linf": self.err_linf,
            "err_l2": self.err_l2,
            "order_linf": self.order_linf,
            "order_l2": self.order_l2,
            "reference": self.reference,
            "monotone": self.monotone,
        }


def observed_orders(errors: list[float], steps: list[float]) -> list[float]:
    return [
        float(math.log(e0 / e1) / math.log(h0 / h1)) if e0 > 0 and e1 > 0 else float("nan")
        for e0, e1, h0, h1 in zip(errors, errors[1:], steps, steps[1:])
    ]


def convergence_study(scn: ScenarioSpec, levels: int = 3, reference: Literal["oracle", "successive"] = "oracle"):
    """Errors and observed orders over ``levels`` grid halvings.

    With ``reference="successive"`` each level is compared with the next finer one at
    the shared (nested) nodes, so one extra level is solved. Successive differences
    shrink at the same rate as true errors without the bias a fixed finest reference
    puts on the last ratio.
    """
    if levels < 2:
        raise DomainError("need at least two levels")
    base = replace(scn, n_slices=scn.n_slices)
    specs = [replace(base.refined(k), n_slices=base.n_slices) for k in range(levels)]
    fields = [solve(s) for s in specs]
    if reference == "oracle":
        if scn.oracle is None:
            raise DomainError("oracle reference requested without an oracle")
        refs = [oracle_field(scn.oracle, scn.geometry, scn.nonlinearity, f.grid, f.times).values for f in fields]
    else:
        finer = fields[1:] + [solve(replace(base.refined(levels), n_slices=base.n_slices))]
        refs = []
        for f, fine in zip(fields, finer):
            stride = (fine.grid.n // f.grid.n) if f.grid.periodic else (fine.grid.n - 1) // (f.grid.n - 1)
            refs.append(fine.values[:, ::stride])
    e_inf, e_l2 = [], []
    for f, ref in zip(fields, refs):
        diff = f.values - ref
        e_inf.append(float(np.max(np.abs(diff))))
        e_l2.append(float(np.sqrt(np.mean(diff**2))))
    dxs = [f.grid.dx for f in fields]
    return ConvergenceReport(
        nx=[f.grid.n for f in fields],
        dx=dxs,
        err_linf=e_inf,
        err_l2=e_l2,
        order_linf=observed_orders(e_inf, dxs),
        order_l2=observed_orders(e_l2, dxs),
        reference=reference,
    )
