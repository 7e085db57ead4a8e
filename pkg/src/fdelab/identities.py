"""Pointwise identities and inequalities for the pressure equations, checked numerically.

Every catalog entry is written once as a pair ``(lhs, rhs)`` of expressions in a
*backend*: either a discrete backend (grid fields, finite differences) or a
symbolic backend (exact sympy derivatives of an analytic trajectory). The
left-hand side always applies the operator to a composite field; the right-hand
side is pure algebra on the jets ``v, v_x, v_xx`` and the source partials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Union

import numpy as np
import sympy as sp
from scipy.optimize import minimize

from .errors import DomainError
from .exponents import beta_polynomial, beta_selection, critical_exponents
from .fields import SpaceTimeField
from .geometry import GeometrySpec, diffusivity_coefficient
from .nonlinearity import (
    Auxiliary,
    Nonlinearity,
    ZeroAuxiliary,
    density_from_pressure,
    pressure_from_density,
    sigma,
    sigma_symbolic,
)
from .solver import QuadraticPressure, ScenarioSpec, pressure_transform, solve

Regime = Literal["I", "II"]


# ------------------------------------------------------------ time weights


@dataclass(frozen=True)
class ConstantWeight:
    c: float = 1.0

    def value(self, t):
        return np.full_like(np.asarray(t, float), self.c)

    def deriv(self, t):
        return np.zeros_like(np.asarray(t, float))

    def sym(self, t):
        return sp.Float(self.c)


@dataclass(frozen=True)
class ExponentialWeight:
    """``c exp(rate t)``."""

    c: float = 1.0
    rate: float = -1.0 / 3.0

    def value(self, t):
        return self.c * np.exp(self.rate * np.asarray(t, float))

    def deriv(self, t):
        return self.rate * self.value(t)

    def sym(self, t):
        return sp.Float(self.c) * sp.exp(sp.Float(self.rate) * t)


@dataclass(frozen=True)
class RationalWeight:
    """``t / (1 + 2 k t)``, the weight behind the time-weighted estimates."""

    k: float = 0.0

    def value(self, t):
        t = np.asarray(t, float)
        return t / (1.0 + 2.0 * self.k * t)

    def deriv(self, t):
        t = np.asarray(t, float)
        return 1.0 / (1.0 + 2.0 * self.k * t) ** 2

    def sym(self, t):
        return t / (1 + 2 * sp.Float(self.k) * t)


TimeWeight = Union[ConstantWeight, ExponentialWeight, RationalWeight]


# ----------------------------------------------------------------- backends


class DiscreteBackend:
    """Finite-difference calculus on a pressure field."""

    def __init__(self, geom: GeometrySpec, nonlin: Nonlinearity, p: float, regime: Regime,
                 fld: SpaceTimeField, margin: int = 3):
        self.geom, self.p, self.regime = geom, p, regime
        self.grid = g = fld.grid
        self.times = fld.times
        self.step = g.dx
        self.slice_dt = fld.dt
        t = fld.times[:, None]
        x = g.x[None, :]
        self.t = t + 0.0 * x
        self.v = fld.values
        self.E = geom.metric_factor(t)
        self.lam_t = geom.conformal.rate(t)
        self.fx = geom.potential.dx(x, t)
        self.fxx = geom.potential.dxx(x, t)
        S = sigma(nonlin, p, regime, t, x, self.v)
        self.S, self.Sv, self.Sx = S.value, S.d_v, S.d_x
        self.vx = g.d1(self.v)
        self.vxx = g.d2(self.v)
        mask = np.zeros(self.v.shape, bool)
        mask[1:-1, :] = True
        if not g.periodic:
            mask[:, :margin] = False
            mask[:, -margin:] = False
        self.mask = mask

    def dx(self, F):
        return self.grid.d1(F)

    def dxx(self, F):
        return self.grid.d2(F)

    def dt(self, F):
        F = np.asarray(F, float)
        out = np.full(F.shape, np.nan)
        out[1:-1] = (F[2:] - F[:-2]) / (self.times[2:, None] - self.times[:-2, None])
        return out

    def lapf(self, F):
        return self.E * (self.dxx(F) - self.fx * self.dx(F))

    def weight(self, zeta: TimeWeight):
        return zeta.value(self.t), zeta.deriv(self.t)

    def aux(self, gamma: Auxiliary):
        return gamma.value(self.v), gamma.d1(self.v), gamma.d2(self.v)

    def evaluate(self, expr) -> np.ndarray:
        return np.broadcast_to(np.asarray(expr, float), self.v.shape)[self.mask]

    def kappa(self, p: float, regime: Regime) -> float:
        margin = self.lam_t + diffusivity_coefficient(self.v, p, regime) * self.E * self.be_m()
        return float(max(0.0, -np.min(margin[self.mask])))

    def be_m(self):
        m = self.geom.m
        if m == 1:
            return np.zeros_like(self.fxx)
        return self.fxx - self.fx**2 / (m - 1.0)


X_SYM, T_SYM = sp.symbols("x t", real=True)


class SymbolicBackend:
    """Exact calculus on an analytic pressure trajectory ``V(x, t)``, sampled at ``t_eval``."""

    def __init__(self, geom: GeometrySpec, nonlin: Nonlinearity, p: float, regime: Regime,
                 trajectory: sp.Expr, x_nodes: np.ndarray, t_eval: float):
        X, T = X_SYM, T_SYM
        self.geom, self.p, self.regime = geom, p, regime
        self.x_nodes = np.asarray(x_nodes, float)
        self.t_eval = float(t_eval)
        self.step = None
        self.t = T
        self.v = trajectory
        lam = geom.conformal.sym(T)
        self.E = sp.exp(-2 * lam)
        self.lam_t = sp.diff(lam, T)
        F = geom.potential.sym(X, T)
        self.fx = sp.diff(F, X)
        self.fxx = sp.diff(F, X, 2)
        vs = sp.Symbol("vs", positive=True)
        S = sigma_symbolic(nonlin, p, regime, T, X, vs)
        self.S = S.subs(vs, trajectory)
        self.Sv = sp.diff(S, vs).subs(vs, trajectory)
        self.Sx = sp.diff(S, X).subs(vs, trajectory)
        self.vx = sp.diff(trajectory, X)
        self.vxx = sp.diff(trajectory, X, 2)

    def dx(self, F):
        return sp.diff(F, X_SYM)

    def dxx(self, F):
        return sp.diff(F, X_SYM, 2)

    def dt(self, F):
        return sp.diff(F, T_SYM)

    def lapf(self, F):
        return self.E * (self.dxx(F) - self.fx * self.dx(F))

    def weight(self, zeta: TimeWeight):
        z = zeta.sym(T_SYM)
        return z, sp.diff(z, T_SYM)

    def aux(self, gamma: Auxiliary):
        vs = sp.Symbol("vs", positive=True)
        G = gamma.sym(vs)
        return tuple(e.subs(vs, self.v) for e in (G, sp.diff(G, vs), sp.diff(G, vs, 2)))

    def evaluate(self, expr) -> np.ndarray:
        fn = sp.lambdify((X_SYM, T_SYM), expr, modules="numpy", cse=True)
        out = fn(self.x_nodes, self.t_eval)
        return np.broadcast_to(np.asarray(out, float), self.x_nodes.shape).copy()

    def be_m(self):
        m = self.geom.m
        if m == 1:
            return sp.Integer(0)
        return self.fxx - self.fx**2 / (m - 1.0)

    def kappa(self, p: float, regime: Regime) -> float:
        coef = (1 - p) * self.v if regime == "I" else p * self.v ** (2 * (p - 1) / (2 * p - 1))
        margin = self.lam_t + coef * self.E * self.be_m()
        return float(max(0.0, -np.min(self.evaluate(margin))))


Backend = Union[DiscreteBackend, SymbolicBackend]


# ------------------------------------------------------------- jet algebra


class Jets:
    """Coordinate expressions of the tensor quantities built from ``v``."""

    def __init__(self, b: Backend, m: float):
        self.b = b
        E, vx, vxx = b.E, b.vx, b.vxx
        self.gs = E * vx**2
        self.hess_sq = E**2 * vxx**2
        self.hess_vv = E**2 * vxx * vx**2
        self.lap = E * vxx
        self.lapf = E * (vxx - b.fx * vx)
        self.fv = E * b.fx * vx
        self.ric_m = b.be_m() * E**2 * vx**2
        self.ric_f = b.fxx * E**2 * vx**2
        self.dtg = 2 * b.lam_t * E * vx**2
        self.v_grad_gs = 2 * E**2 * vx**2 * vxx
        self.v_sx = E * vx * b.Sx
        self.v_grad_sigma = self.v_sx + b.Sv * self.gs
        self.fv_sq_over = (self.fv**2 / (m - 1.0)) if m > 1 else 0 * self.fv

    def grad_pow_dot_grad_gs(self, s: float):
        """``<grad |grad v|^(s-2), grad |grad v|^2>`` without the removable singularity."""
        if s == 2:
            return 0 * self.gs
        return 2 * (s - 2) * self.gs ** ((s - 2) / 2) * self.hess_sq


# ---------------------------------------------------------------- entries


def _regime_params(prm: dict, need: tuple[str, ...]):
    missing = [k for k in need if k not in prm or prm[k] is None]
    if missing:
        raise DomainError(f"missing parameters {missing}")


def _evol_v_first(b, j, prm):
    p = b.p
    lhs = b.dt(b.v) - (1 - p) * b.v * b.lapf(b.v)
    return lhs, -j.gs - b.S


def _evol_v_second(b, j, prm):
    p = b.p
    c = p * b.v ** (2 * (p - 1) / (2 * p - 1))
    lhs = b.dt(b.v) - c * b.lapf(b.v)
    return lhs, p / (2 * p - 1) * b.v ** (1 / (1 - 2 * p)) * j.gs + b.S


def _w_first(b, j, beta):
    return j.gs / b.v**beta


def _op_first(b, Q):
    return b.dt(Q) - (1 - b.p) * b.v * b.lapf(Q)


def _evol_w_first(b, j, prm):
    p, m, beta = b.p, prm["m"], prm["beta"]
    v, S = b.v, b.S
    w = _w_first(b, j, beta)
    rhs = (
        -(j.dtg + 2 * (1 - p) * v * j.ric_m) / v**beta
        - 2 * (1 - p) / v**beta * (v * j.hess_sq + v * j.fv_sq_over - j.gs * j.lapf)
        - 2 * (1 - beta * (1 - p)) * j.v_grad_gs / v**beta
        + beta * j.gs * S / v ** (beta + 1)
        - beta * ((1 - p) * (beta + 1) - 1) * j.gs**2 / v ** (beta + 1)
        - 2 * j.v_grad_sigma / v**beta
    )
    return _op_first(b, w), rhs


def _ineq_w_first(b, j, prm, super_flow: bool):
    p, m, beta = b.p, prm["m"], prm["beta"]
    v, S = b.v, b.S
    w = _w_first(b, j, beta)
    w_x = b.E * (2 * b.vx * b.vxx / v**beta - beta * b.vx**3 / v ** (beta + 1))
    v_grad_w = b.E * b.vx * w_x
    if super_flow:
        curvature = 2 * prm["kappa"] * w
    else:
        curvature = -(j.dtg + 2 * (1 - p) * v * j.ric_m) / v**beta
    rhs = (
        curvature
        - 2 * (1 - beta * (1 - p)) * v_grad_w
        + (1 - p) * beta_polynomial(beta, p, m) * v ** (beta - 1) * w**2
        - 2 * j.v_sx / v**beta
        + (beta * S / v - 2 * b.Sv) * w
    )
    return _op_first(b, w), rhs


def _h_first(b, j, prm):
    zeta, zeta_t = b.weight(prm["zeta"])
    G, G1, G2 = b.aux(prm["Gamma"])
    s, q = prm["s"], prm["q"]
    H = zeta * j.gs ** (s / 2) / b.v**q + G
    return H, zeta, zeta_t, G1, G2


def _h_identity_first(b, j, prm):
    p, m, s, q = b.p, prm["m"], prm["s"], prm["q"]
    v, S = b.v, b.S
    H, z, z_t, G1, G2 = _h_first(b, j, prm)
    gpow = j.gs ** ((s - 2) / 2)
    rhs = (
        z_t * j.gs ** (s / 2) / v**q
        - s * z * gpow / v**q * (j.dtg / 2 + (1 - p) * v * j.ric_m)
        + s * (1 - p) * z * gpow / v**q * (j.gs * j.lapf - v * j.hess_sq - v * j.fv_sq_over)
        + s * (q * (1 - p) - 1) * z * j.v_grad_gs * gpow / v**q
        - q * (q * (1 - p) - p) * z * j.gs ** ((s + 2) / 2) / v ** (q + 1)
        - s * (1 - p) / (2 * v ** (q - 1)) * z * j.grad_pow_dot_grad_gs(s)
        - s * z * gpow / v**q * j.v_grad_sigma
        + q * z * j.gs ** (s / 2) * S / v ** (q + 1)
        - G1 * S
        - (G1 + (1 - p) * v * G2) * j.gs
    )
    return _op_first(b, H), rhs


def _h_ineq_first(b, j, prm, aux_source_sign: float = 1.0):
    p, m, s, q, k = b.p, prm["m"], prm["s"], prm["q"], prm["kappa"]
    v, S = b.v, b.S
    H, z, z_t, G1, G2 = _h_first(b, j, prm)
    lhs = _op_first(b, H) - 2 * (q * (1 - p) - 1) * b.E * b.vx * b.dx(H)
    poly = q * q - (2 - p) / (1 - p) * q + s * m / 4
    rhs = (
        j.gs ** (s / 2) / v**q * (z_t + s * k * z + z * (q * S / v - s * b.Sv))
        + z * (1 - p) * poly * j.gs ** ((s + 2) / 2) / v ** (q + 1)
        - s * z * j.gs ** ((s - 2) / 2) / v**q * j.v_sx
        + aux_source_sign * G1 * S
        - (1 - p) * ((2 * q * (1 - p) - 1) / (1 - p) * G1 + v * G2) * j.gs
    )
    return lhs, rhs


def _coef_second(b):
    p = b.p
    return p * b.v ** (2 * (p - 1) / (2 * p - 1)), b.v ** (1 / (1 - 2 * p))


def _op_second(b, Q):
    c, _ = _coef_second(b)
    return b.dt(Q) - c * b.lapf(Q)


def _ineq_w_second(b, j, prm):
    p, m = b.p, prm["m"]
    v = b.v
    c, e1 = _coef_second(b)
    w = j.gs
    rhs = (
        2 * p * ((m - 1) * (p - 1) ** 2 - 1) / (2 * p - 1) ** 2 * v ** (2 * p / (1 - 2 * p)) * w**2
        - (j.dtg + 2 * c * j.ric_m)
        + 2 * p**2 * e1 / (2 * p - 1) * j.v_grad_gs
        + 2 * j.v_sx
        + 2 * b.Sv * w
    )
    return _op_second(b, w), rhs


def _h_second(b, j, prm):
    zeta, zeta_t = b.weight(prm["zeta"])
    G, G1, G2 = b.aux(prm["Gamma"])
    H = zeta * j.gs ** (prm["s"] / 2) + G
    return H, zeta, zeta_t, G1, G2


def _lhs_h_second(b, H):
    p = b.p
    _, e1 = _coef_second(b)
    return _op_second(b, H) - 2 * p**2 * e1 / (2 * p - 1) * b.E * b.vx * b.dx(H)


def _h_identity_second(b, j, prm):
    p, m, s = b.p, prm["m"], prm["s"]
    v, S = b.v, b.S
    H, z, z_t, G1, G2 = _h_second(b, j, prm)
    c, e1 = _coef_second(b)
    gpow = j.gs ** ((s - 2) / 2)
    k1 = 2 * s * p * (p - 1) / (2 * p - 1)
    rhs = (
        z_t * j.gs ** (s / 2)
        - s * z * gpow * (j.dtg / 2 + c * j.ric_m)
        - k1 * z * e1 * gpow * j.hess_vv
        - s * p * z / (2 * p - 1) ** 2 * v ** (2 * p / (1 - 2 * p)) * j.gs ** ((s + 2) / 2)
        - s * z * c * gpow * j.hess_sq
        + k1 * z * e1 * j.gs ** (s / 2) * j.lap
        - (s / 2) * z * c * j.grad_pow_dot_grad_gs(s)
        - k1 * z * e1 * j.gs ** (s / 2) * j.fv
        - s * z * c * gpow * j.fv_sq_over
        + s * z * gpow * j.v_grad_sigma
        + G1 * S
        - p * e1 * (G1 + v * G2) * j.gs
    )
    return _lhs_h_second(b, H), rhs


def _h_ineq_second(b, j, prm):
    p, m, s, k = b.p, prm["m"], prm["s"], prm["kappa"]
    v, S = b.v, b.S
    H, z, z_t, G1, G2 = _h_second(b, j, prm)
    _, e1 = _coef_second(b)
    rhs = (
        (z_t + s * k * z + s * z * b.Sv) * j.gs ** (s / 2)
        + s * p * ((p - 1) ** 2 * (m - 1) - 1) / (2 * p - 1) ** 2 * z * v ** (2 * p / (1 - 2 * p))
        * j.gs ** ((s + 2) / 2)
        + s * z * j.gs ** ((s - 2) / 2) * j.v_sx
        + G1 * S
        - p * e1 * (G1 + v * G2) * j.gs
    )
    return _lhs_h_second(b, H), rhs


def _bochner_lhs(b, j):
    return b.lapf(j.gs) / 2 - b.E * b.vx * b.dx(b.lapf(b.v))


def _bochner_eq(b, j, prm):
    return _bochner_lhs(b, j), j.hess_sq + j.ric_f


def _bochner_ineq(b, j, prm):
    m = prm["m"]
    return j.lapf**2 / m + j.ric_m, _bochner_lhs(b, j)


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    kind: Literal["Identity", "Inequality"]
    regime: Regime
    build: Callable
    needs: tuple[str, ...] = ()
    super_flow: bool = False
    description: str = ""


CATALOG: dict[str, CatalogEntry] = {
    e.id: e
    for e in [
        CatalogEntry("EvolV_I", "Identity", "I", _evol_v_first,
                     description="pressure equation, first regime"),
        CatalogEntry("EvolV_II", "Identity", "II", _evol_v_second,
                     description="pressure equation, second regime"),
        CatalogEntry("EvolW_I", "Identity", "I", _evol_w_first, ("beta",),
                     description="evolution of |grad v|^2 / v^beta"),
        CatalogEntry("IneqW_I", "Inequality", "I", lambda b, j, prm: _ineq_w_first(b, j, prm, False),
                     ("beta",), description="upper bound for L[|grad v|^2 / v^beta]"),
        CatalogEntry("IneqW_I_super", "Inequality", "I", lambda b, j, prm: _ineq_w_first(b, j, prm, True),
                     ("beta",), True, "same bound under the super flow condition"),
        CatalogEntry("H_Identity_I", "Identity", "I", _h_identity_first, ("s", "q"),
                     description="evolution of zeta |grad v|^s / v^q + Gamma(v)"),
        CatalogEntry("H_Ineq_I", "Inequality", "I", _h_ineq_first, ("s", "q"), True,
                     "drift-corrected bound for the first-regime H"),
        CatalogEntry("H_Ineq_I_derived", "Inequality", "I", lambda b, j, prm: _h_ineq_first(b, j, prm, -1.0),
                     ("s", "q"), True, "first-regime H bound with the Gamma'(v) Sigma term carried as derived"),
        CatalogEntry("IneqW_II", "Inequality", "II", _ineq_w_second,
                     description="upper bound for L[|grad v|^2], second regime"),
        CatalogEntry("H_Identity_II", "Identity", "II", _h_identity_second, ("s",),
                     description="evolution of zeta |grad v|^s + Gamma(v)"),
        CatalogEntry("H_Ineq_II", "Inequality", "II", _h_ineq_second, ("s",), True,
                     "drift-corrected bound for the second-regime H"),
        CatalogEntry("BochnerEq", "Identity", "I", _bochner_eq,
                     description="weighted Bochner formula"),
        CatalogEntry("BochnerIneq", "Inequality", "I", _bochner_ineq,
                     description="Bochner lower bound with the m-Bakry-Emery tensor"),
        CatalogEntry("CothBound", "Inequality", "I", None,
                     description="sqrt(k) coth(sqrt(k) rho) <= (2 + sqrt(k) R)/R on [R/2, R]"),
        CatalogEntry("CutoffLaplacian", "Identity", "I", None,
                     description="chain rule for the weighted Laplacian of a radial cutoff"),
    ]
}


def resolve_params(entry: CatalogEntry, geom: GeometrySpec, p: float, params: dict | None) -> dict:
    prm = {"m": geom.m, "s": 2.0, "q": 1.2, "zeta": ConstantWeight(1.0), "Gamma": ZeroAuxiliary()}
    prm.update({k: v for k, v in (params or {}).items() if v is not None})
    prm["p"] = p
    if "beta" in entry.needs and prm.get("beta") is None:
        prm["beta"] = beta_selection(p, geom.m).beta
    if prm["s"] < 2:
        raise DomainError("s must be at least 2")
    return prm


def evaluate_entry(entry: CatalogEntry, b: Backend, prm: dict):
    """Return ``(lhs, rhs, extra)`` arrays at the backend's evaluation points."""
    prm = dict(prm)
    if entry.super_flow:
        prm["kappa"] = b.kappa(b.p, entry.regime)
    j = Jets(b, prm["m"])
    lhs, rhs = entry.build(b, j, prm)
    extra = {}
    if entry.id == "BochnerIneq":
        middle = j.lap**2 / 1.0 + j.ric_f
        extra["chain_min"] = float(np.min(b.evaluate(middle - (j.lapf**2 / prm["m"] + j.ric_m))))
    if entry.super_flow:
        extra["kappa"] = prm["kappa"]
    return b.evaluate(lhs), b.evaluate(rhs), extra


# ----------------------------------------------------------------- sources


@dataclass(frozen=True)
class SolvedSource:
    """Grid solutions of a scenario, refined once per level."""

    scenario: ScenarioSpec


@dataclass(frozen=True)
class AnalyticSource:
    """First-order Taylor trajectory in time of a smooth density profile.

    ``profile`` maps a sympy symbol ``x`` to ``u0(x)``. The trajectory is
    ``U = u0 + (t - t_star) * (Delta_f(u0^p) + N)`` evaluated at ``t = t_star``,
    so first time derivatives there are those of a true solution.
    """

    geometry: GeometrySpec
    nonlinearity: Nonlinearity
    p: float
    profile: Callable[[sp.Symbol], sp.Expr]
    t_star: float = 0.0
    x_nodes: tuple = tuple(np.linspace(0.3, 5.9, 15))


@dataclass(frozen=True)
class OracleSource:
    """Exact quadratic pressure solution sampled at one time."""

    geometry: GeometrySpec
    nonlinearity: Nonlinearity
    oracle: QuadraticPressure
    t_eval: float = 0.05
    x_nodes: tuple = tuple(np.linspace(-1.0, 1.0, 11))


Source = Union[SolvedSource, AnalyticSource, OracleSource]


def analytic_trajectory(src: AnalyticSource, regime: Regime) -> sp.Expr:
    X, T = X_SYM, T_SYM
    geom, p = src.geometry, sp.Float(src.p)
    u0 = src.profile(X)
    lam = geom.conformal.sym(T).subs(T, src.t_star)
    F = geom.potential.sym(X, T)
    fx = sp.diff(F, X).subs(T, src.t_star)
    w = u0**p
    rate = sp.exp(-2 * lam) * (sp.diff(w, X, 2) - fx * sp.diff(w, X)) + src.nonlinearity.sym(
        sp.Float(src.t_star), X, u0
    )
    U = u0 + (T - src.t_star) * rate
    if regime == "I":
        return p / (1 - p) * U ** (p - 1)
    return U ** (p - sp.Rational(1, 2))


def _backends(entry: CatalogEntry, src: Source, levels: int):
    regime = entry.regime
    if isinstance(src, SolvedSource):
        for k in range(levels):
            scn = src.scenario.refined(k)
            fld = pressure_transform(solve(scn), scn.p, regime)
            yield DiscreteBackend(scn.geometry, scn.nonlinearity, scn.p, regime, fld), scn
    elif isinstance(src, AnalyticSource):
        traj = analytic_trajectory(src, regime)
        yield SymbolicBackend(src.geometry, src.nonlinearity, src.p, regime, traj,
                              np.asarray(src.x_nodes), src.t_star), None
    else:
        if regime != "I":
            raise DomainError("the quadratic pressure oracle is a first-regime solution")
        src.oracle.check_geometry(src.geometry, src.nonlinearity)
        traj = src.oracle.sym_pressure(X_SYM, T_SYM)
        yield SymbolicBackend(src.geometry, src.nonlinearity, src.oracle.p, regime, traj,
                              np.asarray(src.x_nodes), src.t_eval), None


# ------------------------------------------------------------------ reports


@dataclass
class LevelResult:
    nx: int | None
    dx: float | None
    residual_linf: float
    residual_l2: float
    max_violation: float
    c_fit: float | None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "nx": self.nx,
            "dx": self.dx,
            "residual_linf": self.residual_linf,
            "residual_l2": self.residual_l2,
            "max_violation": self.max_violation,
            "c_fit": self.c_fit,
            **self.extra,
        }


@dataclass
class IdentityReport:
    id: str
    kind: str
    source: str
    per_level: list[LevelResult]
    orders_linf: list[float]
    orders_l2: list[float]
    passed: bool
    criteria: dict

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "source": self.source,
            "per_level": [lv.as_dict() for lv in self.per_level],
            "orders_linf": self.orders_linf,
            "orders_l2": self.orders_l2,
            "criteria": self.criteria,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class Tolerances:
    order: float = 2.0
    order_tol: float = 0.3
    analytic_residual: float = 1e-9
    c_spread: float = 0.5
    finest_violation: float = 1e-4


def _orders(errors: list[float], steps: list[float]) -> list[float]:
    out = []
    for e0, e1, h0, h1 in zip(errors, errors[1:], steps, steps[1:]):
        out.append(math.log(e0 / e1) / math.log(h0 / h1) if e0 > 0 and e1 > 0 else float("nan"))
    return out


def check_identity(
    entry_id: str,
    source: Source,
    params: dict | None = None,
    levels: int = 4,
    tol: Tolerances = Tolerances(),
) -> IdentityReport:
    """Evaluate one catalog entry on a source; see :class:`Tolerances` for pass rules.

    Identities on grid sources must converge at the target order between
    consecutive levels; analytic identities must vanish to roundoff. Inequalities
    may be violated only by a discretisation-sized amount ``c dx^2`` with ``c``
    roughly level independent.
    """
    if entry_id not in CATALOG:
        raise DomainError(f"unknown catalog entry {entry_id!r}")
    entry = CATALOG[entry_id]
    if entry_id == "CothBound":
        return coth_bound_check(**(params or {}))
    if entry_id == "CutoffLaplacian":
        from .estimates import cutoff_laplacian_check

        return cutoff_laplacian_check(source, params or {}, levels, tol)
    if isinstance(source, SolvedSource) and levels < 2 and entry.kind == "Identity":
        raise DomainError("grid identities need at least two levels")
    geom = source.scenario.geometry if isinstance(source, SolvedSource) else source.geometry
    p = source.scenario.p if isinstance(source, SolvedSource) else (
        source.p if isinstance(source, AnalyticSource) else source.oracle.p
    )
    prm = resolve_params(entry, geom, p, params)
    results = []
    for b, scn in _backends(entry, source, levels if isinstance(source, SolvedSource) else 1):
        lhs, rhs, extra = evaluate_entry(entry, b, prm)
        if not (np.all(np.isfinite(lhs)) and np.all(np.isfinite(rhs))):
            raise DomainError(f"{entry_id}: non-finite values on the evaluation set")
        r = lhs - rhs
        viol = float(np.max(r))
        dx = b.step
        results.append(
            LevelResult(
                nx=None if scn is None else b.grid.n,
                dx=dx,
                residual_linf=float(np.max(np.abs(r))),
                residual_l2=float(np.sqrt(np.mean(r**2))),
                max_violation=viol,
                c_fit=None if dx is None else max(0.0, viol) / dx**2,
                extra=extra,
            )
        )
    grid_source = isinstance(source, SolvedSource)
    steps = [lv.dx for lv in results]
    o_inf = _orders([lv.residual_linf for lv in results], steps) if grid_source else []
    o_l2 = _orders([lv.residual_l2 for lv in results], steps) if grid_source else []
    criteria: dict = {}
    if entry.kind == "Identity":
        if grid_source:
            ok = all(abs(o - tol.order) <= tol.order_tol for o in o_inf)
            criteria = {"target_order": tol.order, "order_tol": tol.order_tol}
        else:
            ok = results[0].residual_linf <= tol.analytic_residual
            criteria = {"max_residual": tol.analytic_residual}
    else:
        if grid_source:
            cs = [lv.c_fit for lv in results if lv.c_fit > 0]
            spread_ok = True
            if cs:
                mean_c = sum(cs) / len(cs)
                spread_ok = all(abs(c - mean_c) <= tol.c_spread * mean_c for c in cs)
            ok = spread_ok and results[-1].max_violation <= tol.finest_violation
            criteria = {"c_spread": tol.c_spread, "finest_violation": tol.finest_violation}
        else:
            ok = results[0].max_violation <= tol.analytic_residual
            criteria = {"max_violation": tol.analytic_residual}
        if entry.id == "BochnerIneq":
            ok = ok and all(lv.extra["chain_min"] >= -1e-9 * max(1.0, lv.residual_linf) for lv in results)
    return IdentityReport(
        id=entry_id,
        kind=entry.kind,
        source=type(source).__name__,
        per_level=results,
        orders_linf=o_inf,
        orders_l2=o_l2,
        passed=bool(ok),
        criteria=criteria,
    )


# ------------------------------------------------------- scalar inequalities


def coth_bound_check(k_values=(0.25, 1.0, 4.0), R_values=(0.5, 1.0, 2.0, 5.0), samples: int = 257,
                     **_ignored) -> IdentityReport:
    """Check ``sqrt(k) coth(sqrt(k) rho) <= (2 + sqrt(k) R)/R`` for ``rho`` in ``[R/2, R]``."""
    worst = -math.inf
    for k in k_values:
        if k <= 0:
            raise DomainError("k must be positive")
        for R in R_values:
            rho = np.linspace(R / 2.0, R, samples)
            lhs = math.sqrt(k) / np.tanh(math.sqrt(k) * rho)
            worst = max(worst, float(np.max(lhs - (2.0 + math.sqrt(k) * R) / R)))
    level = LevelResult(None, None, abs(worst), abs(worst), worst, None)
    return IdentityReport("CothBound", "Inequality", "scalar", [level], [], [], worst <= 0.0,
                          {"max_violation": 0.0})


def variational_quotient(A, xi) -> np.ndarray:
    """``[(A(xi, xi) - tr A)/|A|]^2`` for (batches of) symmetric ``A`` and unit ``xi``."""
    A, xi = np.asarray(A, float), np.asarray(xi, float)
    quad = np.einsum("...i,...ij,...j->...", xi, A, xi)
    norm = np.linalg.norm(A, axis=(-2, -1))
    return ((quad - np.trace(A, axis1=-2, axis2=-1)) / norm) ** 2


def matrix_variational_check(n: int, samples: int = 100_000, seed: int = 0, restarts: int = 8) -> dict:
    """Sample and maximise ``[A(xi,xi)/|A| - tr A/|A|]^2`` over symmetric ``A`` and unit ``xi``.

    The supremum is ``n - 1``. Returns the sampled maximum, the optimised
    maximum and the pass flag for the bound (sampled ``<= n - 1 + 1e-9``,
    optimised ``>= n - 1 - 1e-6``).
    """
    if n < 2:
        raise DomainError("need n >= 2")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((samples, n, n))
    A = 0.5 * (A + np.swapaxes(A, 1, 2))
    xi = rng.standard_normal((samples, n))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    sampled = float(variational_quotient(A, xi).max())

    iu = np.triu_indices(n)

    def objective(z):
        M = np.zeros((n, n))
        M[iu] = z[: iu[0].size]
        M = M + np.triu(M, 1).T
        x = z[iu[0].size:]
        return -float(variational_quotient(M, x / np.linalg.norm(x)))

    best = -math.inf
    for _ in range(restarts):
        z0 = rng.standard_normal(iu[0].size + n)
        res = minimize(objective, z0, method="BFGS", options={"gtol": 1e-12, "maxiter": 2000})
        best = max(best, -float(res.fun))
    bound = n - 1.0
    return {
        "n": n,
        "samples": samples,
        "seed": seed,
        "bound": bound,
        "sampled_max": sampled,
        "optimized_max": best,
        "pass": bool(sampled <= bound + 1e-9 and best >= bound - 1e-6 and best <= bound + 1e-9),
    }
