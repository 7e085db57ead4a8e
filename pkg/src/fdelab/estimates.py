"""Cutoff construction, gradient-estimate verifiers, maximum-principle bounds and Liouville probes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .errors import DomainError, HypothesisFailure
from .exponents import (
    ExponentData,
    beta_selection,
    critical_exponents,
    q_admissible,
    second_regime_window,
)
from .fields import SpaceTimeField
from .geometry import Cylinder, GeometrySpec, curvature_bounds, superflow_margin
from .nonlinearity import (
    HYPOTHESES,
    Auxiliary,
    Nonlinearity,
    ZeroAuxiliary,
    condition_check,
    evaluate_hypothesis,
    hypotheses_for,
    sigma,
)
from .solver import ScenarioSpec, backward_positivity_time, initial_values, pressure_transform, solve

# ------------------------------------------------------------------ cutoff


def _smooth_step(y):
    """``S(y)``: 0 for ``y <= 0``, 1 for ``y >= 1``, flat to all orders at both ends.

    Returns ``S, S', S''``.
    """
    y = np.asarray(y, float)
    inside = (y > 0.0) & (y < 1.0)
    S = np.where(y >= 1.0, 1.0, 0.0)
    dS = np.zeros_like(y)
    d2S = np.zeros_like(y)
    yi = y[inside]
    h = 1.0 / yi - 1.0 / (1.0 - yi)
    s_in = 0.5 * (1.0 - np.tanh(0.5 * h))  # logistic of -h, overflow-free
    k1 = 1.0 / yi**2 + 1.0 / (1.0 - yi) ** 2
    k1p = -2.0 / yi**3 + 2.0 / (1.0 - yi) ** 3
    ds_in = s_in * (1.0 - s_in) * k1
    S[inside] = s_in
    dS[inside] = ds_in
    d2S[inside] = ds_in * (1.0 - 2.0 * s_in) * k1 + s_in * (1.0 - s_in) * k1p
    return S, dS, d2S


@dataclass(frozen=True)
class CutoffFunction:
    """``eta(rho, t) = psi(rho) theta(t)`` with ``psi = phi^kappa`` and ``theta = xi^2``.

    ``phi`` is a smooth step equal to 1 on ``[0, R/2]`` and 0 beyond ``R``; ``xi``
    ramps linearly from 0 at ``t0 - T`` to 1 at ``tau`` and stays at 1 afterwards.
    """

    cyl: Cylinder
    tau: float
    a: float
    kappa: int

    @property
    def ramp(self) -> float:
        return self.tau - self.cyl.t0 + self.cyl.T

    def radial(self, rho):
        R = self.cyl.R
        S, dS, d2S = _smooth_step(2.0 * (R - np.asarray(rho, float)) / R)
        phi, dphi, d2phi = S, -2.0 / R * dS, 4.0 / R**2 * d2S
        k = self.kappa
        psi = phi**k
        dpsi = k * phi ** (k - 1) * dphi
        d2psi = k * (k - 1) * phi ** (k - 2) * dphi**2 + k * phi ** (k - 1) * d2phi
        return psi, dpsi, d2psi

    def temporal(self, t):
        xi = np.clip((np.asarray(t, float) - (self.cyl.t0 - self.cyl.T)) / self.ramp, 0.0, 1.0)
        dxi = np.where((xi > 0.0) & (xi < 1.0), 1.0 / self.ramp, 0.0)
        return xi**2, 2.0 * xi * dxi

    def evaluate(self, rho, t):
        """``eta, d_rho eta, d_rho^2 eta, d_t eta`` on broadcast ``(rho, t)``."""
        rho, t = np.broadcast_arrays(np.asarray(rho, float), np.asarray(t, float))
        psi, dpsi, d2psi = self.radial(rho)
        th, dth = self.temporal(t)
        return psi * th, dpsi * th, d2psi * th, psi * dth


def build_cutoff(cyl: Cylinder, tau: float, a: float = 0.5) -> CutoffFunction:
    if not (cyl.t0 - cyl.T < tau <= cyl.t0):
        raise DomainError("tau must lie in (t0 - T, t0]")
    if not 0.0 < a < 1.0:
        raise DomainError("a must lie in (0, 1)")
    return CutoffFunction(cyl, tau, a, max(2, math.ceil(1.0 / (1.0 - a))))


@dataclass
class CutoffReport:
    support_and_range: bool
    plateau: bool
    time_derivative: bool
    radial_bounds: bool
    c_achieved: float
    c_target: float
    c_a: float
    a: float
    samples: int

    @property
    def passed(self) -> bool:
        return (self.support_and_range and self.plateau and self.time_derivative and self.radial_bounds
                and math.isfinite(self.c_a))

    def as_dict(self) -> dict:
        return {
            "support_and_range": self.support_and_range,
            "plateau": self.plateau,
            "time_derivative": self.time_derivative,
            "radial_bounds": self.radial_bounds,
            "c_achieved": self.c_achieved,
            "c_target": self.c_target,
            "c_a": self.c_a,
            "a": self.a,
            "samples": self.samples,
            "pass": self.passed,
        }


def check_cutoff(cut: CutoffFunction, samples: int = 512, c: float = 2.0) -> CutoffReport:
    """Check the four cutoff properties on a ``samples x samples`` grid of ``[0, 1.5R] x [t0-T, t0]``."""
    cyl = cut.cyl
    rho = np.linspace(0.0, 1.5 * cyl.R, samples)
    t = np.linspace(cyl.t0 - cyl.T, cyl.t0, samples)
    rr, tt = np.meshgrid(rho, t, indexing="ij")
    eta, d_rho, d_rho2, d_t = cut.evaluate(rr, tt)
    eps = 1e-12

    support = bool(np.all(eta[rr > cyl.R] == 0.0) and np.all((eta >= 0.0) & (eta <= 1.0)))
    inner = rr <= cyl.R / 2.0
    plateau = bool(np.all(np.abs(eta[inner & (tt >= cut.tau)] - 1.0) <= eps) and np.all(d_rho[inner] == 0.0))

    pos = eta > 0.0
    ratio = np.zeros_like(eta)
    ratio[pos] = np.abs(d_t[pos]) / np.sqrt(eta[pos])
    c_achieved = float(ratio.max() * cut.ramp)
    bottom_zero = bool(np.all(eta[:, 0] == 0.0))
    time_ok = bottom_zero and bool(c_achieved <= c * (1.0 + 1e-9)) and bool(np.all(d_t[~pos] == 0.0))

    R, a = cyl.R, cut.a
    nonpos = bool(np.all(d_rho <= 0.0))
    scaled = np.zeros_like(eta)
    scaled[pos] = np.maximum(np.abs(d_rho[pos]) * R, np.abs(d_rho2[pos]) * R**2) / eta[pos] ** a
    dead = ~pos
    dead_ok = bool(np.all(d_rho[dead] == 0.0) and np.all(d_rho2[dead] == 0.0))
    c_a = float(scaled.max())
    return CutoffReport(
        support_and_range=support,
        plateau=plateau,
        time_derivative=time_ok,
        radial_bounds=nonpos and dead_ok and math.isfinite(c_a),
        c_achieved=c_achieved,
        c_target=c,
        c_a=c_a,
        a=a,
        samples=samples,
    )


def cutoff_laplacian_check(source, params: dict, levels: int, tol):
    """Chain rule ``Delta_f eta = eta_rr |grad rho|^2 + eta_r Delta_f rho`` on refined grids.

    In the 1-D model ``|grad rho| = 1`` and ``Delta_f rho = -exp(-lam) f_x sign(x - x0)``
    away from ``x0``. The weighted comparison margin
    ``(m-1) sqrt(k) coth(sqrt(k) rho) - Delta_f rho`` on the annulus is reported too.
    """
    from .identities import IdentityReport, LevelResult, SolvedSource, _orders

    if not isinstance(source, SolvedSource):
        raise DomainError("the cutoff chain rule is checked on grid sources")
    scn = source.scenario
    geom = scn.geometry
    L = geom.domain.length
    x_mid = 0.5 * L if geom.closed else 0.5 * (geom.domain.x_lo + geom.domain.x_hi)
    t_eval = float(params.get("t", scn.t_start))
    lam = float(geom.conformal.value(t_eval))
    R = float(params.get("R", 0.3 * L * math.exp(lam)))
    x0 = float(params.get("x0", x_mid))
    cyl = Cylinder(x0, t_eval, R, 1.0)
    cut = build_cutoff(cyl, t_eval, float(params.get("a", 0.5)))
    results = []
    for k in range(levels):
        grid = geom.grid(scn.refined(k).nx)
        x = grid.x
        offset = x - x0
        if geom.closed:
            offset = (offset + L / 2.0) % L - L / 2.0
        rho = math.exp(lam) * np.abs(offset)
        eta, d_r, d_rr, _ = cut.evaluate(rho, t_eval)
        fx = geom.potential.dx(x, t_eval)
        lapf_rho = -math.exp(-lam) * fx * np.sign(offset)
        lhs = geom.metric_factor(t_eval) * (grid.d2(eta) - fx * grid.d1(eta))
        rhs = d_rr + d_r * lapf_rho
        inner = slice(None) if geom.closed else slice(3, -3)
        r = (lhs - rhs)[inner]
        annulus = (rho > R / 2.0) & (rho <= R)
        bounds = curvature_bounds(geom, None, grid, np.array([t_eval]))
        if bounds.k > 0:
            comparison = (geom.m - 1) * math.sqrt(bounds.k) / np.tanh(math.sqrt(bounds.k) * rho[annulus])
        else:
            comparison = (geom.m - 1) / rho[annulus]
        margin = float(np.min(comparison - lapf_rho[annulus])) if annulus.any() else float("nan")
        results.append(LevelResult(grid.n, grid.dx, float(np.max(np.abs(r))), float(np.sqrt(np.mean(r**2))),
                                   float(np.max(r)), None, {"comparison_margin": margin}))
    steps = [lv.dx for lv in results]
    o_inf = _orders([lv.residual_linf for lv in results], steps)
    o_l2 = _orders([lv.residual_l2 for lv in results], steps)
    ok = all(abs(o - tol.order) <= tol.order_tol for o in o_inf)
    return IdentityReport("CutoffLaplacian", "Identity", "SolvedSource", results, o_inf, o_l2, ok,
                          {"target_order": tol.order, "order_tol": tol.order_tol})


# ------------------------------------------------------- gradient estimates

ESTIMATE_IDS = ("I_local", "I_global", "I_static", "II_local", "II_global", "II_static")


@dataclass
class EstimateReport:
    id: str
    inputs: dict
    M: float
    k: float
    h: float
    kappa: float | None
    ratio_max: float
    C_star: float
    sup_terms: dict
    degenerate_nodes: int
    verified_nodes: int
    per_level: list = field(default_factory=list)
    passed: bool = True
    worst_point: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "inputs": self.inputs,
            "M": self.M,
            "k": self.k,
            "h": self.h,
            "kappa": self.kappa,
            "ratio_max": self.ratio_max,
            "C_star": self.C_star,
            "sup_terms": self.sup_terms,
            "degenerate_nodes": self.degenerate_nodes,
            "verified_nodes": self.verified_nodes,
            "worst_point": self.worst_point,
            "per_level": self.per_level,
            "pass": self.passed,
        }


def _window(regime: str, exps: ExponentData) -> None:
    p = exps.p
    if regime == "I" and not (exps.p_c < p < 1.0):
        raise DomainError(f"p={p} outside ({exps.p_c}, 1)")
    if regime == "II" and not (exps.p_0 < p < 1.0):
        raise DomainError(f"p={p} outside ({exps.p_0}, 1)")


def estimate_bracket(
    est_id: str, exps: ExponentData, M: float, k: float, h: float, R: float, elapsed: np.ndarray,
    sup_source: float, sup_drift: float,
) -> np.ndarray:
    """Bracket of the chosen estimate evaluated at elapsed times ``t - t0 + T > 0``."""
    p = exps.p
    root_t = 1.0 / np.sqrt(elapsed)
    local = k**0.25 / math.sqrt(R) + 1.0 / R + math.sqrt(k)
    if est_id.startswith("I_"):
        beta = exps.beta
        low, high = M ** ((1.0 - beta) / 2.0), M ** (1.0 - beta / 2.0)
    else:
        low, high = M ** (p / (2.0 * p - 1.0)), M
    sups = sup_source + sup_drift
    if est_id.endswith("_local"):
        return math.sqrt(h) * low + local * high + low * root_t + sups
    if est_id.endswith("_global"):
        return math.sqrt(k) * high + (math.sqrt(h) + root_t) * low + sups
    return local * high + low * root_t + sups


def verify_estimate(
    est_id: str,
    fld: SpaceTimeField,
    geom: GeometrySpec,
    nonlin: Nonlinearity,
    exps: ExponentData,
    cyl: Cylinder,
) -> EstimateReport:
    """Ratio of the gradient quantity to the estimate's bracket over the verification region.

    ``C*`` is the largest ratio. Nodes where the bracket vanishes are excluded and counted.
    """
    if est_id not in ESTIMATE_IDS:
        raise DomainError(f"unknown estimate {est_id!r}")
    regime = "I" if est_id.startswith("I_") else "II"
    _window(regime, exps)
    if est_id.endswith("_global") and not geom.closed:
        raise DomainError("global estimates are checked on the closed circle")
    if est_id.endswith("_static") and not geom.static:
        raise DomainError("static estimates need a time-independent metric and potential")
    times = fld.times
    if times[0] > cyl.t0 - cyl.T + 1e-9 or times[-1] < cyl.t0 - 1e-9:
        raise DomainError("field does not cover the cylinder's time window")
    p = exps.p
    vfield = pressure_transform(fld, p, regime)
    V = vfield.values
    grid = fld.grid
    t = times[:, None]
    x = grid.x[None, :]
    grad = np.sqrt(geom.metric_factor(t)) * np.abs(grid.d1(V))
    lhs = grad / V ** (exps.beta / 2.0) if regime == "I" else grad

    in_window = (times >= cyl.t0 - cyl.T - 1e-12) & (times <= cyl.t0 + 1e-12)
    if est_id.endswith("_global"):
        sup_mask = np.repeat(in_window[:, None], grid.n, axis=1)
        check_mask = sup_mask & (times[:, None] > cyl.t0 - cyl.T + 1e-12)
        bounds = curvature_bounds(geom, None, grid, times[in_window])
    else:
        sup_mask = cyl.mask(geom, grid, times)
        check_mask = cyl.scaled(0.5).mask(geom, grid, times, open_bottom=True)
        bounds = curvature_bounds(geom, cyl, grid, times[in_window])
    if not grid.periodic:
        check_mask[:, [0, -1]] = False
    if not check_mask.any():
        raise DomainError("verification region contains no nodes")
    h = 0.0 if est_id.endswith("_static") else bounds.h
    M = float(V[sup_mask].max())
    S = sigma(nonlin, p, regime, t, x, V)
    if regime == "I":
        beta = exps.beta
        source = (np.abs(S.d_x) / V ** ((3.0 * beta - 2.0) / 2.0)) ** (1.0 / 3.0)
        drift = V ** ((1.0 - beta) / 2.0) * np.sqrt(np.maximum(beta * S.value / V - 2.0 * S.d_v, 0.0))
    else:
        source = V ** (2.0 * p / (3.0 * (2.0 * p - 1.0))) * np.abs(S.d_x) ** (1.0 / 3.0)
        drift = V ** (p / (2.0 * p - 1.0)) * np.sqrt(np.maximum(S.d_v, 0.0))
    sup_source = float(source[sup_mask].max())
    sup_drift = float(drift[sup_mask].max())
    elapsed = np.broadcast_to(t - cyl.t0 + cyl.T, V.shape)
    B = np.full(V.shape, np.nan)
    B[check_mask] = estimate_bracket(est_id, exps, M, bounds.k, h, cyl.R, elapsed[check_mask], sup_source, sup_drift)
    good = check_mask & (B > 0.0)
    degenerate = int(np.count_nonzero(check_mask & ~(B > 0.0)))
    ratio = np.zeros(V.shape)
    ratio[good] = lhs[good] / B[good]
    idx = np.unravel_index(int(np.argmax(np.where(good, ratio, -np.inf))), V.shape)
    ratio_max = float(ratio[idx]) if good.any() else 0.0
    inputs = {
        "p": p,
        "m": geom.m,
        "beta": exps.beta if regime == "I" else None,
        "cylinder": {"x0": cyl.x0, "t0": cyl.t0, "R": cyl.R, "T": cyl.T},
        "nx": grid.n,
    }
    return EstimateReport(
        id=est_id,
        inputs=inputs,
        M=M,
        k=bounds.k,
        h=h,
        kappa=None,
        ratio_max=ratio_max,
        C_star=ratio_max,
        sup_terms={"source": sup_source, "drift": sup_drift},
        degenerate_nodes=degenerate,
        verified_nodes=int(np.count_nonzero(good)),
        worst_point={"t": float(times[idx[0]]), "x": float(grid.x[idx[1]]), "bracket": float(B[idx])},
    )


def estimate_stability(
    est_id: str,
    scn: ScenarioSpec,
    cyl: Cylinder,
    levels: int = 3,
    beta: float | None = None,
    max_variation: float = 0.25,
) -> EstimateReport:
    """Run the verifier on ``levels`` refinements; pass iff ``C*`` is finite and stable.

    Variation is measured relative to the finest level.
    """
    exps = beta_selection(scn.p, scn.geometry.m, beta) if est_id.startswith("I_") else _second_exps(scn)
    reports = []
    for k in range(levels):
        s = scn.refined(k)
        reports.append(verify_estimate(est_id, solve(s), s.geometry, s.nonlinearity, exps, cyl))
    cs = [r.C_star for r in reports]
    finest = cs[-1]
    variation = max(abs(c - finest) for c in cs) / finest if finest > 0 else 0.0
    rep = reports[-1]
    rep.per_level = [{"nx": r.inputs["nx"], "C_star": r.C_star, "M": r.M, "k": r.k} for r in reports]
    rep.passed = bool(all(math.isfinite(c) for c in cs) and variation < max_variation)
    rep.inputs["variation"] = variation
    rep.inputs["max_variation"] = max_variation
    return rep


def _second_exps(scn: ScenarioSpec) -> ExponentData:
    p_c, p_0 = critical_exponents(scn.geometry.m)
    return ExponentData(p=scn.p, m=scn.geometry.m, p_c=p_c, p_0=p_0, regime_II=p_0 < scn.p < 1.0,
                        regime_I=p_c < scn.p < 1.0)


# -------------------------------------------------------- maximum principles

MAX_PRINCIPLE_IDS = ("Cor6_4", "Cor6_5", "Cor11_3", "Cor11_4")


def time_weighted_prefactor(p: float) -> float:
    """Constant in the second-regime time-weighted bound, ``(2p-1)^2 / (8 p^3)``."""
    return (2.0 * p - 1.0) ** 2 / (8.0 * p**3)


def first_regime_time_weighted_prefactor(p: float, q: float) -> float:
    """``1 / ((1-q)[(1-p) q - 1])``; positive for ``1 < q < 1/(1-p)``."""
    return 1.0 / ((1.0 - q) * ((1.0 - p) * q - 1.0))


def exponential_bound(initial_max: float, aux_now, kappa: float, a: float, s: float, t):
    """``exp(s (kappa + a) t) [initial_max - Gamma(v(x, t))]``."""
    return np.exp(s * (kappa + a) * np.asarray(t, float)) * (initial_max - aux_now)


@dataclass
class MaxPrincipleReport:
    id: str
    inputs: dict
    kappa: float
    prefactor: float | None
    worst_violation: float
    worst_point: dict
    slack: float
    tolerance: float
    hypotheses: list
    passed: bool

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "inputs": self.inputs,
            "kappa": self.kappa,
            "prefactor": self.prefactor,
            "worst_violation": self.worst_violation,
            "worst_point": self.worst_point,
            "slack": self.slack,
            "tolerance": self.tolerance,
            "hypotheses": self.hypotheses,
            "pass": self.passed,
        }


def _check_bullets(result_id: str, regime: str, fld: SpaceTimeField, V: np.ndarray, geom: GeometrySpec,
                   nonlin: Nonlinearity, prm: dict, hyp_tol: float) -> list[dict]:
    grid = fld.grid
    t = fld.times[:, None]
    x = grid.x[None, :]
    out = []
    for hyp in hypotheses_for(result_id):
        if hyp.field_dependent:
            S = sigma(nonlin, prm["p"], regime, t, x, V)
            pairing = geom.metric_factor(t) * grid.d1(V) * S.d_x
            margin = pairing if result_id.startswith("Cor6") else -pairing
        else:
            margin = evaluate_hypothesis(hyp, nonlin, prm, t, x, fld.values)
        idx = np.unravel_index(int(np.argmin(margin)), margin.shape)
        worst = float(margin[idx])
        row = {
            "hypothesis": hyp.id,
            "text": hyp.text,
            "worst_value": worst,
            "holds": bool(worst >= -hyp_tol),
            "worst_point": {"t": float(fld.times[idx[0]]), "x": float(grid.x[idx[1]])},
        }
        out.append(row)
        if not row["holds"]:
            raise HypothesisFailure(hyp.id, hyp.text, row)
    return out


def max_principle_check(
    result_id: str,
    scn: ScenarioSpec,
    params: dict | None = None,
    tolerance: float = 1e-6,
    slack_coeff: float = 1.0,
    hyp_tol: float = 1e-12,
) -> MaxPrincipleReport:
    """Evaluate both sides of a closed-manifold bound at every node and stored time.

    Time is measured from the scenario start. The allowed violation is
    ``tolerance + slack_coeff * dx^2 * max(1, max |RHS|)``.
    """
    if result_id not in MAX_PRINCIPLE_IDS:
        raise DomainError(f"unknown corollary {result_id!r}")
    geom = scn.geometry
    if not geom.closed:
        raise DomainError("maximum principle bounds are checked on the closed circle")
    prm = {"s": 2.0, "a": 0.0, "Gamma": ZeroAuxiliary()}
    prm.update({k: v for k, v in (params or {}).items() if v is not None})
    p, m, s = scn.p, geom.m, float(prm["s"])
    prm["p"] = p
    regime = "I" if result_id.startswith("Cor6") else "II"
    if result_id == "Cor6_4":
        window = q_admissible(p, m, s, "Cor6_4")
        if not window.contains(prm["q"]):
            raise DomainError(f"q={prm['q']} outside [{window.q1}, {window.q2}]")
    elif result_id == "Cor6_5":
        if s != 2.0:
            raise DomainError("the time-weighted first-regime bound uses s = 2")
        window = q_admissible(p, m, 2.0, "Cor6_5")
        if not window.contains(prm["q"]):
            raise DomainError(f"q={prm['q']} outside the admissible window ({window.lower}, {window.upper})")
    else:
        second_regime_window(p, m)

    fld = solve(scn)
    vfield = pressure_transform(fld, p, regime)
    V = vfield.values
    grid = fld.grid
    kappa = superflow_margin(geom, vfield, regime, p).kappa_super
    bullets = _check_bullets(result_id, regime, fld, V, geom, scn.nonlinearity, prm, hyp_tol)

    t = (fld.times - fld.times[0])[:, None]
    grad_sq = geom.metric_factor(fld.times[:, None]) * grid.d1(V) ** 2
    G: Auxiliary = prm["Gamma"]
    prefactor = None
    if result_id == "Cor6_4":
        q = prm["q"]
        X = grad_sq ** (s / 2.0) / V**q
        lhs = X
        rhs = exponential_bound(float(np.max(X[0] + G.value(V[0]))), G.value(V), kappa, prm["a"], s, t)
    elif result_id == "Cor6_5":
        q = prm["q"]
        prefactor = first_regime_time_weighted_prefactor(p, q)
        lhs = t * grad_sq / V**q
        rhs = (1.0 + 2.0 * kappa * t) * prefactor * (np.max(V[0] ** (1.0 - q)) - V ** (1.0 - q))
    elif result_id == "Cor11_3":
        X = grad_sq ** (s / 2.0)
        lhs = X
        rhs = exponential_bound(float(np.max(X[0] + G.value(V[0]))), G.value(V), kappa, prm["a"], s, t)
    else:
        r = 2.0 * p / (2.0 * p - 1.0)
        prefactor = time_weighted_prefactor(p)
        lhs = t * grad_sq / (1.0 + 2.0 * kappa * t)
        rhs = prefactor * (np.max(V[0] ** r) - V**r)
    gap = lhs - rhs
    idx = np.unravel_index(int(np.argmax(gap)), gap.shape)
    worst = float(gap[idx])
    slack = slack_coeff * grid.dx**2 * max(1.0, float(np.max(np.abs(rhs))))
    inputs = {"p": p, "m": m, "nx": grid.n, "horizon": scn.horizon,
              **{k: (v if isinstance(v, (int, float)) else repr(v)) for k, v in prm.items() if k != "p"}}
    return MaxPrincipleReport(
        id=result_id,
        inputs=inputs,
        kappa=kappa,
        prefactor=prefactor,
        worst_violation=worst,
        worst_point={"t": float(fld.times[idx[0]]), "x": float(grid.x[idx[1]]),
                     "lhs": float(lhs[idx]), "rhs": float(rhs[idx])},
        slack=slack,
        tolerance=tolerance,
        hypotheses=bullets,
        passed=bool(worst <= tolerance + slack),
    )


# ------------------------------------------------------------- Liouville


LIOUVILLE_IDS = {"Thm2_4": "I_static", "Thm7_4": "II_static"}


def liouville_probe(
    theorem: Literal["Thm2_4", "Thm7_4"],
    scn: ScenarioSpec,
    radii=(1.0, 2.0, 4.0, 8.0),
    x0: float = 0.0,
    beta: float | None = None,
    min_decay: float = 1.5,
) -> dict:
    """Collapse of the static estimate over growing cylinders with ``T = R^2``.

    The scenario must cover ``[t0 - max(R)^2, t0]`` with ``t0`` its final time.
    ``C`` is calibrated as ``C*`` on the smallest cylinder and the reported
    bound at ``(x0, t0)`` is ``C * B_R(x0, t0)``.
    """
    if theorem not in LIOUVILLE_IDS:
        raise DomainError(f"unknown Liouville theorem {theorem!r}")
    est_id = LIOUVILLE_IDS[theorem]
    geom = scn.geometry
    regime = "I" if theorem == "Thm2_4" else "II"
    exps = beta_selection(scn.p, geom.m, beta) if regime == "I" else _second_exps(scn)
    prm = {"p": scn.p, "beta": exps.beta}

    def hypothesis_on(u_lo, u_hi, xs):
        span = (u_lo, u_hi) if u_hi > u_lo else (u_lo, u_lo * (1 + 1e-9))
        hyp = condition_check(scn.nonlinearity, theorem, prm, span, 64, x_samples=xs[::max(1, len(xs) // 16)])
        if not hyp.holds:
            raise HypothesisFailure(theorem, hyp.text, hyp.worst_point)
        return hyp

    # fail before the solve when the initial data already violate the hypothesis
    grid0 = geom.grid(scn.nx)
    u0 = initial_values(scn, grid0)
    hypothesis_on(float(u0.min()), float(u0.max()), grid0.x)
    fld = solve(scn)
    t0 = float(fld.times[-1])
    radii = sorted(float(r) for r in radii)
    if fld.times[0] > t0 - radii[-1] ** 2 + 1e-9:
        raise DomainError("scenario horizon must cover the largest cylinder, T = R^2")
    whole = curvature_bounds(geom, None, fld.grid, fld.times)
    if whole.k > 0.0:
        raise DomainError("the Liouville probe needs Ric_f^m >= 0 (k = 0)")
    u_lo, u_hi = float(fld.values.min()), float(fld.values.max())
    hyp = hypothesis_on(u_lo, u_hi, fld.grid.x)
    growth_ok = bool(u_lo > 0.0 and np.isfinite(u_hi))
    rows = []
    calib = None
    j0 = int(np.argmin(np.abs(fld.grid.x - x0)))
    for R in radii:
        cyl = Cylinder(x0, t0, R, R * R)
        rep = verify_estimate(est_id, fld, geom, scn.nonlinearity, exps, cyl)
        if calib is None:
            calib = rep.C_star
        B0 = float(estimate_bracket(est_id, exps, rep.M, rep.k, 0.0, R, np.array([R * R]),
                                    rep.sup_terms["source"], rep.sup_terms["drift"])[0])
        V = pressure_transform(fld, scn.p, regime).values
        grad = math.sqrt(float(geom.metric_factor(t0))) * abs(float(fld.grid.d1(V[-1])[j0]))
        lhs0 = grad / V[-1, j0] ** (exps.beta / 2.0) if regime == "I" else grad
        rows.append({"R": R, "T": R * R, "C_star": rep.C_star, "bracket_at_point": B0,
                     "bound": calib * B0, "lhs_at_point": lhs0})
    decay = [a["bound"] / b["bound"] if b["bound"] > 0 else math.inf for a, b in zip(rows, rows[1:])]
    all_zero = all(r["bound"] == 0.0 for r in rows)
    ok = growth_ok and (all_zero or all(d >= min_decay for d in decay))
    return {
        "id": theorem,
        "estimate": est_id,
        "x0": x0,
        "t0": t0,
        "calibration_C": calib,
        "per_radius": rows,
        "decay_per_doubling": decay,
        "min_decay": min_decay,
        "growth_ok": growth_ok,
        "hypothesis": hyp.as_dict(),
        "pass": bool(ok),
    }


def ancient_positivity(nonlin: Nonlinearity, u0: float, a: float, t_min: float = -1e3) -> dict:
    """Backward integration of ``u' = N(u)`` for a source bounded below by ``a > 0``.

    Positivity must fail no later than ``-u0/a``.
    """
    if a <= 0:
        raise DomainError("need a > 0")
    check = condition_check(nonlin, "Ancient_I", {"p": 0.5, "a": a}, (1e-6, max(u0, 1e-6) * 10), 128)
    if not check.holds:
        raise HypothesisFailure("Ancient_I", check.text, check.worst_point)
    t_fail = backward_positivity_time(nonlin, u0, t_min)
    bound = -u0 / a
    return {
        "u0": u0,
        "a": a,
        "t_fail": t_fail,
        "predicted_latest": bound,
        "pass": bool(t_fail is not None and t_fail >= bound * (1 + 1e-9)),
    }
