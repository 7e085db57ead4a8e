"""Reaction terms ``N(t, x, u)``, their pressure-variable rescalings, and hypothesis checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal, Union

import numpy as np
import sympy as sp

from .errors import DomainError


def _arr(*args):
    return np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in args))


@dataclass(frozen=True)
class ZeroReaction:
    def value(self, t, x, u):
        _, _, u = _arr(t, x, u)
        return np.zeros(u.shape)

    du = dx = value

    def sym(self, t, x, u):
        return sp.Integer(0)

    x_independent = True


@dataclass(frozen=True)
class PowerLaw:
    """``c u^a``."""

    c: float = 1.0
    a: float = 1.0

    def value(self, t, x, u):
        _, _, u = _arr(t, x, u)
        return self.c * u**self.a

    def du(self, t, x, u):
        _, _, u = _arr(t, x, u)
        if self.a == 0.0:
            return np.zeros(u.shape)
        return self.c * self.a * u ** (self.a - 1.0)

    def dx(self, t, x, u):
        _, _, u = _arr(t, x, u)
        return np.zeros(u.shape)

    def sym(self, t, x, u):
        return sp.Float(self.c) * u ** sp.Float(self.a)

    x_independent = True


@dataclass(frozen=True)
class Logistic:
    """``c u (1 - u)``."""

    c: float = 1.0

    def value(self, t, x, u):
        _, _, u = _arr(t, x, u)
        return self.c * u * (1.0 - u)

    def du(self, t, x, u):
        _, _, u = _arr(t, x, u)
        return self.c * (1.0 - 2.0 * u)

    def dx(self, t, x, u):
        _, _, u = _arr(t, x, u)
        return np.zeros(u.shape)

    def sym(self, t, x, u):
        return sp.Float(self.c) * u * (1 - u)

    x_independent = True


@dataclass(frozen=True)
class SpaceModulated:
    """``(1 + eps cos(kappa x)) base(t, x, u)`` for an x-independent base."""

    base: "Nonlinearity" = field(default_factory=lambda: PowerLaw())
    eps: float = 0.25
    kappa: float = 1.0

    def __post_init__(self):
        if not self.base.x_independent:
            raise DomainError("modulated base must not depend on x")
        if abs(self.eps) >= 1.0:
            raise DomainError("modulation amplitude must satisfy |eps| < 1")

    def _phi(self, x):
        return 1.0 + self.eps * np.cos(self.kappa * x)

    def value(self, t, x, u):
        t, x, u = _arr(t, x, u)
        return self._phi(x) * self.base.value(t, x, u)

    def du(self, t, x, u):
        t, x, u = _arr(t, x, u)
        return self._phi(x) * self.base.du(t, x, u)

    def dx(self, t, x, u):
        t, x, u = _arr(t, x, u)
        return -self.eps * self.kappa * np.sin(self.kappa * x) * self.base.value(t, x, u)

    def sym(self, t, x, u):
        return (1 + sp.Float(self.eps) * sp.cos(sp.Float(self.kappa) * x)) * self.base.sym(t, x, u)

    x_independent = False


Nonlinearity = Union[ZeroReaction, PowerLaw, Logistic, SpaceModulated]


# ------------------------------------------------------- pressure variables


def density_from_pressure(v, p: float, regime: Literal["I", "II"]):
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0.0):
        raise DomainError("pressure must be positive")
    if regime == "I":
        return ((1.0 - p) * v / p) ** (1.0 / (p - 1.0))
    return v ** (1.0 / (p - 0.5))


def pressure_from_density(u, p: float, regime: Literal["I", "II"]):
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise DomainError("density must be positive")
    if regime == "I":
        return p / (1.0 - p) * u ** (p - 1.0)
    return u ** (p - 0.5)


@dataclass(frozen=True)
class ScaledValues:
    value: np.ndarray
    d_v: np.ndarray
    d_x: np.ndarray


def _check_p(p: float, regime: str):
    if not 0.0 < p < 1.0:
        raise DomainError(f"p={p} outside (0, 1)")
    if regime == "II" and p <= 0.5:
        raise DomainError(f"p={p} must exceed 1/2 in the second regime")


def sigma_first(spec: Nonlinearity, p: float, t, x, v) -> ScaledValues:
    """First-regime source in the pressure equation with its partials.

    ``value = p u^(p-2) N``; at fixed ``(t, x)`` the ``v``-derivative is
    ``(2-p) N/u - N_u`` because ``du/dv = -u^(2-p)/p``.
    """
    _check_p(p, "I")
    u = density_from_pressure(v, p, "I")
    n_val = spec.value(t, x, u)
    scale = p * u ** (p - 2.0)
    return ScaledValues(
        value=scale * n_val,
        d_v=(2.0 - p) * n_val / u - spec.du(t, x, u),
        d_x=scale * spec.dx(t, x, u),
    )


def sigma_first_pressure_form(spec: Nonlinearity, p: float, t, x, v):
    """Same source written directly in the pressure variable."""
    _check_p(p, "I")
    v = np.asarray(v, dtype=float)
    base = (1.0 - p) * v / p
    return p * base ** ((2.0 - p) / (1.0 - p)) * spec.value(t, x, base ** (1.0 / (p - 1.0)))


def sigma_second(spec: Nonlinearity, p: float, t, x, v) -> ScaledValues:
    """Second-regime source ``(p - 1/2) u^((2p-3)/2) N`` with partials."""
    _check_p(p, "II")
    u = density_from_pressure(v, p, "II")
    n_val = spec.value(t, x, u)
    scale = (p - 0.5) * u ** ((2.0 * p - 3.0) / 2.0)
    return ScaledValues(
        value=scale * n_val,
        d_v=(p - 1.5) * n_val / u + spec.du(t, x, u),
        d_x=scale * spec.dx(t, x, u),
    )


def sigma(spec: Nonlinearity, p: float, regime: Literal["I", "II"], t, x, v) -> ScaledValues:
    if regime == "I":
        return sigma_first(spec, p, t, x, v)
    if regime == "II":
        return sigma_second(spec, p, t, x, v)
    raise DomainError(f"unknown regime {regime!r}")


def sigma_symbolic(spec: Nonlinearity, p: float, regime: Literal["I", "II"], t, x, v):
    """Sympy expression of the rescaled source as a function of ``(t, x, v)``."""
    pp = sp.Float(p)
    if regime == "I":
        u = ((1 - pp) * v / pp) ** (1 / (pp - 1))
        return pp * u ** (pp - 2) * spec.sym(t, x, u)
    u = v ** (1 / (pp - sp.Rational(1, 2)))
    return (pp - sp.Rational(1, 2)) * u ** ((2 * pp - 3) / 2) * spec.sym(t, x, u)


# --------------------------------------------------------- potential Gamma


@dataclass(frozen=True)
class ZeroAuxiliary:
    def value(self, v):
        return np.zeros_like(np.asarray(v, float))

    d1 = d2 = value

    def sym(self, v):
        return sp.Integer(0)


@dataclass(frozen=True)
class PowerAuxiliary:
    """``c v^r``."""

    c: float = 1.0
    r: float = 1.0

    def value(self, v):
        return self.c * np.asarray(v, float) ** self.r

    def d1(self, v):
        return self.c * self.r * np.asarray(v, float) ** (self.r - 1.0)

    def d2(self, v):
        return self.c * self.r * (self.r - 1.0) * np.asarray(v, float) ** (self.r - 2.0)

    def sym(self, v):
        return sp.Float(self.c) * v ** sp.Float(self.r)


Auxiliary = Union[ZeroAuxiliary, PowerAuxiliary]


# ---------------------------------------------------------------- hypotheses


@dataclass(frozen=True)
class Hypothesis:
    """One bulleted assumption, phrased as ``margin >= 0``.

    ``field_dependent`` marks assumptions that involve the gradient of the
    solution and can only be settled on a concrete field; on bare samples they
    are checked through the sufficient condition ``Sigma_x == 0``.
    """

    id: str
    text: str
    regime: Literal["I", "II"]
    margin: Callable[..., np.ndarray]
    field_dependent: bool = False


def _gamma(prm):
    return prm.get("Gamma", ZeroAuxiliary())


def _hyp_table() -> dict[str, Hypothesis]:
    def thm2_4(S, N, Nu, u, v, prm):
        p, beta = prm["p"], prm["beta"]
        return ((2.0 - p) - beta * (1.0 - p) / 2.0) * N / u - Nu

    def thm7_4(S, N, Nu, u, v, prm):
        p = prm["p"]
        return (3.0 - 2.0 * p) * N / u - 2.0 * Nu

    def positive(S, N, Nu, u, v, prm):
        return N - prm.get("a", 0.0)

    def gamma_sigma_nonpos(S, N, Nu, u, v, prm):
        return -_gamma(prm).d1(v) * S.value

    def sigma_x_zero(S, N, Nu, u, v, prm):
        return -np.abs(S.d_x)

    def cor6_4_drift(S, N, Nu, u, v, prm):
        q, s, a = prm["q"], prm["s"], prm.get("a", 0.0)
        return a - ((q / s) * S.value / v - S.d_v)

    def cor6_4_aux(S, N, Nu, u, v, prm):
        p, q, G = prm["p"], prm["q"], _gamma(prm)
        return (2.0 * q * (1.0 - p) - 1.0) * G.d1(v) + (1.0 - p) * v * G.d2(v)

    def sigma_nonneg(S, N, Nu, u, v, prm):
        return S.value

    def cor6_5_drift(S, N, Nu, u, v, prm):
        return 2.0 * S.d_v - prm["q"] * S.value / v

    def sigma_below(S, N, Nu, u, v, prm):
        return prm.get("a", 0.0) - S.value

    def cor11_aux(S, N, Nu, u, v, prm):
        G = _gamma(prm)
        return G.d1(v) + v * G.d2(v)

    def sigma_nonpos(S, N, Nu, u, v, prm):
        return -S.value

    def sigma_v_nonpos(S, N, Nu, u, v, prm):
        return -S.d_v

    rows = [
        Hypothesis("Thm2_4", "[(2-p) - beta(1-p)/2] N/u - N_u >= 0", "I", thm2_4),
        Hypothesis("Thm7_4", "(3-2p) N/u - 2 N_u >= 0", "II", thm7_4),
        Hypothesis("Ancient_I", "N >= a > 0", "I", positive),
        Hypothesis("Ancient_II", "N >= a > 0", "II", positive),
        Hypothesis("Cor6_4.gamma_sigma", "Gamma'(v) Sigma <= 0", "I", gamma_sigma_nonpos),
        Hypothesis("Cor6_4.sigma_x", "<grad v, Sigma_x> >= 0", "I", sigma_x_zero, True),
        Hypothesis("Cor6_4.drift", "(q/s) Sigma/v - Sigma_v <= a", "I", cor6_4_drift),
        Hypothesis(
            "Cor6_4.gamma_convex", "[2q(1-p)-1] Gamma' + (1-p) v Gamma'' >= 0", "I", cor6_4_aux
        ),
        Hypothesis("Cor6_5.sigma", "Sigma >= 0", "I", sigma_nonneg),
        Hypothesis("Cor6_5.sigma_x", "<grad v, Sigma_x> >= 0", "I", sigma_x_zero, True),
        Hypothesis("Cor6_5.drift", "2 Sigma_v - q Sigma/v >= 0", "I", cor6_5_drift),
        Hypothesis("Cor11_3.sigma", "Sigma* <= a", "II", sigma_below),
        Hypothesis("Cor11_3.gamma_sigma", "Gamma'(v) Sigma* <= 0", "II", gamma_sigma_nonpos),
        Hypothesis("Cor11_3.gamma_convex", "Gamma' + v Gamma'' >= 0", "II", cor11_aux),
        Hypothesis("Cor11_3.sigma_x", "<grad v, Sigma*_x> <= 0", "II", sigma_x_zero, True),
        Hypothesis("Cor11_4.sigma", "Sigma* <= 0", "II", sigma_nonpos),
        Hypothesis("Cor11_4.sigma_v", "Sigma*_v <= 0", "II", sigma_v_nonpos),
        Hypothesis("Cor11_4.sigma_x", "<grad v, Sigma*_x> <= 0", "II", sigma_x_zero, True),
    ]
    return {h.id: h for h in rows}


HYPOTHESES: dict[str, Hypothesis] = _hyp_table()


def hypotheses_for(result_id: str) -> list[Hypothesis]:
    """All bullets attached to a theorem/corollary id such as ``Cor6_4``."""
    out = [h for k, h in HYPOTHESES.items() if k == result_id or k.startswith(result_id + ".")]
    if not out:
        raise DomainError(f"no hypotheses registered for {result_id!r}")
    return out


def evaluate_hypothesis(hyp: Hypothesis, spec: Nonlinearity, params: dict, t, x, u) -> np.ndarray:
    """Margin array (``>= 0`` means the bullet holds) at density samples ``u``."""
    p = params["p"]
    t, x, u = _arr(t, x, u)
    v = pressure_from_density(u, p, hyp.regime)
    S = sigma(spec, p, hyp.regime, t, x, v)
    return hyp.margin(S, spec.value(t, x, u), spec.du(t, x, u), u, v, params)


def nested_log_samples(lo: float, hi: float, count: int) -> np.ndarray:
    """Endpoints plus a van der Corput sequence in ``log u``.

    The first ``count`` samples are a prefix of the first ``count + 1``, so a
    check that fails at some sample count keeps failing as samples are added.
    """
    if not (0.0 < lo < hi) or count < 2:
        raise DomainError("need 0 < lo < hi and count >= 2")
    fracs = [0.0, 1.0]
    i = 1
    while len(fracs) < count:
        n, denom, frac = i, 1.0, 0.0
        while n:
            denom *= 2.0
            n, bit = divmod(n, 2)
            frac += bit / denom
        fracs.append(frac)
        i += 1
    return np.exp(np.log(lo) + np.array(fracs[:count]) * (np.log(hi) - np.log(lo)))


@dataclass(frozen=True)
class CheckResult:
    hypothesis: str
    text: str
    holds: bool
    worst_value: float
    worst_point: dict
    field_dependent: bool = False

    def as_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis,
            "text": self.text,
            "holds": self.holds,
            "worst_value": self.worst_value,
            "worst_point": self.worst_point,
            "field_dependent": self.field_dependent,
        }


def condition_check(
    spec: Nonlinearity,
    hypothesis: str,
    params: dict,
    u_range: tuple[float, float] = (1e-3, 1e3),
    samples: int = 256,
    x_samples=(0.0,),
    t_samples=(0.0,),
    tol: float = 0.0,
) -> CheckResult:
    """Sample a single hypothesis over ``u`` (and optional ``x``, ``t``) values."""
    if hypothesis not in HYPOTHESES:
        raise DomainError(f"unknown hypothesis {hypothesis!r}")
    hyp = HYPOTHESES[hypothesis]
    us = nested_log_samples(u_range[0], u_range[1], samples)
    tt, xx, uu = np.meshgrid(np.asarray(t_samples, float), np.asarray(x_samples, float), us, indexing="ij")
    margin = evaluate_hypothesis(hyp, spec, params, tt, xx, uu)
    idx = np.unravel_index(int(np.argmin(margin)), margin.shape)
    worst = float(margin[idx])
    return CheckResult(
        hypothesis=hyp.id,
        text=hyp.text,
        holds=bool(worst >= -tol),
        worst_value=worst,
        worst_point={"t": float(tt[idx]), "x": float(xx[idx]), "u": float(uu[idx])},
        field_dependent=hyp.field_dependent,
    )
