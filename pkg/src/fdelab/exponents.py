"""Admissible exponent windows and the derived constants of both regimes."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Literal

from .errors import DomainError


def critical_exponents(m: float) -> tuple[float, float]:
    """Return ``(p_c, p_0)`` for synthetic dimension ``m >= 2``.

    ``p_c = 1 - 2/m`` bounds the first regime; ``p_0`` is the larger of ``1/2``
    and ``1 - 1/sqrt(m - 1)`` and bounds the second.
    """
    if not (math.isfinite(m) and m >= 2.0):
        raise DomainError(f"critical exponents need m >= 2, got {m}")
    p_c = 1.0 - 2.0 / m
    p_0 = max(0.5, 1.0 - 1.0 / math.sqrt(m - 1.0))
    return p_c, p_0


def drift_ratio(p: float) -> float:
    """``(2 - p)/(1 - p)``, the linear coefficient shared by both quadratics."""
    return (2.0 - p) / (1.0 - p)


def beta_polynomial(beta: float, p: float, m: float) -> float:
    return beta * beta - drift_ratio(p) * beta + m / 2.0


def _roots(b: float, c: float) -> tuple[float, float]:
    disc = b * b - 4.0 * c
    if disc < 0.0:
        raise DomainError(f"quadratic has no real roots (discriminant {disc:.3e})")
    r = math.sqrt(disc)
    # stable pairing avoids cancellation in the small root
    big = (b + r) / 2.0
    small = c / big if big != 0.0 else (b - r) / 2.0
    return small, big


@dataclass(frozen=True)
class ExponentData:
    p: float
    m: float
    p_c: float
    p_0: float
    beta1: float | None = None
    beta2: float | None = None
    beta: float | None = None
    gamma: float | None = None
    gamma_II: float | None = None
    regime_I: bool = False
    regime_II: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def beta_selection(p: float, m: float, beta: float | None = None) -> ExponentData:
    """Roots of ``beta^2 - (2-p)/(1-p) beta + m/2`` and the matching ``gamma``.

    Requires ``p_c < p < 1``. The default ``beta`` is the midpoint of
    ``[beta1, 1]``; an explicit ``beta`` may sit anywhere in ``(beta1, 1]``.
    """
    p_c, p_0 = critical_exponents(m)
    if not (p_c < p < 1.0):
        raise DomainError(f"p={p} outside ({p_c}, 1) for m={m}")
    beta1, beta2 = _roots(drift_ratio(p), m / 2.0)
    if beta is None:
        beta = 0.5 * (beta1 + 1.0)
    if not (beta1 < beta <= 1.0):
        raise DomainError(f"beta={beta} outside ({beta1}, 1]")
    gamma = -2.0 / ((1.0 - p) * beta_polynomial(beta, p, m))
    return ExponentData(
        p=p,
        m=m,
        p_c=p_c,
        p_0=p_0,
        beta1=beta1,
        beta2=beta2,
        beta=beta,
        gamma=gamma,
        gamma_II=gamma_second_regime(p, m) if p_0 < p < 1.0 else None,
        regime_I=True,
        regime_II=p_0 < p < 1.0,
    )


def gamma_second_regime(p: float, m: float) -> float:
    """``gamma`` with ``p [1 - (m-1)(p-1)^2] / (2p-1)^2 = 1/gamma``."""
    _, p_0 = critical_exponents(m)
    if not (p_0 < p < 1.0):
        raise DomainError(f"p={p} outside ({p_0}, 1) for m={m}")
    return (2.0 * p - 1.0) ** 2 / (p * (1.0 - (m - 1.0) * (p - 1.0) ** 2))


def exponent_data(p: float | None, m: float, beta: float | None = None) -> ExponentData:
    """Everything that is defined at ``(p, m)``; undefined entries stay ``None``."""
    p_c, p_0 = critical_exponents(m)
    if p is None:
        return ExponentData(p=float("nan"), m=m, p_c=p_c, p_0=p_0)
    if p_c < p < 1.0:
        return beta_selection(p, m, beta)
    regime_II = p_0 < p < 1.0
    return ExponentData(
        p=p,
        m=m,
        p_c=p_c,
        p_0=p_0,
        gamma_II=gamma_second_regime(p, m) if regime_II else None,
        regime_II=regime_II,
    )


def maximum_principle_threshold(s: float, m: float) -> float:
    """Smallest ``p`` for which ``q^2 - (2-p)/(1-p) q + s m/4`` has real roots."""
    root = math.sqrt(s * m)
    if root <= 2.0:
        return 0.0
    return 1.0 - 1.0 / (root - 1.0)


@dataclass(frozen=True)
class QInterval:
    p: float
    m: float
    s: float
    q1: float
    q2: float
    threshold: float
    lower: float
    upper: float
    lower_closed: bool
    upper_closed: bool

    def contains(self, q: float) -> bool:
        above = q >= self.lower if self.lower_closed else q > self.lower
        below = q <= self.upper if self.upper_closed else q < self.upper
        return above and below

    def as_dict(self) -> dict:
        return asdict(self)


def q_admissible(p: float, m: float, s: float, corollary: Literal["Cor6_4", "Cor6_5"]) -> QInterval:
    """Admissible ``q`` window for the first-regime maximum principles."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"p={p} outside (0, 1)")
    if m < 1.0 or s < 2.0:
        raise DomainError("need m >= 1 and s >= 2")
    threshold = maximum_principle_threshold(s, m)
    if p < threshold:
        raise DomainError(f"p={p} below the admissibility threshold {threshold:.12g} for s={s}, m={m}")
    disc = drift_ratio(p) ** 2 - s * m
    q1, q2 = _roots(drift_ratio(p), s * m / 4.0) if disc >= 0.0 else (drift_ratio(p) / 2,) * 2
    if corollary == "Cor6_4":
        return QInterval(p, m, s, q1, q2, threshold, q1, q2, True, True)
    if corollary != "Cor6_5":
        raise DomainError(f"unknown corollary {corollary!r}")
    if s != 2.0:
        raise DomainError("the time-weighted estimate uses s = 2")
    lo, lo_closed = (1.0, False) if 1.0 >= q1 else (q1, True)
    hi_open = 1.0 / (1.0 - p)
    hi, hi_closed = (hi_open, False) if hi_open <= q2 else (q2, True)
    if not lo < hi:
        raise DomainError(f"empty q window for p={p}, m={m}")
    return QInterval(p, m, s, q1, q2, threshold, lo, hi, lo_closed, hi_closed)


def second_regime_window(p: float, m: float) -> None:
    """Raise unless ``p`` is admissible for the second-regime maximum principles.

    The left end ``p = p_0`` is allowed only when it lies strictly above ``1/2``.
    """
    _, p_0 = critical_exponents(m)
    ok = (p_0 < p < 1.0) or (p == p_0 and p_0 > 0.5)
    if not ok:
        raise DomainError(f"p={p} outside the admissible window starting at p_0={p_0}")


def maximum_exponent_range(m: float) -> dict:
    """Lower ends of the exponent windows covered by each estimate family."""
    p_c, p_0 = critical_exponents(m)
    return {
        "m": m,
        "regime_I_lower": p_c,
        "regime_II_lower": p_0,
        "lowest": min(p_c, p_0),
        "lowest_from": "regime_I" if p_c <= p_0 else "regime_II",
    }
