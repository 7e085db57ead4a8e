import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fdelab.errors import DomainError
from fdelab.exponents import (
    beta_polynomial,
    beta_selection,
    critical_exponents,
    exponent_data,
    maximum_exponent_range,
    maximum_principle_threshold,
    q_admissible,
    second_regime_window,
)


def test_critical_exponent_examples():
    assert critical_exponents(4)[0] == 0.5
    assert critical_exponents(5)[1] == 0.5
    assert critical_exponents(10)[1] == pytest.approx(2 / 3, abs=1e-15)
    with pytest.raises(DomainError):
        critical_exponents(1.9)


def test_beta_roots_and_gamma_examples():
    d = beta_selection(0.75, 4)
    assert d.beta1 == pytest.approx((5 - math.sqrt(17)) / 2, abs=1e-12)
    assert d.beta2 == pytest.approx((5 + math.sqrt(17)) / 2, abs=1e-12)
    assert d.beta == pytest.approx((d.beta1 + 1) / 2)
    assert beta_selection(0.75, 4, beta=1.0).gamma == pytest.approx(4.0, abs=1e-12)


def test_beta_selection_rejects_boundary_and_bad_beta():
    with pytest.raises(DomainError):
        beta_selection(0.5, 4)
    with pytest.raises(DomainError):
        beta_selection(0.75, 4, beta=0.2)
    with pytest.raises(DomainError):
        beta_selection(0.75, 4, beta=1.5)


@given(st.floats(2.0, 1e4))
def test_second_regime_threshold_never_exceeds_first(m):
    p_c, _ = critical_exponents(m)
    assert 1 - 1 / math.sqrt(m - 1) <= p_c + 1e-15


@given(st.floats(2.05, 60.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_beta_selection_invariants(m, frac_p, frac_beta):
    p_c, _ = critical_exponents(m)
    p = p_c + (1 - p_c) * frac_p
    assume(p_c + 1e-6 < p < 1 - 1e-6)
    d = beta_selection(p, m)
    assert 0 < d.beta1 < d.beta <= 1 < d.beta2
    beta = d.beta1 + (1 - d.beta1) * frac_beta
    assume(beta > d.beta1)
    e = beta_selection(p, m, beta)
    assert e.gamma > 0
    assert -(1 - p) * beta_polynomial(beta, p, m) == pytest.approx(2 / e.gamma, rel=1e-12)


def test_q_admissible_examples():
    win = q_admissible(0.75, 2, 2, "Cor6_4")
    assert win.q1 == pytest.approx((5 - math.sqrt(21)) / 2, abs=1e-12)
    assert win.q2 == pytest.approx((5 + math.sqrt(21)) / 2, abs=1e-12)
    # the threshold for s = 2, m = 4 is 1 - 1/(sqrt 8 - 1), about 0.45308
    with pytest.raises(DomainError, match="0.453081839"):
        q_admissible(0.4, 4, 2, "Cor6_4")
    assert maximum_principle_threshold(2, 4) == pytest.approx(1 - 1 / (math.sqrt(8) - 1))
    win = q_admissible(0.75, 3, 2, "Cor6_5")
    assert (win.lower, win.upper, win.lower_closed, win.upper_closed) == (1.0, 4.0, False, False)
    assert win.contains(2.0) and not win.contains(1.0) and not win.contains(4.0)
    with pytest.raises(DomainError):
        q_admissible(0.75, 3, 4, "Cor6_5")


@given(st.floats(1.0, 40.0), st.floats(2.0, 6.0), st.floats(0.0, 1.0))
def test_q_roots_solve_the_polynomial(m, s, frac):
    thr = maximum_principle_threshold(s, m)
    p = thr + (1 - thr) * frac
    assume(0 < p < 1 - 1e-6)
    win = q_admissible(p, m, s, "Cor6_4")
    b = (2 - p) / (1 - p)
    for q in (win.q1, win.q2):
        assert abs(q * q - b * q + s * m / 4) <= 1e-10 * max(1.0, b * b)
    assert win.q1 <= win.q2


@given(st.floats(2.05, 40.0), st.floats(0.0, 1.0))
def test_time_weighted_window_inside_roots_above_pc(m, frac):
    p_c, _ = critical_exponents(m)
    p = p_c + (1 - p_c) * frac
    assume(max(p_c, maximum_principle_threshold(2, m)) < p < 1 - 1e-6)
    win = q_admissible(p, m, 2, "Cor6_5")
    assert win.lower == 1.0 and win.upper == pytest.approx(1 / (1 - p))


def test_exponent_gates_match_range_table():
    low = maximum_exponent_range(3)
    assert low["lowest_from"] == "regime_I" and low["lowest"] == pytest.approx(1 / 3)
    assert exponent_data(0.4, 3).regime_I and not exponent_data(0.4, 3).regime_II
    high = maximum_exponent_range(10)
    assert high["lowest_from"] == "regime_II" and high["lowest"] == pytest.approx(2 / 3)
    d = exponent_data(0.7, 10)
    assert d.regime_II and not d.regime_I and d.beta is None
    # crossings: p_c equals p_0 = 1/2 at m = 4, and p_0 leaves 1/2 after m = 5
    assert critical_exponents(4)[0] == critical_exponents(4)[1]
    assert critical_exponents(5.5)[1] > 0.5 and critical_exponents(5)[1] == 0.5


def test_second_regime_window():
    second_regime_window(0.75, 3)
    second_regime_window(critical_exponents(10)[1], 10)
    with pytest.raises(DomainError):
        second_regime_window(0.5, 3)
