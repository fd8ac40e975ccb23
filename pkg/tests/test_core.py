from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsp.core import (
    ExponentParams,
    GeometryExponents,
    admissible_p_range_qhbc,
    critical_q_qhbc,
    critical_q_sjohn,
    exponent_table,
    mushroom_energy_exponent,
)
from fracsp.errors import DomainError


def P(p, q=None, delta=0.5, n=2):
    return ExponentParams(n=n, p=p, q=q, delta=delta)


def test_q_defaults_to_p():
    assert P(1.5).q == 1.5


@pytest.mark.parametrize(
    "kw",
    [dict(p=0.5), dict(p=2, q=1), dict(p=2, delta=1.0), dict(p=2, delta=0.0), dict(p=2, n=1)],
)
def test_params_reject_inadmissible(kw):
    with pytest.raises(DomainError):
        P(**kw)


def test_tau_must_be_positive():
    with pytest.raises(DomainError):
        ExponentParams(tau=0.0)


@pytest.mark.parametrize("kw", [dict(s=0.5), dict(beta=0.0), dict(beta=1.5), dict(sigma=0.9), dict(h=0.5)])
def test_geometry_rejects(kw):
    with pytest.raises(DomainError):
        GeometryExponents(**kw)


@pytest.mark.parametrize(
    "p,s,expected",
    [(2.0, 1.0, 4.0), (1.0, 1.0, 4.0 / 3.0), (2.0, 1.5, 2.0)],
)
def test_critical_q_sjohn_values(p, s, expected):
    assert critical_q_sjohn(P(p), s) == pytest.approx(expected, rel=1e-15)


def test_critical_q_sjohn_requires_subcritical_p():
    with pytest.raises(DomainError):
        critical_q_sjohn(P(4.0), 1.0)


def test_critical_q_sjohn_rejects_large_s():
    # n/(n - p delta) = 2 for p = 2, delta = 0.5
    with pytest.raises(DomainError):
        critical_q_sjohn(P(2.0), 2.0)


@pytest.mark.parametrize(
    "p,beta,value,empty",
    [(2.0, 1.0, 4.0, False), (2.0, 1 / 3, 2.0, True), (1.0, 0.6, 1.0, True)],
)
def test_critical_q_qhbc_values(p, beta, value, empty):
    thr = critical_q_qhbc(P(p), beta)
    assert thr.value == pytest.approx(value, rel=1e-14)
    assert thr.empty is empty


@pytest.mark.parametrize(
    "beta,lower,empty",
    [(1.0, 0.0, False), (0.6, 1.0, False), (1 / 3, 2.0, True)],
)
def test_admissible_p_range(beta, lower, empty):
    rng = admissible_p_range_qhbc(2, 0.5, beta)
    assert rng.lower == pytest.approx(lower, abs=1e-14)
    assert rng.upper == 2.0
    assert rng.empty is empty


@pytest.mark.parametrize("sigma,h,expected", [(1.5, 1.0, 2.0), (2.0, 2.0, 2.0)])
def test_mushroom_energy_exponent(sigma, h, expected):
    assert mushroom_energy_exponent(P(2.0), sigma, h) == pytest.approx(expected, rel=1e-15)


def test_exponent_table_reports_failures():
    tab = exponent_table(P(2.0), GeometryExponents(s=3.0))
    assert tab["critical_q_sjohn"] is None
    assert "critical_q_sjohn_error" in tab


admissible = st.tuples(
    st.integers(2, 4),
    st.floats(1.0, 6.0),
    st.floats(0.05, 0.95),
).filter(lambda t: t[1] < t[0] / t[2] * 0.98)


@given(admissible)
def test_john_thresholds_coincide(t):
    n, p, delta = t
    par = ExponentParams(n=n, p=p, delta=delta)
    sj = critical_q_sjohn(par, 1.0)
    qh = critical_q_qhbc(par, 1.0).value
    assert sj == pytest.approx(n * p / (n - p * delta), rel=1e-12)
    assert qh == pytest.approx(sj, rel=1e-12)


@given(admissible, st.floats(0.0, 0.99), st.floats(0.0, 0.99))
def test_sjohn_decreasing_in_s(t, a, b):
    n, p, delta = t
    par = ExponentParams(n=n, p=p, delta=delta)
    smax = n / (n - p * delta)
    s1, s2 = sorted((1 + a * (smax - 1), 1 + b * (smax - 1)))
    if s2 - s1 < 1e-9:
        return
    assert critical_q_sjohn(par, s2) < critical_q_sjohn(par, s1)


@given(admissible, st.floats(0.0, 0.99))
def test_energy_exponent_denominator_identity(t, a):
    n, p, delta = t
    par = ExponentParams(n=n, p=p, delta=delta)
    s = 1 + a * (n / (n - p * delta) - 1)
    lhs = mushroom_energy_exponent(par, s, 1.0)
    assert lhs == pytest.approx(n * p / critical_q_sjohn(par, s), rel=1e-12)


@settings(max_examples=50)
@given(admissible, st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_qhbc_increasing_in_beta(t, b1, b2):
    n, p, delta = t
    par = ExponentParams(n=n, p=p, delta=delta)
    lo, hi = sorted((b1, b2))
    if hi - lo < 1e-9:
        return
    assert critical_q_qhbc(par, lo).value < critical_q_qhbc(par, hi).value


@given(st.floats(1.0, 5.0), st.floats(0.05, 0.95))
def test_sigma_equals_h_degenerates(sigma, delta):
    par = ExponentParams(n=2, p=1.7, delta=delta)
    assert mushroom_energy_exponent(par, sigma, sigma) == pytest.approx(sigma * (2 - 1.7 * delta), rel=1e-12)
    assert not math.isnan(mushroom_energy_exponent(par, sigma, sigma + 1))
