from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsp.core import ExponentParams
from fracsp.errors import DomainError
from fracsp.geometry import disk, sample_interior, square
from fracsp.seminorm import (
    GridFunction,
    angular_moment,
    cell_radial_integral,
    energy_operator,
    fractional_energy,
    g_u_field,
    g_u_pointwise,
    level_index,
    lq_deviation,
    mushroom_test_function,
    mushroom_test_values,
    random_piecewise_linear,
    riesz_potential,
    truncate,
    truncate_values,
    truncation_bounds_check,
    weak_type_ratio,
)

P = ExponentParams(2, 2.0, 2.0, 0.5, 0.5)


def _nodes(dom, k):
    return sample_interior(dom, 2.0**-k)


def _center(nodes, c=(0.5, 0.5)):
    return int(np.argmin(np.hypot(*(nodes.points - np.asarray(c)).T)))


@pytest.fixture(scope="module")
def sq6(unit_square):
    return _nodes(unit_square, 6)


def linear(nodes):
    return GridFunction(nodes, nodes.points[:, 0].copy())


# ------------------------------------------------------------------- g_u


def test_constant_has_no_energy(sq6):
    u = GridFunction(sq6, np.full(len(sq6), 3.0))
    assert np.all(g_u_field(u, P) == 0)
    assert fractional_energy(u, P).total == 0.0


def test_nonfinite_values_rejected(sq6):
    v = np.zeros(len(sq6))
    v[3] = np.nan
    with pytest.raises((DomainError, ValueError)):
        GridFunction(sq6, v)


@pytest.mark.parametrize("k", [6, 7, 8])
def test_g_matches_pair_sum_oracle(unit_square, goldens, k):
    gold = goldens["g_linear_center"]
    h = 2.0**-k
    nodes = _nodes(unit_square, k)
    val = g_u_pointwise(linear(nodes), _center(nodes), P)
    assert val == pytest.approx(gold["values"][gold["h"].index(h)], rel=1e-10)


def test_g_close_to_extrapolated_golden(unit_square, goldens):
    nodes = _nodes(unit_square, 8)
    val = g_u_pointwise(linear(nodes), _center(nodes), P)
    assert val == pytest.approx(goldens["g_linear_center"]["extrapolated"], rel=0.01)
    # the continuum value for u = x_1 at the centre is pi/4
    assert goldens["g_linear_center"]["extrapolated"] == pytest.approx(math.pi / 4, rel=2e-3)


def test_energy_golden(unit_square, goldens):
    gold = goldens["energy_linear_square"]
    nodes = _nodes(unit_square, 7)
    br = fractional_energy(linear(nodes), P)
    assert br.total == pytest.approx(gold["values"][1], rel=1e-3)
    assert br.total == pytest.approx(gold["extrapolated"], rel=0.015)
    assert 0 <= br.correction_share < 1
    assert br.total == pytest.approx(np.sum(br.g) * nodes.h**2, rel=1e-12)


def test_doubling_tau_never_decreases_g(sq6):
    u = GridFunction(sq6, np.sin(4 * sq6.points[:, 0]) * sq6.points[:, 1])
    small = g_u_field(u, P)
    big = g_u_field(u, ExponentParams(2, 2.0, 2.0, 0.5, 1.0))
    assert np.all(big >= small - 1e-12 * np.abs(small).max())


def test_dilation_law():
    f = lambda p: np.sin(3 * p[:, 0]) + p[:, 1] ** 2
    n1 = sample_interior(square(1.0), 2.0**-5)
    n2 = sample_interior(square(2.0), 2.0**-4)
    e1 = fractional_energy(GridFunction(n1, f(n1.points)), P).total
    e2 = fractional_energy(GridFunction(n2, f(n2.points / 2)), P).total
    assert e2 / e1 == pytest.approx(2.0 ** (P.n - P.p * P.delta), rel=1e-3)


def test_mask_restricts_outer_sum(sq6):
    u = linear(sq6)
    full = fractional_energy(u, P)
    left = sq6.points[:, 0] < 0.5
    part = fractional_energy(u, P, mask=left)
    assert part.total == pytest.approx(np.sum(full.g[left]) * sq6.h**2, rel=1e-12)


def test_energy_operator_matches(sq6):
    u = np.cos(2 * sq6.points[:, 0]) + sq6.points[:, 1] ** 3
    for params in (P, ExponentParams(2, 1.5, 1.5, 0.4, 0.5), ExponentParams(2, 3.0, 3.0, 0.6, 0.5)):
        op = energy_operator(sq6, params)
        assert op.energy(u) == pytest.approx(fractional_energy(GridFunction(sq6, u), params).total, rel=1e-10)
    K = energy_operator(sq6, P).quadratic_form()
    assert float(u @ (K @ u)) == pytest.approx(energy_operator(sq6, P).energy(u), rel=1e-10)


def test_energy_operator_gradient_fd(sq6):
    params = ExponentParams(2, 1.5, 1.5, 0.5, 0.5)
    op = energy_operator(sq6, params)
    rng = np.random.default_rng(0)
    u = rng.standard_normal(len(sq6))
    d = rng.standard_normal(len(sq6))
    eps = 1e-6
    fd = (op.energy(u + eps * d) - op.energy(u - eps * d)) / (2 * eps)
    assert float(op.gradient(u) @ d) == pytest.approx(fd, rel=1e-5)


def test_angular_moment_and_cell_integral():
    assert angular_moment(2.0) == pytest.approx(math.pi)
    assert angular_moment(0.0) == pytest.approx(2 * math.pi)
    h, a = 0.1, 1.0
    # a disk inside the cell; and the full cell: int R(t) dt = perimeter-weighted
    assert cell_radial_integral(h, 0.03, a)[0] == pytest.approx(2 * math.pi * 0.03)
    t = np.linspace(0, 2 * math.pi, 200001)
    R = (h / 2) / np.maximum(np.abs(np.cos(t)), np.abs(np.sin(t)))
    assert cell_radial_integral(h, 1.0, a)[0] == pytest.approx(np.trapezoid(R, t), rel=1e-6)


# ------------------------------------------------------------- deviation


def test_lq_constant(sq6):
    assert lq_deviation(GridFunction(sq6, np.full(len(sq6), 7.0)), 2.0) == 0.0


def test_lq_halves(sq6):
    u = GridFunction(sq6, np.where(sq6.points[:, 0] < 0.5, -1.0, 1.0))
    # the middle lattice column sits on the x = 1/2 line, an O(h) imbalance
    assert lq_deviation(u, 2.0) == pytest.approx(sq6.measure, rel=2 * sq6.h)


def test_lq_linear_variance(unit_square):
    nodes = _nodes(unit_square, 9)
    assert lq_deviation(linear(nodes), 2.0) == pytest.approx(1 / 12, rel=0.01)


def test_lq_rejects_small_q(sq6):
    with pytest.raises(DomainError):
        lq_deviation(linear(sq6), 0.5)


def test_lq_background(sq6):
    u = GridFunction(sq6, np.ones(len(sq6)))
    m = sq6.measure
    # u = 1 on the nodes, 0 on a background of equal measure: mean 1/2
    assert lq_deviation(u, 2.0, background_measure=m) == pytest.approx(2 * m * 0.25)


@settings(max_examples=25, deadline=None)
@given(st.floats(-50, 50), st.floats(1.0, 4.0))
def test_lq_mean_shift_invariant(sq6, c, q):
    v = np.sin(5 * sq6.points[:, 0]) * np.cos(3 * sq6.points[:, 1])
    a = lq_deviation(GridFunction(sq6, v), q)
    b = lq_deviation(GridFunction(sq6, v + c), q)
    assert b == pytest.approx(a, rel=1e-6, abs=1e-12)


# --------------------------------------------------------- test functions


def test_mushroom_test_values(sjohn_mushroom):
    g = sjohn_mushroom.mushrooms[1]
    pts = np.array([[1.0, 1.0], g.cap_center, [g.a, g.base + 0.5 * g.height]])
    assert mushroom_test_values(sjohn_mushroom, 1, pts) == pytest.approx([0.0, 1.0, 0.5])


def test_mushroom_test_function_range(sjohn_mushroom):
    g = sjohn_mushroom.mushrooms[0]
    nodes = sample_interior(sjohn_mushroom, g.rho / 8, ((g.a - g.r, g.base - 0.1), (g.a + g.r, g.cap_center[1] + g.r)))
    u = mushroom_test_function(sjohn_mushroom, 0, nodes)
    assert u.values.min() == 0.0 and u.values.max() == 1.0
    with pytest.raises((IndexError, DomainError)):
        mushroom_test_function(sjohn_mushroom, 99, nodes)


# ------------------------------------------------------------- truncation


@pytest.mark.parametrize("v,j,expected", [(5.0, 1, 2.0), (4.0, 2, 0.0), (12.0, 2, 4.0), (0.0, 0, 0.0)])
def test_truncate_examples(sq6, v, j, expected):
    out = truncate(GridFunction(sq6, np.full(len(sq6), v)), j)
    assert np.all(out.values == expected)


def test_level_index_powers_of_two():
    v = np.array([1.0, 2.0, 3.0, 4.0, 0.5, 0.75, 2.0**-30])
    assert level_index(v).tolist() == [0, 1, 1, 2, -1, -1, -30]
    assert level_index(np.array([0.0]))[0] < -(10**9)


@settings(max_examples=50, deadline=None)
@given(st.floats(-100, 100), st.floats(-100, 100), st.integers(-8, 8))
def test_truncation_is_contraction(a, b, j):
    va, vb = truncate_values(np.array([a, b]), j)
    assert abs(va - vb) <= abs(a - b) * (1 + 1e-12) + 1e-300


def test_truncation_bounds_random_piecewise_linear(unit_square):
    nodes = _nodes(unit_square, 6)
    for seed in range(3):
        v = random_piecewise_linear(nodes, seed)
        rep = truncation_bounds_check(v, 10_000, seed=seed)
        assert rep.violations == 0
        assert rep.partition_ok
        assert rep.level_bound_checked == 10_000


def test_truncation_check_needs_positive_values(sq6):
    from fracsp.errors import InsufficientDataError

    with pytest.raises(InsufficientDataError):
        truncation_bounds_check(GridFunction(sq6, -np.ones(len(sq6))), 10)
    with pytest.raises(DomainError):
        truncation_bounds_check(linear(sq6), 0)


# ----------------------------------------------------------------- Riesz


@pytest.fixture(scope="module")
def disk7():
    return sample_interior(disk(1.0), 2.0**-7)


def test_riesz_zero(disk7):
    assert np.all(riesz_potential(GridFunction(disk7, np.zeros(len(disk7))), 1.0).values == 0)


@pytest.mark.parametrize("delta", [1.0, 0.5])
def test_riesz_indicator_at_center(disk7, delta):
    f = GridFunction(disk7, np.ones(len(disk7)))
    val = riesz_potential(f, delta, targets=[_center(disk7, (0.0, 0.0))])[0]
    assert val == pytest.approx(2 * math.pi / delta, rel=0.01)


def test_riesz_linear(sq6):
    a = np.sin(sq6.points[:, 0] * 7)
    b = sq6.points[:, 1] ** 2
    Ia = riesz_potential(GridFunction(sq6, a), 0.7).values
    Ib = riesz_potential(GridFunction(sq6, b), 0.7).values
    Iab = riesz_potential(GridFunction(sq6, 2 * a - 3 * b), 0.7).values
    assert np.allclose(Iab, 2 * Ia - 3 * Ib, rtol=1e-10, atol=1e-10)


def test_weak_type_point_mass(sq6):
    v = np.zeros(len(sq6))
    v[_center(sq6)] = 1.0
    r = weak_type_ratio(GridFunction(sq6, v), 0.5)
    assert np.isfinite(r) and r > 0
    assert weak_type_ratio(GridFunction(sq6, 2 * v), 0.5) == pytest.approx(r, rel=1e-12)


def test_weak_type_rejects_zero(sq6):
    with pytest.raises(DomainError):
        weak_type_ratio(GridFunction(sq6, np.zeros(len(sq6))), 0.5)


def test_weak_type_spread(sq6):
    rng = np.random.default_rng(1)
    ratios = []
    for _ in range(20):
        v = np.zeros(len(sq6))
        k = rng.integers(1, 200)
        v[rng.choice(len(sq6), size=k, replace=False)] = rng.uniform(0, 1, size=k)
        ratios.append(weak_type_ratio(GridFunction(sq6, v), 0.5))
    ratios = np.array(ratios)
    assert np.all(np.isfinite(ratios))
    assert ratios.max() / np.median(ratios) < 10
