from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsp.core import ExponentParams, GeometryExponents, critical_q_sjohn
from fracsp.errors import DomainError, InsufficientDataError, ResolutionError
from fracsp.experiments import (
    ExponentFit,
    SweepResult,
    active_mask,
    collar_width,
    fit_exponents,
    pointwise_potential_check,
    random_smooth_function,
    sharpness_sweep,
    stem_window,
    verdict,
)
from fracsp.geometry import MushroomSpec, make_mushroom, sample_interior
from fracsp.seminorm import GridFunction, fractional_energy, mushroom_test_function

P = ExponentParams(2, 2.0, 2.0, 0.5, 0.5)
SJOHN = GeometryExponents(s=1.5, sigma=1.5, h=1.0)


def synthetic(r, lhs, energy, q=2.0, p=2.0):
    r, lhs, energy = (np.asarray(a, float) for a in (r, lhs, energy))
    z = np.zeros_like(r)
    return SweepResult(r, lhs, energy, energy ** (q / p), z, z, z, q, p)


@pytest.fixture(scope="module")
def sjohn_sweep(sjohn_mushroom):
    return sharpness_sweep(sjohn_mushroom, P, extra_q=(1.25, 1.5, 1.75, 3.0))


# ------------------------------------------------------------------ fits


def test_fit_power_law_exact():
    r = 2.0 ** -np.arange(2, 7)
    fit = fit_exponents(synthetic(r, r**3, 5 * r**1.5))
    assert fit.slope_lhs == pytest.approx(3.0, abs=1e-12)
    assert fit.slope_energy == pytest.approx(1.5, abs=1e-12)
    assert fit.rms_lhs < 1e-12


def test_fit_two_rows_exact():
    fit = fit_exponents(synthetic([0.5, 0.25], [0.3, 0.3 / 8], [1.0, 0.25]))
    assert fit.slope_lhs == pytest.approx(3.0)
    assert fit.slope_energy == pytest.approx(2.0)
    assert fit.rms_lhs == 0.0 and fit.rows == 2


def test_fit_single_row_errors():
    with pytest.raises(InsufficientDataError):
        fit_exponents(synthetic([0.5], [1.0], [1.0]))


def test_fit_rejects_nonpositive():
    with pytest.raises(DomainError):
        fit_exponents(synthetic([0.5, 0.25], [1.0, 0.0], [1.0, 1.0]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.5, 4.0))
def test_fit_tolerates_noise(seed, slope):
    rng = np.random.default_rng(seed)
    r = 2.0 ** -np.arange(2, 7)
    noisy = r**slope * (1 + 0.05 * rng.uniform(-1, 1, size=len(r)))
    fit = fit_exponents(synthetic(r, noisy, noisy))
    assert fit.slope_lhs == pytest.approx(slope, abs=0.15)


# --------------------------------------------------------------- verdicts


def _fit(L, E, rms=0.0):
    return ExponentFit(L, E, rms, rms, 5)


def test_verdict_rule():
    assert verdict(P, SJOHN, _fit(2.0, 2.0), 3.0)["status"] == "violated"
    assert verdict(P, SJOHN, _fit(2.0, 2.0), 1.5)["status"] == "not violated"
    assert verdict(P, SJOHN, _fit(2.0, 2.0), 2.0)["status"] == "inconclusive"
    v = verdict(P, SJOHN, _fit(2.0, 2.0, rms=0.5), 3.0)
    assert v["margin"] == pytest.approx(2 * 0.5 * 3.0 / 2.0) and v["status"] == "inconclusive"


def test_verdict_reports_predictions():
    v = verdict(P, SJOHN, _fit(2.0, 2.0))
    assert v["predicted_energy_slope"] == pytest.approx(2.0)
    assert v["predicted_lhs_slope"] == 2.0
    assert v["critical_q_from_fit"] == pytest.approx(2.0)


def test_sjohn_verdicts(sjohn_sweep):
    lhs = sjohn_sweep.extra["lhs_by_q"]
    out = {}
    for q in (3.0, 1.5, 2.0):
        out[q] = verdict(P, SJOHN, fit_exponents(sjohn_sweep.with_q(q, lhs[q])), q)["status"]
    assert critical_q_sjohn(P, 1.5) == pytest.approx(2.0)
    assert out == {3.0: "violated", 1.5: "not violated", 2.0: "inconclusive"}


def test_below_critical_never_violated(sjohn_sweep):
    lhs = sjohn_sweep.extra["lhs_by_q"]
    for q in (1.25, 1.5, 1.75, 2.0):
        assert verdict(P, SJOHN, fit_exponents(sjohn_sweep.with_q(q, lhs[q])), q)["status"] != "violated"


def test_one_john_mushroom_p_equals_q_equals_one():
    params = ExponentParams(2, 1.0, 1.0, 0.5, 0.5)
    dom = make_mushroom(MushroomSpec(r_list=(0.25, 0.125, 0.0625), sigma=1.0, h=1.0, side=2.0), x0=(1.0, 1.0))
    fit = fit_exponents(sharpness_sweep(dom, params))
    v = verdict(params, GeometryExponents(s=1.0, sigma=1.0, h=1.0), fit)
    assert v["status"] == "not violated"


# ----------------------------------------------------------------- sweeps


def test_sweep_rows(sjohn_sweep, sjohn_mushroom):
    assert len(sjohn_sweep) == 5
    assert np.all(np.diff(sjohn_sweep.r) < 0)
    assert np.all(sjohn_sweep.lhs > 0) and np.all(sjohn_sweep.energy > 0)
    assert np.allclose(sjohn_sweep.rhs, sjohn_sweep.energy ** (P.q / P.p))
    rhos = np.array([m.rho for m in sjohn_mushroom.mushrooms])
    assert np.all(sjohn_sweep.h_energy <= rhos / 8 * (1 + 1e-12))


def test_sweep_length_one(sjohn_mushroom):
    res = sharpness_sweep(sjohn_mushroom, P, r_list=[0.125])
    assert len(res) == 1
    with pytest.raises(InsufficientDataError):
        fit_exponents(res)


def test_sweep_errors(sjohn_mushroom, unit_square):
    with pytest.raises(DomainError):
        sharpness_sweep(sjohn_mushroom, P, r_list=[0.3])
    with pytest.raises(ResolutionError):
        sharpness_sweep(sjohn_mushroom, P, h_factor=4.0)
    with pytest.raises(DomainError):
        sharpness_sweep(unit_square, P)


def test_sweep_deterministic(sjohn_mushroom, tmp_path):
    a = sharpness_sweep(sjohn_mushroom, P, threads=1)
    b = sharpness_sweep(sjohn_mushroom, P, threads=4)
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_local_window_energy_is_exact(sjohn_mushroom):
    g = sjohn_mushroom.mushrooms[2]
    h = g.rho / 8
    W = collar_width(g, P.tau)
    box = ((g.a - 3 * g.r, g.base - 3 * W), (g.a + 3 * g.r, g.cap_center[1] + g.r))
    wide = sample_interior(sjohn_mushroom, h, box)
    narrow = sample_interior(sjohn_mushroom, h, stem_window(g, P.tau))
    uw = mushroom_test_function(sjohn_mushroom, 2, wide)
    un = mushroom_test_function(sjohn_mushroom, 2, narrow)
    full = fractional_energy(uw, P).total
    assert fractional_energy(un, P, mask=active_mask(un, P)).total == pytest.approx(full, rel=1e-10)


def test_collar_needs_tau_below_one(sjohn_mushroom):
    with pytest.raises(DomainError):
        collar_width(sjohn_mushroom.mushrooms[0], 1.0)


@pytest.mark.parametrize("sigma", [2.0, 3.0])
def test_equal_exponent_mushrooms_scale_with_sigma(sigma):
    dom = make_mushroom(MushroomSpec(r_list=(0.25, 0.125, 0.0625), sigma=sigma, h=sigma, side=1.0))
    fit = fit_exponents(sharpness_sweep(dom, P))
    assert fit.slope_energy / sigma == pytest.approx(P.n - P.p * P.delta, abs=0.05)


# -------------------------------------------------------- potential check


def test_potential_constant(unit_square):
    nodes = sample_interior(unit_square, 2.0**-4)
    out = pointwise_potential_check(GridFunction(nodes, np.full(len(nodes), 2.0)), P)
    assert out["max_ratio"] == 0.0


def test_potential_linear_stable(unit_square):
    vals = []
    for k in (6, 7):
        nodes = sample_interior(unit_square, 2.0**-k)
        vals.append(pointwise_potential_check(GridFunction(nodes, nodes.points[:, 0]), P)["max_ratio"])
    assert np.all(np.isfinite(vals))
    assert abs(vals[1] / vals[0] - 1) <= 0.2


def test_potential_random_smooth(unit_square):
    nodes = sample_interior(unit_square, 2.0**-5)
    ratios = np.array([pointwise_potential_check(random_smooth_function(nodes, s), P)["max_ratio"] for s in range(10)])
    assert np.all(np.isfinite(ratios))
    assert ratios.max() / np.median(ratios) < 10


def test_potential_floor_and_ball(unit_square):
    nodes = sample_interior(unit_square, 2.0**-4)
    u = GridFunction(nodes, nodes.points[:, 0])
    with pytest.raises(InsufficientDataError):
        pointwise_potential_check(u, P, floor=2.0)
    with pytest.raises(DomainError):
        pointwise_potential_check(u, P, B0_center=(0.51, 0.51), B0_radius=1e-6)


def test_random_smooth_is_seeded(unit_square):
    nodes = sample_interior(unit_square, 2.0**-4)
    a = random_smooth_function(nodes, 3).values
    assert np.array_equal(a, random_smooth_function(nodes, 3).values)
    assert not np.array_equal(a, random_smooth_function(nodes, 4).values)
