from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsp.core import ExponentParams
from fracsp.errors import InsufficientDataError
from fracsp.geometry import half_plane
from fracsp.quasihyperbolic import (
    build_graph,
    estimate_qhbc_beta,
    past_power_sums,
    qh_distance,
    qh_geodesic,
    shadow_scaling_fit,
    shadow_sum_check,
    shadows,
)
from fracsp.whitney import decompose

WINDOW = ((-1.0, 0.0), (1.0, 1.5))


@pytest.fixture(scope="module")
def square_graph(unit_square):
    return build_graph(unit_square, 2.0**-6)


@pytest.fixture(scope="module")
def square_shadows(unit_square):
    dec = decompose(unit_square, 8)
    return dec, shadows(dec, unit_square, 2.0**-8)


@pytest.fixture(scope="module")
def qhbc_shadows(qhbc_mushroom):
    dec = decompose(qhbc_mushroom, 9)
    return dec, shadows(dec, qhbc_mushroom, 2.0**-8)


def test_same_point_is_zero(unit_square):
    assert qh_distance(unit_square, (0.3, 0.4), (0.3, 0.4), 2.0**-5) == 0.0
    assert len(qh_geodesic(unit_square, (0.3, 0.4), (0.3, 0.4), 2.0**-5)) == 1


def test_half_plane_vertical_pair():
    k = qh_distance(half_plane(), (0.0, 0.1), (0.0, 1.0), 2.0**-7, window=WINDOW)
    assert k == pytest.approx(math.log(10), rel=0.03)


def test_half_plane_geodesic_is_vertical():
    h = 2.0**-7
    geo = qh_geodesic(half_plane(), (0.0, 0.1), (0.0, 1.0), h, window=WINDOW)
    assert np.max(np.abs(geo.points[:, 0])) <= 2 * h


def test_square_golden(unit_square, goldens):
    golden = goldens["qh_square"]["extrapolated"]
    k = qh_distance(unit_square, (0.5, 0.5), (0.5, 0.25), 2.0**-8)
    assert k == pytest.approx(golden, rel=1e-3)
    assert golden == pytest.approx(math.log(2), rel=1e-6)


def test_geodesic_length_is_weight_sum(unit_square):
    geo = qh_geodesic(unit_square, (0.2, 0.3), (0.8, 0.75), 2.0**-6)
    assert geo.length == pytest.approx(float(np.sum(geo.weights)), rel=1e-15)


def test_geodesic_enters_cap_through_stem(sjohn_mushroom):
    g = sjohn_mushroom.mushrooms[0]
    geo = qh_geodesic(sjohn_mushroom, sjohn_mushroom.x0, g.cap_center, 2.0**-7)
    pts = geo.points
    above = pts[:, 1] > g.base
    first = int(np.argmax(above))
    # the first crossing of the top side lies in the stem mouth
    a, b = pts[first - 1], pts[first]
    t = (g.base - a[1]) / (b[1] - a[1])
    xc = a[0] + t * (b[0] - a[0])
    assert abs(xc - g.a) <= g.rho
    stem = g.in_stem(pts)
    assert stem.any()


def test_beta_disk_near_one(unit_disk):
    fit = estimate_qhbc_beta(unit_disk, 2.0**-7, 3000, seed=0)
    assert fit.beta_hat == pytest.approx(1.0, abs=0.1)


def test_beta_square_corner_limited(unit_square):
    fit = estimate_qhbc_beta(unit_square, 2.0**-7, 3000, seed=0)
    assert fit.beta_hat == pytest.approx(1 / math.sqrt(2), abs=0.1)


def test_beta_single_sample_errors(unit_square):
    with pytest.raises(InsufficientDataError):
        estimate_qhbc_beta(unit_square, 2.0**-5, 1, sample_points=[unit_square.x0])


def test_lower_bound_improves_with_resolution(unit_square):
    rng = np.random.default_rng(5)
    pts = rng.uniform(0.02, 0.98, size=(40, 2))
    d0 = 0.5
    slack = []
    for h in (2.0**-6, 2.0**-7):
        g = build_graph(unit_square, h)
        k = np.array([qh_distance(unit_square, p, unit_square.x0, h, graph=g) for p in pts])
        lb = np.abs(np.log(unit_square.dist(pts) / d0))
        slack.append(max(0.0, float(np.max(lb - k))))
    assert slack[1] <= slack[0] + 1e-12
    assert slack[1] < 0.05


def test_refinement_does_not_increase_distance(unit_square):
    # endpoints on the coarsest lattice, so every coarse path survives refinement
    x, y = (0.25, 0.375), (0.75, 0.875)
    ks = [qh_distance(unit_square, x, y, 2.0**-j) for j in (5, 6, 7, 8)]
    assert all(b <= a * (1 + 1e-3) for a, b in zip(ks, ks[1:]))


pt = st.tuples(st.floats(0.05, 0.95), st.floats(0.05, 0.95))


@settings(max_examples=25, deadline=None)
@given(pt, pt, pt)
def test_symmetry_and_triangle(unit_square, square_graph, x, y, z):
    h = square_graph.h
    kxy = qh_distance(unit_square, x, y, h, graph=square_graph)
    kyx = qh_distance(unit_square, y, x, h, graph=square_graph)
    assert kxy == pytest.approx(kyx, rel=1e-12, abs=1e-12)
    kxz = qh_distance(unit_square, x, z, h, graph=square_graph)
    kzy = qh_distance(unit_square, z, y, h, graph=square_graph)
    assert kxy <= kxz + kzy + 1e-9


def test_past_and_shadow_definitions(square_shadows):
    dec, sh = square_shadows
    q0 = dec.q0
    res = np.flatnonzero(sh.resolved)
    past = sh.past
    assert past[q0, q0] == 1
    assert np.all(past[res, res] == 1)
    assert np.all(past[res, q0].toarray().ravel() == 1)
    assert set(res) <= set(sh.record(q0).shadow.tolist())


def test_past_power_sums_stable(unit_square):
    maxima = []
    for j in (7, 8, 9):
        dec = decompose(unit_square, j)
        maxima.append(past_power_sums(shadows(dec, unit_square, 2.0**-8), dec, 0.5).max())
    assert np.all(np.isfinite(maxima))
    assert max(maxima) / min(maxima) < 1.25


def test_square_shadow_slope(square_shadows):
    dec, sh = square_shadows
    assert shadow_scaling_fit(sh, dec).slope >= 1 - 0.15


def test_qhbc_mushroom_shadow_slope(qhbc_shadows):
    dec, sh = qhbc_shadows
    assert shadow_scaling_fit(sh, dec).slope >= 0.5 - 0.1


def test_single_generation_fit_errors(square_shadows):
    dec, sh = square_shadows
    one = sh.resolved & (dec.gen == dec.gen[sh.resolved].max())
    with pytest.raises(InsufficientDataError):
        shadow_scaling_fit(sh, dec, region=one)


def test_shadow_sum_empty_and_single(square_shadows):
    dec, sh = square_shadows
    par = ExponentParams(2, 2.0, 2.0, 0.5, 0.5)
    assert shadow_sum_check(dec, sh, [], par) == 0.0
    r = shadow_sum_check(dec, sh, [int(np.flatnonzero(sh.resolved)[-1])], par)
    assert np.isfinite(r) and r > 0


def test_shadow_sum_spread_on_qhbc_mushroom(qhbc_shadows):
    dec, sh = qhbc_shadows
    par = ExponentParams(2, 2.0, 2.0, 0.5, 0.5)
    rng = np.random.default_rng(0)
    res = np.flatnonzero(sh.resolved)
    ratios = np.array(
        [shadow_sum_check(dec, sh, rng.choice(res, size=rng.integers(1, 40), replace=False), par) for _ in range(50)]
    )
    assert np.all(np.isfinite(ratios))
    assert ratios.max() / np.median(ratios) < 10
