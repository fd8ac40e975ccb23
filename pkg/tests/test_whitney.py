from __future__ import annotations

import numpy as np
import pytest

from fracsp.geometry import MushroomSpec, make_mushroom
from fracsp.io import read_csv
from fracsp.whitney import COVER_CONSTANT, decompose, replace_cube, side_of, verify

TWO_MUSHROOMS = MushroomSpec(r_list=(0.25, 0.125), sigma=1.5, h=1.0, side=1.0)


@pytest.fixture(scope="module")
def square_dec(unit_square):
    return decompose(unit_square, 10)


def test_side_gives_dyadic_diameter():
    assert side_of(3) * np.sqrt(2) == pytest.approx(1 / 8, rel=1e-15)


def test_square_ratios_j8(unit_square):
    dec = decompose(unit_square, 8)
    ratio = unit_square.square_distance(dec.lo, dec.side) / dec.diam
    assert ratio.min() >= 1.0 and ratio.max() <= 4.0


def test_square_coverage_within_one_percent(square_dec):
    rep = verify(square_dec)
    assert 0 <= rep["coverage_deficit"] < 0.01


@pytest.mark.parametrize("name", ["square", "disk", "mushroom"])
def test_builtin_domains_have_no_violations(name, unit_square, unit_disk):
    dom = {"square": unit_square, "disk": unit_disk, "mushroom": make_mushroom(TWO_MUSHROOMS)}[name]
    rep = verify(decompose(dom, 9))
    assert rep["violations"] == 0
    assert rep["overlaps"] == 0 and rep["disjoint"]


def test_adjacent_generation_gap_bounded(square_dec):
    assert verify(square_dec)["max_adjacent_generation_gap"] <= 2


def test_inflated_cube_gives_one_violation(square_dec):
    ratio = square_dec.domain.square_distance(square_dec.lo, square_dec.side) / square_dec.diam
    k = int(np.argmin(ratio))
    c = square_dec.center[k]
    s = 2 * square_dec.side[k]
    bad = replace_cube(square_dec, k, c - s / 2, s)
    rep = verify(bad)
    assert rep["violations"] == 1
    assert rep["violating_cubes"] == [k]


def test_deficit_decreases_with_depth(unit_disk):
    deficits = [verify(decompose(unit_disk, j))["coverage_deficit"] for j in (6, 8, 10)]
    assert deficits[0] > deficits[1] > deficits[2] > 0


def test_cover_constant_region_is_covered(unit_disk):
    dec = decompose(unit_disk, 8)
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1, 1, size=(20000, 2))
    deep = pts[unit_disk.dist(pts) > COVER_CONSTANT * 2.0**-8]
    assert np.all(dec.locate(deep) >= 0)


def test_base_cube_contains_x0(square_dec):
    k = square_dec.q0
    x0 = np.array(square_dec.domain.x0)
    lo, side = square_dec.lo[k], square_dec.side[k]
    assert np.all(x0 >= lo) and np.all(x0 <= lo + side)


def test_deterministic(unit_disk):
    a, b = decompose(unit_disk, 8), decompose(unit_disk, 8)
    assert np.array_equal(a.lo, b.lo) and np.array_equal(a.gen, b.gen)


def test_csv_export(tmp_path, unit_square):
    dec = decompose(unit_square, 5)
    path = dec.to_csv(tmp_path / "w.csv")
    header, data = read_csv(path)
    assert header == ["j", "ix", "iy", "diam", "dist"]
    assert len(data) == len(dec)
    assert np.all(data[:, 4] >= data[:, 3])
