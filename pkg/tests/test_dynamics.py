import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gwlab.dynamics import (
    CircleMapSpec,
    count_periodic_points,
    derivative_bounds,
    eval_map,
    inverse_branches,
    inverse_lift,
    periodic_orbits,
)
from gwlab.errors import BudgetExceeded, NotExpanding

DOUBLING = CircleMapSpec(2)
SIN01 = CircleMapSpec(2, ((1, 0.0, 0.1),))
CUBIC = CircleMapSpec(3, ((1, 0.04, 0.0), (2, 0.0, 0.05)))


def test_eval_map_examples():
    assert eval_map(DOUBLING, 0.25) == (0.5, 2.0, 0.0)
    f, df, d2f = eval_map(SIN01, 0.0)
    assert f == pytest.approx(0.0, abs=1e-15)
    assert df == pytest.approx(2 + 0.2 * math.pi, abs=1e-12)
    assert d2f == pytest.approx(0.0, abs=1e-12)
    f, df, d2f = eval_map(CircleMapSpec(3), 0.9)
    assert f == pytest.approx(2.7, abs=1e-15)
    assert (df, d2f) == (3.0, 0.0)


def test_eval_map_vectorised_and_finite_differences():
    x = np.linspace(0, 1, 101)
    f, df, d2f = eval_map(CUBIC, x)
    h = 1e-6
    assert np.allclose((CUBIC.f(x + h) - CUBIC.f(x - h)) / (2 * h), df, atol=1e-7)
    assert np.allclose((CUBIC.df(x + h) - CUBIC.df(x - h)) / (2 * h), d2f, atol=1e-5)
    # lift property f(x + 1) = f(x) + d
    assert np.allclose(CUBIC.f(x + 1), f + 3, atol=1e-13)


def test_derivative_bounds():
    db = derivative_bounds(DOUBLING)
    assert db.b == pytest.approx(2.0) and db.B == pytest.approx(2.0)
    db = derivative_bounds(SIN01)
    assert db.b == pytest.approx(2 - 0.2 * math.pi, abs=1e-4)
    assert db.B == pytest.approx(2 + 0.2 * math.pi, abs=1e-4)
    # certified: never above the true infimum
    assert db.b <= 2 - 0.2 * math.pi
    with pytest.raises(NotExpanding):
        derivative_bounds(CircleMapSpec(2, ((1, 0.0, 0.5),)))
    with pytest.raises(ValueError):
        derivative_bounds(DOUBLING, grid_size=16)


def test_spec_validation_and_roundtrip():
    with pytest.raises(ValueError):
        CircleMapSpec(1)
    with pytest.raises(ValueError):
        CircleMapSpec(2, ((0, 1.0, 0.0),))
    assert CircleMapSpec.from_dict(CUBIC.to_dict()) == CUBIC


def test_inverse_branches_examples():
    assert np.allclose(inverse_branches(DOUBLING, 0.5), [0.25, 0.75])
    assert np.allclose(inverse_branches(DOUBLING, 0.0), [0.0, 0.5])
    xs = inverse_branches(SIN01, 0.5)
    assert xs.size == 2
    fx = np.sort(SIN01.f(xs))
    assert np.allclose(fx, [0.5, 1.5], atol=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1, exclude_max=True))
def test_inverse_branches_are_preimages(y):
    for spec in (SIN01, CUBIC):
        xs = inverse_branches(spec, y)
        assert xs.size == spec.degree
        assert np.all((0 <= xs) & (xs < 1))
        r = np.mod(spec.f(xs) - y + 0.5, 1.0) - 0.5
        assert np.max(np.abs(r)) < 1e-13


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50))
def test_inverse_lift_roundtrip(t):
    x = inverse_lift(CUBIC, t)
    assert abs(CUBIC.f(x) - t) <= 1e-13 * max(1.0, abs(t))


def _orbit_fractions(orbits, denom):
    return {tuple(Fraction(round(p * denom), denom) for p in o.points) for o in orbits}


def test_periodic_orbits_doubling():
    o1 = periodic_orbits(DOUBLING, 1)
    assert len(o1) == 1 and o1[0].points[0] == pytest.approx(0.0, abs=1e-13)
    o2 = [o for o in periodic_orbits(DOUBLING, 2) if o.period == 2]
    assert len(o2) == 1 and np.allclose(o2[0].points, [1 / 3, 2 / 3])
    o3 = [o for o in periodic_orbits(DOUBLING, 3) if o.period == 3]
    assert _orbit_fractions(o3, 7) == {
        (Fraction(1, 7), Fraction(2, 7), Fraction(4, 7)),
        (Fraction(3, 7), Fraction(6, 7), Fraction(5, 7)),
    }


@pytest.mark.parametrize("spec,p_max", [(DOUBLING, 8), (SIN01, 6), (CircleMapSpec(3), 5), (CUBIC, 4)])
def test_periodic_point_counts(spec, p_max):
    orbits = periodic_orbits(spec, p_max)
    for p in range(1, p_max + 1):
        n_pts = sum(o.period for o in orbits if o.period == p)
        assert n_pts == count_periodic_points(spec.degree, p)
    for o in orbits:
        x = np.asarray(o.points)
        # each point maps to the next one around the orbit
        img = np.mod(spec.f(x), 1.0)
        gap = np.abs(np.mod(img - np.roll(x, -1) + 0.5, 1.0) - 0.5)
        assert gap.max() < 1e-12


def test_periodic_points_linear_brute_force():
    # for x -> d x mod 1 the period-p points are k / (d^p - 1)
    for d, p in ((2, 5), (3, 3)):
        orbits = periodic_orbits(CircleMapSpec(d), p)
        pts = sorted(x for o in orbits if p % o.period == 0 for x in o.points)
        expected = [k / (d**p - 1) for k in range(d**p - 1)]
        assert np.allclose(pts, expected, atol=1e-12)


def test_count_periodic_points_identity():
    for d in (2, 3, 4):
        for p in range(1, 9):
            total = sum(count_periodic_points(d, q) for q in range(1, p + 1) if p % q == 0)
            assert total == d**p - 1


def test_periodic_orbits_budget():
    with pytest.raises(BudgetExceeded):
        periodic_orbits(CircleMapSpec(3), 13)
    with pytest.raises(ValueError):
        periodic_orbits(DOUBLING, 0)
