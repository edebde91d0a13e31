import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfconc.convex import (
    ALPHA0,
    ALPHA1,
    MAX_ITERATIONS,
    alpha,
    bennett_mgf_bound,
    bennett_mgf_middle,
    bisect_oracle,
    brackets,
    conjugate_eval,
    inverse,
    inverse_table,
    newton_iterates,
    refined_upper,
    scaled_inverse,
)

GRID = np.logspace(-6, 3, 50)
IDS = (ALPHA0, ALPHA1)


def test_inverse_at_zero():
    for fid in IDS:
        res = inverse(fid, 0.0)
        assert (res.value, res.lower, res.upper) == (0.0, 0.0, 0.0)


def test_reference_values():
    res = inverse(ALPHA1, 2.0)
    assert 2.0 <= res.value <= 2.0 + 2.0 / 3.0
    assert res.value == pytest.approx(bisect_oracle(ALPHA1, 2.0), abs=1e-12)
    assert res.value == pytest.approx(2.5911, abs=1e-4)
    res = inverse(ALPHA0, 1.0)
    assert 10 / 3 <= res.value <= 4.0
    assert res.value == pytest.approx(3.5052, abs=1e-4)


def test_conjugates_closed_form():
    assert conjugate_eval(ALPHA1, 1.0) == pytest.approx(2 * math.log(2) - 1, rel=1e-15)
    assert conjugate_eval(ALPHA0, 1.0) == pytest.approx(0.5 * (1 - math.log(2)), rel=1e-15)
    with pytest.raises(ValueError):
        conjugate_eval(ALPHA0, -1.0)


@pytest.mark.parametrize("fid", IDS)
def test_grid_brackets_and_agreement(fid):
    for x in GRID:
        res = inverse(fid, x)
        assert res.converged and res.iterations <= MAX_ITERATIONS
        assert res.lower <= res.value <= res.upper
        assert abs(res.value - bisect_oracle(fid, x)) <= 1e-9
        assert abs(conjugate_eval(fid, res.value) - x) <= 1e-10 * max(1.0, x)


@pytest.mark.parametrize("fid", IDS)
def test_newton_iterates_decrease(fid):
    for x in GRID:
        zs = newton_iterates(fid, x)
        assert all(b < a for a, b in zip(zs, zs[1:]))
        assert zs[-1] >= inverse(fid, x).value - 1e-12 * max(1.0, zs[-1])


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(IDS), st.floats(1e-8, 1e4))
def test_refined_upper_is_tighter(fid, x):
    lo, hi = brackets(fid, x)
    z1 = refined_upper(fid, x)
    v = inverse(fid, x).value
    assert lo <= v * (1 + 1e-12) and v <= z1 * (1 + 1e-12) and z1 <= hi * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(IDS), st.floats(1e-8, 1e3), st.floats(1e-8, 1e3))
def test_inverse_is_increasing(fid, a, b):
    lo, hi = sorted((a, b))
    assert inverse(fid, lo).value <= inverse(fid, hi).value


def test_conjugate_is_legendre_transform():
    # alpha*(lam) = sup_t (lam t - alpha(t)), checked on a fine grid
    for fid, tmax in ((ALPHA1, 5.0), (ALPHA0, 0.4999)):
        t = np.linspace(0.0, tmax, 200_001)
        for lam in (0.3, 1.0, 2.5):
            sup = max(lam * ti - alpha(fid, ti) for ti in t[::50])
            assert conjugate_eval(fid, lam) == pytest.approx(sup, rel=1e-4)


def test_scaled_inverse():
    assert scaled_inverse(ALPHA1, 2.0, 1.0, 1.0) == inverse(ALPHA1, 2.0).value
    assert scaled_inverse(ALPHA1, 2.0, 4.0, 0.5) == pytest.approx(2.0 * inverse(ALPHA1, 0.5).value)


def test_bennett_mgf():
    assert bennett_mgf_middle(0.3, 0.0) == 1.0
    assert bennett_mgf_bound(0.0, 3.0) == 1.0 and bennett_mgf_middle(0.0, 3.0) == 1.0
    for v in (0.1, 1.0, 3.0):
        for t in (0.1, 1.0, 4.0):
            assert 1.0 <= bennett_mgf_middle(v, t) <= bennett_mgf_bound(v, t)


def test_inverse_table_layout():
    rows = inverse_table([0.04, 1, 2])
    assert len(rows) == 6
    assert [r[1] for r in rows] == ["ALPHA0"] * 3 + ["ALPHA1"] * 3
    assert all(r[3] <= r[2] <= r[4] for r in rows)
