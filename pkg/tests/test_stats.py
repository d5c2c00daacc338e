import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import stats as sst

from dialogrl.stats import StatisticsError, linear_fit, pearson, t_test

from oracles import ols_reference, pearson_reference, welch_reference

# two 10-element samples from a classic textbook exercise
TEXTBOOK_A = [19.1, 21.3, 18.2, 20.7, 22.4, 19.8, 20.1, 21.9, 18.8, 20.5]
TEXTBOOK_B = [17.6, 19.2, 18.4, 16.9, 20.3, 18.1, 17.7, 19.5, 18.8, 17.2]


def test_identical_samples():
    res = t_test([1, 2, 3, 4], [1, 2, 3, 4])
    assert res.t == 0 and res.p == 1


def test_swap_negates_t():
    a, b = [1.0, 2.5, 3.1, 4.2], [2.2, 3.9, 4.4, 5.0, 6.1]
    r1, r2 = t_test(a, b), t_test(b, a)
    assert r1.t == -r2.t and r1.p == r2.p


def test_textbook_pair_against_reference():
    t, p, df = welch_reference(TEXTBOOK_A, TEXTBOOK_B)
    res = t_test(TEXTBOOK_A, TEXTBOOK_B)
    assert res.t == pytest.approx(t, abs=1e-6)
    assert res.p == pytest.approx(p, abs=1e-6)
    assert res.df == pytest.approx(df, abs=1e-6)


def test_zero_variance_conventions():
    assert t_test([2, 2, 2], [2, 2]).p == 1.0
    assert t_test([2, 2, 2], [3, 3]).p == 0.0
    with pytest.raises(StatisticsError):
        t_test([1], [1, 2])


def test_perfect_lines():
    xs = [1.0, 2.0, 3.0, 4.0, 5.0]
    r = pearson(xs, xs)
    assert r.r == pytest.approx(1.0) and r.p == 0.0
    assert linear_fit(xs, xs) == pytest.approx((1.0, 0.0))
    ys = [-x + 5 for x in xs]
    assert pearson(xs, ys).r == pytest.approx(-1.0)
    assert linear_fit(xs, ys) == pytest.approx((-1.0, 5.0))


def test_degenerate_inputs():
    with pytest.raises(StatisticsError):
        linear_fit([1, 1, 1], [1, 2, 3])
    with pytest.raises(StatisticsError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(StatisticsError):
        pearson([1, 2], [1, 2])
    with pytest.raises(StatisticsError):
        pearson([1, 2, 3], [1, 2])


@pytest.mark.parametrize("seed", range(50))
def test_random_instances_match_references(seed):
    g = np.random.default_rng(seed)
    a = g.normal(0, g.uniform(0.5, 3), size=g.integers(3, 30))
    b = g.normal(g.normal(), g.uniform(0.5, 3), size=g.integers(3, 30))
    res = t_test(a, b)
    t, p, _ = welch_reference(list(a), list(b))
    ref = sst.ttest_ind(a, b, equal_var=False)
    assert res.t == pytest.approx(t, abs=1e-6) and res.p == pytest.approx(p, abs=1e-6)
    assert res.p == pytest.approx(ref.pvalue, abs=1e-6)

    xs = g.normal(size=50)
    ys = g.normal() * xs + g.normal(size=50)
    r, rp = pearson_reference(list(xs), list(ys))
    got = pearson(xs, ys)
    assert got.r == pytest.approx(r, abs=1e-9) and got.p == pytest.approx(rp, abs=1e-6)
    slope, intercept = ols_reference(list(xs), list(ys))
    fit = linear_fit(xs, ys)
    assert fit.slope == pytest.approx(slope, abs=1e-9)
    assert fit.intercept == pytest.approx(intercept, abs=1e-9)
    lr = sst.linregress(xs, ys)
    assert fit.slope == pytest.approx(lr.slope, abs=1e-9)


@given(st.lists(st.floats(-100, 100), min_size=3, max_size=20),
       st.floats(0.1, 10), st.floats(-10, 10))
@settings(max_examples=100)
def test_affine_invariance(xs, scale, shift):
    # spreads near machine epsilon vanish under the shift itself
    assume(np.ptp(xs) > 1e-6)
    ys = [x * x for x in xs]
    try:
        base = pearson(xs, ys)
    except StatisticsError:
        return
    moved = pearson([scale * x + shift for x in xs], ys)
    assert math.isclose(base.r, moved.r, abs_tol=1e-6)
