from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from oracles import normal_equations

from skidkit.distributions import t_quantile
from skidkit.errors import (
    DegenerateX,
    DomainError,
    TooFewGroups,
    TooFewSamples,
    ZeroVariance,
)
from skidkit.inference import (
    anova_oneway,
    ci_from_moments,
    ci_two_sample,
    error_measures,
    estimation_number,
    information_quantity,
    linear_regression,
    pooled_t_statistic,
    summarize,
    summarize_moments,
)

finite = st.floats(-50, 50, allow_nan=False)
samples = st.lists(st.floats(5, 12), min_size=2, max_size=40)


# --- summarize ---------------------------------------------------------------


def test_summarize_hand_example():
    s = summarize([9, 10, 11])
    assert s.mean == 10
    assert s.variance == pytest.approx(1.0)
    assert s.std_error == pytest.approx(0.57735, abs=1e-5)
    assert (s.min, s.max, s.count) == (9, 11, 3)


def test_summarize_constant_values():
    s = summarize([9.5] * 6)
    assert (s.variance, s.std_error, s.cl95) == (0.0, 0.0, 0.0)
    assert s.mean == 9.5


def test_summarize_moments_reproduces_published_column():
    s = summarize_moments(9.2686, 0.5451, 38, 7.3327, 10.4333)
    assert s.std_error == pytest.approx(0.1198, abs=5e-4)
    assert s.cl95 == pytest.approx(0.2427, abs=1e-3)


@pytest.mark.parametrize("values", [[], [1.0]])
def test_summarize_needs_two(values):
    with pytest.raises(TooFewSamples):
        summarize(values)


def test_summarize_rejects_nan():
    with pytest.raises(DomainError):
        summarize([1.0, math.nan])


@given(samples)
def test_summary_invariants(values):
    s = summarize(values)
    assert s.min <= s.mean <= s.max
    assert s.std_error == pytest.approx(math.sqrt(s.variance / s.count), rel=1e-12, abs=1e-300)
    assert s.cl95 == pytest.approx(t_quantile(0.975, s.count - 1) * s.std_error, rel=1e-9, abs=1e-300)
    assert s.variance == pytest.approx(np.var(values, ddof=1), rel=1e-9, abs=1e-12)


@given(st.floats(0.01, 5), st.integers(2, 200))
def test_cl95_shrinks_with_count(variance, n):
    assert summarize_moments(0, variance, n + 1, -1, 1).cl95 < summarize_moments(0, variance, n, -1, 1).cl95


# --- information quantity / estimation number -----------------------------


def test_iq_single_sample():
    # 100 values with unbiased variance exactly 4
    x = np.tile([-1.0, 1.0], 50)
    x *= 2 / math.sqrt(np.var(x, ddof=1))
    r = information_quantity(x)
    assert (r.n, r.estimation_number) == (100, None)
    assert r.s2 == pytest.approx(4.0)
    assert r.iq == pytest.approx(25.0)


def test_iq_pooled_groups():
    g = np.tile([-1.0, 1.0], 25)
    g *= math.sqrt(2 / np.var(g, ddof=1))
    r = information_quantity(pooled=[g, g + 3.0])
    assert r.n == 100
    assert r.s2 == pytest.approx(2.0)
    assert r.iq == pytest.approx(50.0)


def test_iq_zero_variance():
    with pytest.raises(ZeroVariance):
        information_quantity([3.0, 3.0, 3.0])


def test_iq_argument_contract():
    with pytest.raises(ValueError):
        information_quantity()
    with pytest.raises(ValueError):
        information_quantity([1, 2], pooled=[[1, 2]])
    with pytest.raises(TooFewSamples):
        information_quantity(pooled=[[1, 2], [3]])


@given(samples)
def test_iq_definition(values):
    assume(np.var(values, ddof=1) > 1e-9)
    r = information_quantity(values)
    assert r.iq == pytest.approx(r.n / r.s2, rel=1e-12)


def test_estimation_number_published_cells():
    assert estimation_number(713.8820, 203.3801) == 4
    assert estimation_number(470.6407, 13.3863) == 36


@given(st.floats(1e-3, 1e6))
def test_estimation_number_equal_precision(x):
    assert estimation_number(x, x) == 1


@pytest.mark.parametrize("num", range(1, 13))
@pytest.mark.parametrize("den", range(1, 13))
def test_estimation_number_rational_grid(num, den):
    k = Fraction(num, den)
    iq_ref = 250.0
    assert estimation_number(iq_ref, iq_ref * float(k)) == math.ceil(1 / k)


@pytest.mark.parametrize("args", [(0, 1), (1, 0), (-1, 2), (math.inf, 1)])
def test_estimation_number_domain(args):
    with pytest.raises(DomainError):
        estimation_number(*args)


# --- ANOVA -------------------------------------------------------------------


def test_anova_identical_groups():
    r = anova_oneway([[1, 2, 3], [1, 2, 3]])
    assert r.f_value == 0.0
    assert not r.reject_h0


def test_anova_hand_example():
    r = anova_oneway([[1, 2, 3], [4, 5, 6]])
    assert r.ss_between == pytest.approx(13.5)
    assert r.ss_within == pytest.approx(4.0)
    assert r.f_value == pytest.approx(13.5)
    assert (r.df_between, r.df_within) == (1, 4)


def test_anova_two_groups_of_ten_critical_value():
    rng = np.random.default_rng(8)
    r = anova_oneway([rng.normal(9.7, 0.1, 10), rng.normal(9.6, 0.2, 10)])
    assert (r.df_between, r.df_within) == (1, 18)
    assert r.f_critical == pytest.approx(4.41, abs=0.01)


def test_anova_unbalanced_three_groups():
    groups = [[9.1, 9.4, 9.9], [8.7, 9.0, 9.2, 8.8, 9.5], [10.0, 9.6]]
    r = anova_oneway(groups)
    assert (r.df_between, r.df_within) == (2, 7)
    grand = np.mean(np.concatenate(groups))
    assert r.ss_between == pytest.approx(sum(len(g) * (np.mean(g) - grand) ** 2 for g in groups))


def test_anova_errors():
    with pytest.raises(TooFewGroups):
        anova_oneway([[1, 2, 3]])
    with pytest.raises(TooFewSamples):
        anova_oneway([[1, 2, 3], [4]])
    with pytest.raises(DomainError):
        anova_oneway([[1, 2], [3, 4]], alpha=1.5)


def test_anova_zero_within_variance():
    r = anova_oneway([[1, 1], [2, 2]])
    assert r.f_value == math.inf and r.reject_h0


@settings(max_examples=80)
@given(st.lists(st.lists(finite, min_size=2, max_size=12), min_size=2, max_size=5))
def test_anova_decomposition(groups):
    r = anova_oneway(groups)
    scale = max(r.ss_total, 1e-12)
    assert abs(r.ss_total - (r.ss_between + r.ss_within)) <= 1e-9 * scale
    assert r.reject_h0 == (r.f_value > r.f_critical)


@settings(max_examples=80)
@given(samples, samples)
def test_anova_is_squared_pooled_t(a, b):
    assume(np.var(np.concatenate([a, b])) > 1e-6)
    r = anova_oneway([a, b])
    t = pooled_t_statistic(a, b)
    assume(math.isfinite(t))
    assert r.f_value == pytest.approx(t * t, rel=1e-9, abs=1e-12)


@settings(max_examples=80)
@given(samples, samples)
def test_ci_contains_zero_iff_anova_accepts(a, b):
    r = anova_oneway([a, b])
    ci = ci_two_sample(a, b)
    # ties broken within 1e-9 of the critical value
    assume(abs(r.f_value - r.f_critical) > 1e-9 * r.f_critical)
    assert (ci.low <= 0 <= ci.high) == (not r.reject_h0)


# --- regression --------------------------------------------------------------


def test_regression_exact_line_through_origin():
    r = linear_regression([(1, 2), (2, 4), (3, 6), (4.5, 9)], "through_origin")
    assert (r.beta0, r.beta1) == (0.0, 2.0)
    assert r.r2 == 1.0
    assert r.rse == pytest.approx(0.0, abs=1e-12)
    assert r.r2_kind == "uncentered"


def test_regression_exact_affine_fit():
    r = linear_regression([(0, 1), (1, 3), (2, 5)], "with_intercept")
    assert r.beta0 == pytest.approx(1.0, abs=1e-12)
    assert r.beta1 == pytest.approx(2.0, abs=1e-12)
    assert r.r2 == pytest.approx(1.0, abs=1e-12)
    assert r.rse == pytest.approx(0.0, abs=1e-12)
    assert r.r2_kind == "centered"


def test_regression_noisy_points_against_oracle():
    rng = np.random.default_rng(11)
    x = rng.uniform(8, 11, 10)
    pts = list(zip(x, 0.3 + 0.97 * x + rng.normal(0, 0.1, 10)))
    for model, intercept in (("with_intercept", True), ("through_origin", False)):
        r = linear_regression(pts, model)
        b0, b1 = normal_equations(pts, intercept)
        assert r.beta0 == pytest.approx(b0, abs=1e-6)
        assert r.beta1 == pytest.approx(b1, abs=1e-6)
        resid = np.array([y - (b0 + b1 * x) for x, y in pts])
        assert r.rse == pytest.approx(math.sqrt((resid**2).sum() / (10 - (2 if intercept else 1))), rel=1e-9)


def test_regression_errors():
    with pytest.raises(TooFewSamples):
        linear_regression([(1, 2), (2, 3)], "with_intercept")
    with pytest.raises(TooFewSamples):
        linear_regression([(1, 2)], "through_origin")
    with pytest.raises(DegenerateX):
        linear_regression([(2, 1), (2, 3), (2, 4)], "with_intercept")
    with pytest.raises(DegenerateX):
        linear_regression([(0, 1), (0, 3)], "through_origin")
    with pytest.raises(ValueError):
        linear_regression([(1, 2), (2, 3), (3, 3)], "quadratic")


def test_regression_predict():
    r = linear_regression([(0, 1), (1, 3), (2, 5)])
    assert r.predict([3, 4]).tolist() == pytest.approx([7, 9])


points = st.lists(st.tuples(st.floats(-20, 20), st.floats(-20, 20)), min_size=3, max_size=30)


@settings(max_examples=80)
@given(points)
def test_regression_residuals_orthogonal(pts):
    x = np.array([p[0] for p in pts])
    assume(np.ptp(x) > 1e-3)
    r = linear_regression(pts, "with_intercept")
    y = np.array([p[1] for p in pts])
    e = y - r.predict(x)
    scale = max(1.0, np.abs(y).max(), np.abs(x).max()) ** 2
    assert abs(e.sum()) <= 1e-9 * scale * len(pts)
    assert abs((e * x).sum()) <= 1e-9 * scale * len(pts)
    assert 0.0 <= r.r2 <= 1.0 and r.rse >= 0


# --- confidence intervals and errors -----------------------------------------


def test_ci_identical_samples():
    ci = ci_two_sample([9.1, 9.5, 9.8], [9.1, 9.5, 9.8])
    assert ci.diff_mean == 0 and ci.eps_abs == 0
    assert ci.low == pytest.approx(-ci.high)


def test_ci_published_error_measures():
    eps_abs, eps_rel = error_measures(9.7216, 9.5507)
    assert eps_abs == pytest.approx(0.1709, abs=1e-12)
    assert round(eps_abs, 2) == 0.17
    assert eps_rel == pytest.approx(0.0176, abs=5e-5)
    assert round(eps_rel, 2) == 0.02


def test_ci_hand_computation():
    ci = ci_from_moments(10.0, 0.5, 2, 9.0, 0.5, 2)
    assert ci.high - ci.diff_mean == pytest.approx(4.302653 * 0.7071068, abs=1e-5)
    assert (ci.low, ci.high) == (pytest.approx(-2.0425, abs=1e-4), pytest.approx(4.0425, abs=1e-4))


def test_error_measures_reference_denominator():
    assert error_measures(10.0, 8.0) == (2.0, 0.2)
    assert error_measures(8.0, 10.0) == (2.0, 0.25)
    with pytest.raises(DomainError):
        error_measures(0.0, 1.0)


@given(samples, samples)
def test_ci_symmetric(a, b):
    ci = ci_two_sample(a, b)
    assert ci.low <= ci.diff_mean <= ci.high
    assert (ci.high - ci.diff_mean) == pytest.approx(ci.diff_mean - ci.low, abs=1e-9)
    assert ci.eps_abs == pytest.approx(abs(np.mean(a) - np.mean(b)), abs=1e-12)
    assert ci.eps_rel == pytest.approx(ci.eps_abs / abs(np.mean(a)), rel=1e-12, abs=1e-15)
