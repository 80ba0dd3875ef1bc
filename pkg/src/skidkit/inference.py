"""Comparison statistics for braking-test methods.

Descriptive summaries, information quantity and estimation number, one-way
ANOVA with a Fisher test, simple linear regression with and without
intercept, and pooled two-sample confidence intervals with absolute and
relative errors. Variances use the ``n - 1`` denominator throughout.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np

from skidkit.distributions import f_critical, f_sf, t_quantile
from skidkit.errors import (
    DegenerateX,
    DomainError,
    TooFewGroups,
    TooFewSamples,
    ZeroVariance,
)

Model = Literal["with_intercept", "through_origin"]

#: Ratios this close (relative) to an integer count as that integer.
EN_INTEGER_TOL = 1e-9


@dataclass(frozen=True)
class TestSummary:
    """Descriptive statistics of one set of deceleration values (m/s²)."""

    __test__ = False  # not a pytest class

    mean: float
    variance: float
    std_error: float
    min: float
    max: float
    count: int
    cl95: float

    @property
    def std_dev(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class AnovaResult:
    ss_total: float
    ss_between: float
    ss_within: float
    df_between: int
    df_within: int
    f_value: float
    f_critical: float
    alpha: float
    reject_h0: bool
    p_value: float


@dataclass(frozen=True)
class RegressionResult:
    """Least-squares line ``y = beta0 + beta1 * x``.

    ``r2_kind`` records which R² definition applies: ``centered`` for the
    model with intercept, ``uncentered`` (1 - SS_res / Σy²) through the origin.
    """

    model: Model
    beta0: float
    beta1: float
    r2: float
    rse: float
    n: int
    r2_kind: str

    def predict(self, x):
        return self.beta0 + self.beta1 * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class CiResult:
    diff_mean: float
    low: float
    high: float
    eps_abs: float
    eps_rel: float
    alpha: float


@dataclass(frozen=True)
class PrecisionResult:
    iq: float
    n: int
    s2: float
    estimation_number: int | None = None


def _values(values, name: str = "values") -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contain non-finite entries")
    return arr


def summarize_moments(mean: float, variance: float, count: int, minimum: float, maximum: float) -> TestSummary:
    """Build a :class:`TestSummary` from already-known moments."""
    if count < 2:
        raise TooFewSamples(f"need at least 2 values, got {count}")
    if variance < 0:
        raise DomainError(f"variance must be non-negative, got {variance}")
    se = math.sqrt(variance / count)
    return TestSummary(
        mean=mean,
        variance=variance,
        std_error=se,
        min=minimum,
        max=maximum,
        count=int(count),
        cl95=t_quantile(0.975, count - 1) * se,
    )


def summarize(values: Sequence[float]) -> TestSummary:
    """Mean, unbiased variance, standard error, range and 95 % half-width."""
    x = _values(values)
    if x.size < 2:
        raise TooFewSamples(f"need at least 2 values, got {x.size}")
    lo, hi = float(x.min()), float(x.max())
    mean = min(max(float(x.mean()), lo), hi)
    return summarize_moments(mean, float(x.var(ddof=1)), x.size, lo, hi)


def _pooled_variance(groups: Sequence[np.ndarray]) -> tuple[int, float]:
    n = sum(g.size for g in groups)
    dof = n - len(groups)
    ss = sum(float(((g - g.mean()) ** 2).sum()) for g in groups)
    return n, ss / dof


def information_quantity(
    values: Sequence[float] | None = None,
    pooled: Sequence[Sequence[float]] | None = None,
) -> PrecisionResult:
    """Information quantity ``n / S²``.

    Pass either one sample as ``values`` or several groups as ``pooled``; in
    the pooled case ``n`` is the total count and ``S²`` the pooled
    within-group variance.
    """
    if (values is None) == (pooled is None):
        raise ValueError("pass exactly one of values or pooled")
    if pooled is not None:
        groups = [_values(g, "group") for g in pooled]
        if not groups:
            raise TooFewSamples("no groups given")
        if any(g.size < 2 for g in groups):
            raise TooFewSamples("every group needs at least 2 values")
        n, s2 = _pooled_variance(groups)
    else:
        x = _values(values)
        if x.size < 2:
            raise TooFewSamples(f"need at least 2 values, got {x.size}")
        n, s2 = x.size, float(x.var(ddof=1))
    if s2 == 0:
        raise ZeroVariance("information quantity is undefined for zero variance")
    return PrecisionResult(iq=n / s2, n=n, s2=s2)


def estimation_number(iq_ref: float, iq_method: float) -> int:
    """Tests a method needs to match the reference information: ``ceil(iq_ref / iq_method)``."""
    if not (iq_ref > 0 and iq_method > 0 and math.isfinite(iq_ref) and math.isfinite(iq_method)):
        raise DomainError(f"information quantities must be positive, got {iq_ref}, {iq_method}")
    ratio = iq_ref / iq_method
    n = math.ceil(ratio)
    if n > 1 and ratio - (n - 1) <= EN_INTEGER_TOL * ratio:
        n -= 1
    return max(n, 1)


def anova_oneway(groups: Sequence[Sequence[float]], alpha: float = 0.05) -> AnovaResult:
    """One-way ANOVA over groups of possibly different sizes."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    arrays = [_values(g, "group") for g in groups]
    if len(arrays) < 2:
        raise TooFewGroups(f"need at least 2 groups, got {len(arrays)}")
    if any(g.size < 2 for g in arrays):
        raise TooFewSamples("every group needs at least 2 values")
    everything = np.concatenate(arrays)
    grand = float(everything.mean())
    ss_total = float(((everything - grand) ** 2).sum())
    ss_between = float(sum(g.size * (g.mean() - grand) ** 2 for g in arrays))
    ss_within = float(sum(((g - g.mean()) ** 2).sum() for g in arrays))
    df_between = len(arrays) - 1
    df_within = everything.size - len(arrays)

    between = ss_between / df_between
    within = ss_within / df_within
    if within > 0:
        f_value = between / within
    else:
        f_value = math.inf if between > 0 else 0.0
    crit = f_critical(alpha, df_between, df_within)
    return AnovaResult(
        ss_total=ss_total,
        ss_between=ss_between,
        ss_within=ss_within,
        df_between=df_between,
        df_within=df_within,
        f_value=f_value,
        f_critical=crit,
        alpha=alpha,
        reject_h0=f_value > crit,
        p_value=f_sf(f_value, df_between, df_within),
    )


def linear_regression(points, model: Model = "with_intercept") -> RegressionResult:
    """Least-squares fit of ``y`` on ``x`` for ``(x, y)`` pairs.

    R² is centered with an intercept and uncentered through the origin;
    RSE divides the residual sum of squares by ``n - 2`` or ``n - 1``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be a sequence of (x, y) pairs")
    if not np.all(np.isfinite(pts)):
        raise DomainError("points contain non-finite entries")
    x, y = pts[:, 0], pts[:, 1]
    n = x.size
    if model == "with_intercept":
        if n < 3:
            raise TooFewSamples(f"need at least 3 points, got {n}")
        xm, ym = x.mean(), y.mean()
        sxx = float(((x - xm) ** 2).sum())
        if sxx == 0:
            raise DegenerateX("all x values are identical")
        beta1 = float(((x - xm) * (y - ym)).sum()) / sxx
        beta0 = float(ym - beta1 * xm)
        resid = y - (beta0 + beta1 * x)
        ss_tot = float(((y - ym) ** 2).sum())
        params, kind = 2, "centered"
    elif model == "through_origin":
        if n < 2:
            raise TooFewSamples(f"need at least 2 points, got {n}")
        sxx = float((x * x).sum())
        if sxx == 0:
            raise DegenerateX("all x values are zero")
        beta0 = 0.0
        beta1 = float((x * y).sum()) / sxx
        resid = y - beta1 * x
        ss_tot = float((y * y).sum())
        params, kind = 1, "uncentered"
    else:
        raise ValueError(f"unknown model {model!r}")
    ss_res = float((resid**2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RegressionResult(
        model=model,
        beta0=beta0,
        beta1=beta1,
        r2=min(max(r2, 0.0), 1.0),
        rse=math.sqrt(ss_res / (n - params)),
        n=n,
        r2_kind=kind,
    )


def error_measures(ref_mean: float, alt_mean: float) -> tuple[float, float]:
    """Absolute and relative error of a method mean against the reference mean."""
    if ref_mean == 0:
        raise DomainError("relative error needs a non-zero reference mean")
    eps_abs = abs(ref_mean - alt_mean)
    return eps_abs, eps_abs / abs(ref_mean)


def ci_from_moments(
    mean1: float, var1: float, n1: int, mean2: float, var2: float, n2: int, alpha: float = 0.05
) -> CiResult:
    """Pooled two-sample t interval for ``mean1 - mean2``."""
    if n1 < 2 or n2 < 2:
        raise TooFewSamples("each sample needs at least 2 values")
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    dof = n1 + n2 - 2
    sp = math.sqrt(((n1 - 1) * var1 + (n2 - 1) * var2) / dof)
    half = t_quantile(1.0 - alpha / 2.0, dof) * sp * math.sqrt(1.0 / n1 + 1.0 / n2)
    diff = mean1 - mean2
    eps_abs, eps_rel = error_measures(mean1, mean2)
    return CiResult(diff_mean=diff, low=diff - half, high=diff + half, eps_abs=eps_abs, eps_rel=eps_rel, alpha=alpha)


def ci_two_sample(ref: Sequence[float], alt: Sequence[float], alpha: float = 0.05) -> CiResult:
    """Confidence interval of the reference-minus-method mean difference."""
    a, b = _values(ref, "ref"), _values(alt, "alt")
    if a.size < 2 or b.size < 2:
        raise TooFewSamples("each sample needs at least 2 values")
    return ci_from_moments(
        float(a.mean()), float(a.var(ddof=1)), a.size, float(b.mean()), float(b.var(ddof=1)), b.size, alpha
    )


def pooled_t_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    x, y = _values(a), _values(b)
    if x.size < 2 or y.size < 2:
        raise TooFewSamples("each sample needs at least 2 values")
    _, sp2 = _pooled_variance([x, y])
    diff = float(x.mean() - y.mean())
    se = math.sqrt(sp2 * (1.0 / x.size + 1.0 / y.size))
    if se == 0:
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return diff / se
