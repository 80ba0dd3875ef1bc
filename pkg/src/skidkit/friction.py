"""Friction coefficient and speed-at-SZ estimates.

With a constant deceleration ``a`` over the Stabilization Zone, uniform
motion and energy conservation give ``mu = a / g`` and a speed at SZ onset
of ``sqrt(2 mu g d)`` for an SZ sliding distance ``d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from skidkit.errors import DomainError
from skidkit.units import MS_TO_KMH, STANDARD_GRAVITY


@dataclass(frozen=True)
class FrictionEstimate:
    mu: float
    a_sz: float
    g: float
    ci_mu: tuple[float, float] | None = None


@dataclass(frozen=True)
class SpeedEstimate:
    v_sz: float  # m/s
    d_sz: float  # m
    mu: float

    @property
    def v_sz_kmh(self) -> float:
        return self.v_sz * MS_TO_KMH


def _check_g(g: float) -> None:
    if not (g > 0 and math.isfinite(g)):
        raise DomainError(f"g must be positive, got {g}")


def friction_coefficient(
    a_sz: float,
    g: float = STANDARD_GRAVITY,
    ci: tuple[float, float] | None = None,
) -> FrictionEstimate:
    """``mu = a_sz / g``; an optional deceleration interval is scaled the same way."""
    _check_g(g)
    if not (a_sz >= 0 and math.isfinite(a_sz)):
        raise DomainError(f"SZ deceleration must be non-negative, got {a_sz}")
    ci_mu = None
    if ci is not None:
        low, high = ci
        if low > high:
            raise DomainError(f"interval bounds out of order: {ci}")
        ci_mu = (low / g, high / g)
    return FrictionEstimate(mu=a_sz / g, a_sz=a_sz, g=g, ci_mu=ci_mu)


def speed_at_sz(mu: float, d_sz: float, g: float = STANDARD_GRAVITY) -> SpeedEstimate:
    _check_g(g)
    if not (mu >= 0 and d_sz >= 0):
        raise DomainError(f"mu and d_sz must be non-negative, got mu={mu}, d_sz={d_sz}")
    return SpeedEstimate(v_sz=math.sqrt(2.0 * mu * g * d_sz), d_sz=d_sz, mu=mu)


def speed_propagated_error(
    mu: float, d_sz: float, dmu: float, dd: float, g: float = STANDARD_GRAVITY
) -> float:
    """First-order uncertainty of ``sqrt(2 mu g d)``: ``v/2 * (dmu/mu + dd/d)``."""
    _check_g(g)
    if min(mu, d_sz, dmu, dd) < 0:
        raise DomainError("inputs to error propagation must be non-negative")
    if dmu == 0 and dd == 0:
        return 0.0
    if mu == 0 or d_sz == 0:
        raise DomainError("relative uncertainty undefined for zero mu or distance")
    v = math.sqrt(2.0 * mu * g * d_sz)
    return 0.5 * v * (dmu / mu + dd / d_sz)
