"""Braking-zone segmentation: Increasing Zone (IZ) and Stabilization Zone (SZ).

The IZ is the rise of deceleration while pedal force builds; the SZ is the
flat part where deceleration fluctuates around a constant expected value
until the vehicle stops. Detection runs on a trailing moving average whose
indices are mapped back to the raw trace at the window center.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from skidkit.errors import EmptyInput, NoBrakingEvent, PlateauNotReached, WindowTooLarge
from skidkit.traces import DecelTrace

#: IZ begins where the smoothed trace last sits at or below this fraction of the plateau.
IZ_ONSET_FRAC = 0.05

#: The hold band is widened to this many robust standard deviations of the
#: smoothed plateau when the trace is too noisy for the fixed fractions.
NOISE_BAND_SIGMAS = 5.0


@dataclass(frozen=True)
class Segmentation:
    """Half-open index ranges into the raw trace. ``iz_end == sz_start``."""

    iz_start: int
    iz_end: int
    sz_start: int
    sz_end: int
    plateau_level: float
    auto: bool = True

    def __post_init__(self):
        if self.iz_end != self.sz_start:
            raise ValueError("IZ must end where the SZ starts")
        if not (0 <= self.iz_start <= self.iz_end < self.sz_end):
            raise ValueError(
                f"invalid zone bounds iz=[{self.iz_start},{self.iz_end}) sz=[{self.sz_start},{self.sz_end})"
            )
        if not self.plateau_level > 0:
            raise ValueError(f"plateau level must be positive, got {self.plateau_level}")

    @property
    def iz(self) -> slice:
        return slice(self.iz_start, self.iz_end)

    @property
    def sz(self) -> slice:
        return slice(self.sz_start, self.sz_end)

    def sz_seconds(self, trace: DecelTrace) -> tuple[float, float]:
        """SZ as (first sample time, time just past the last sample)."""
        return trace.t0 + self.sz_start * trace.dt, trace.t0 + self.sz_end * trace.dt


@dataclass(frozen=True)
class SzConfig:
    enter_frac: float = 0.90
    hold_frac: float = 0.80
    stop_frac: float = 0.50
    tail_frac: float = 0.60
    ma_window: int | None = None  # samples; None means a quarter second
    # m/s²; weaker events are not braking tests. 0 makes detection purely scale-free.
    min_plateau: float = 1.0

    def __post_init__(self):
        for name in ("enter_frac", "hold_frac", "stop_frac", "tail_frac"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")
        if not self.enter_frac > self.hold_frac > self.stop_frac:
            raise ValueError("need enter_frac > hold_frac > stop_frac")
        if self.ma_window is not None and self.ma_window < 1:
            raise ValueError(f"ma_window must be >= 1, got {self.ma_window}")

    def window_for(self, sample_rate: float) -> int:
        if self.ma_window is not None:
            return int(self.ma_window)
        return default_ma_window(sample_rate)


def default_ma_window(sample_rate: float) -> int:
    """A quarter second of samples, at least 3."""
    return max(3, round(0.25 * sample_rate))


def moving_average(x, window: int) -> np.ndarray:
    """Trailing moving average; ``y[j]`` is the mean of ``x[j : j + window]``.

    The output has ``len(x) - window + 1`` values and never leaves the range
    of its window (so constant input comes back unchanged, bit for bit).
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise EmptyInput("moving average of an empty series")
    if not 1 <= window <= x.size:
        raise WindowTooLarge(f"window {window} outside [1, {x.size}]")
    if window == 1:
        return x.copy()
    windows = np.lib.stride_tricks.sliding_window_view(x, window)
    return np.clip(windows.mean(axis=1), windows.min(axis=1), windows.max(axis=1))


def _plateau_estimate(smoothed: np.ndarray, lo: int, hi: int, tail_frac: float) -> float:
    segment = np.sort(smoothed[lo : hi + 1])
    keep = max(1, int(np.ceil(tail_frac * segment.size)))
    return float(np.median(segment[-keep:]))


def _hold_band(smoothed: np.ndarray, level: float, entered: int, stop: int, cfg: SzConfig) -> tuple[float, float]:
    plateau = smoothed[entered : stop + 1]
    sigma = 0.0
    if plateau.size >= 3:
        # residuals about a straight line: ramps and slow drift are not noise
        k = np.arange(plateau.size, dtype=float)
        resid = plateau - np.polyval(np.polyfit(k, plateau, 1), k)
        sigma = 1.4826 * float(np.median(np.abs(resid - np.median(resid))))
    spread = max((1.0 - cfg.hold_frac) * level, NOISE_BAND_SIGMAS * sigma)
    return max(level - spread, cfg.stop_frac * level), level + spread


def detect_zones(d: DecelTrace, cfg: SzConfig = SzConfig()) -> Segmentation:
    """Locate the IZ and SZ of a single braking event.

    The plateau level is the median of the top ``tail_frac`` of smoothed
    values inside the braking event. The SZ starts at the first smoothed
    value reaching ``enter_frac`` of the plateau from which the trace stays
    inside the hold band until its final fall, and ends where the trace last
    sits at or above ``stop_frac`` of the plateau. The hold band is
    ``[hold_frac, 2 - hold_frac]`` times the plateau, widened to
    ``NOISE_BAND_SIGMAS`` robust deviations of the smoothed plateau about a
    fitted line (but never below ``stop_frac``) for noisy traces such as
    differentiated video. See :func:`refine_sz_start` for a less noise
    sensitive start.
    """
    window = cfg.window_for(d.sample_rate)
    smoothed = moving_average(d.samples, window)
    m = smoothed.size
    peak = float(smoothed.max())
    if peak <= 0 or peak < cfg.min_plateau:
        raise NoBrakingEvent(f"peak smoothed deceleration {peak:.3g} m/s² is below {cfg.min_plateau:g}")

    above = np.flatnonzero(smoothed >= 0.5 * peak)
    level = _plateau_estimate(smoothed, above[0], above[-1], cfg.tail_frac)
    above = np.flatnonzero(smoothed >= cfg.stop_frac * level)
    level = _plateau_estimate(smoothed, above[0], above[-1], cfg.tail_frac)
    if level <= 0 or level < cfg.min_plateau:
        raise NoBrakingEvent(f"plateau {level:.3g} m/s² is below {cfg.min_plateau:g}")
    starts_high = smoothed[0] >= cfg.enter_frac * level
    if not starts_high and peak <= 2.0 * smoothed[0]:
        raise NoBrakingEvent("deceleration never rises well above its initial level")

    stop = int(np.flatnonzero(smoothed >= cfg.stop_frac * level)[-1])
    entered = int(np.flatnonzero(smoothed[: stop + 1] >= cfg.enter_frac * level)[0])
    low, high = _hold_band(smoothed, level, entered, stop, cfg)
    # the final descent starts after the last visit to the plateau level; wobbles
    # on that edge may cross the hold band and do not count against the plateau
    fall = int(np.flatnonzero(smoothed[: stop + 1] >= level)[-1])
    # start j qualifies if smoothed[j..fall] stays inside the hold band around the level
    head = smoothed[: fall + 1]
    suffix_min = np.minimum.accumulate(head[::-1])[::-1]
    suffix_max = np.maximum.accumulate(head[::-1])[::-1]
    ok = (head >= cfg.enter_frac * level) & (suffix_min >= low) & (suffix_max <= high)
    if not ok.any():
        raise PlateauNotReached("deceleration never settles on a plateau")
    sz_start = int(np.argmax(ok))

    quiet = np.flatnonzero(smoothed[:sz_start] <= IZ_ONSET_FRAC * level)
    iz_start = int(quiet[-1]) + 1 if quiet.size else 0

    offset = (window - 1) // 2

    def to_raw_start(j: int) -> int:
        return 0 if j == 0 else j + offset

    raw_sz_end = len(d) if stop == m - 1 else stop + offset + 1
    raw_sz_start = to_raw_start(sz_start)
    raw_iz_start = min(to_raw_start(iz_start), raw_sz_start)
    if raw_sz_start >= raw_sz_end:
        raise PlateauNotReached("stabilization zone is empty")
    return Segmentation(
        iz_start=raw_iz_start,
        iz_end=raw_sz_start,
        sz_start=raw_sz_start,
        sz_end=raw_sz_end,
        plateau_level=level,
        auto=True,
    )


def _knee(y: np.ndarray, last: int) -> int:
    """Index where a least-squares baseline-ramp-plateau fit reaches its plateau.

    The ramp must end by index ``last``; the rest of ``y`` pins the plateau.
    """
    k = np.arange(y.size, dtype=float)
    a, b = np.triu_indices(min(last, y.size - 1) + 1, 1)  # ramp from a to b
    r = np.clip((k[None, :] - a[:, None]) / (b - a)[:, None], 0.0, 1.0)
    q = 1.0 - r
    s11, s12, s22 = (q * q).sum(1), (q * r).sum(1), (r * r).sum(1)
    t1, t2 = q @ y, r @ y
    det = s11 * s22 - s12 * s12
    with np.errstate(divide="ignore", invalid="ignore"):
        explained = np.where(det > 0, (s22 * t1 * t1 - 2 * s12 * t1 * t2 + s11 * t2 * t2) / det, -np.inf)
    return int(b[np.argmax(explained)])


def refine_sz_start(d: DecelTrace, seg: Segmentation, ma_window: int | None = None) -> Segmentation:
    """Move the SZ start to the knee of a baseline-ramp-plateau fit on raw samples.

    The threshold start sits where the moving average is already rounding
    into the plateau, so noise shifts it by several samples; the fit uses
    every sample of the rise and the plateau instead. Samples from one
    window before the IZ to one window before the SZ end take part, and the
    knee is searched up to two windows past the threshold start. Manual
    segmentations and plateaus reached at the first sample are returned as is.
    """
    if seg.sz_start == 0 or not seg.auto:
        return seg
    window = ma_window or default_ma_window(d.sample_rate)
    lo = max(0, seg.iz_start - window)
    hi = max(seg.sz_start + 1, seg.sz_end - window)
    last = min(seg.sz_start + 2 * window, hi - 1)
    knee = _knee(d.samples[lo:hi], last - lo) + lo
    knee = min(max(knee, 1), seg.sz_end - 1)
    return replace(seg, iz_start=min(seg.iz_start, knee), iz_end=knee, sz_start=knee)


def manual_zones(d: DecelTrace, sz_start_s: float, sz_end_s: float) -> Segmentation:
    """Segmentation from a user-chosen SZ given in seconds.

    The IZ runs back from the SZ start to the last sample at or below 5 % of
    the SZ median.
    """
    if not sz_start_s < sz_end_s:
        raise ValueError("SZ start must precede SZ end")
    start = d.index_at(sz_start_s)
    end = d.index_at(sz_end_s)
    if start >= end:
        raise PlateauNotReached(f"SZ [{sz_start_s:g}, {sz_end_s:g}) s contains no samples")
    level = float(np.median(d.samples[start:end]))
    if not level > 0:
        raise NoBrakingEvent(f"median deceleration in the chosen SZ is {level:.3g} m/s²")
    quiet = np.flatnonzero(d.samples[:start] <= IZ_ONSET_FRAC * level)
    iz_start = int(quiet[-1]) + 1 if quiet.size else 0
    return Segmentation(iz_start=iz_start, iz_end=start, sz_start=start, sz_end=end, plateau_level=level, auto=False)


def sz_expected_value(d: DecelTrace, seg: Segmentation, ma_window: int) -> float:
    """Mean of the moving average over the SZ: the test's expected deceleration."""
    return float(moving_average(d.samples[seg.sz], ma_window).mean())
