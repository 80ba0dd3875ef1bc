"""Position-to-deceleration differentiation and speed/distance integration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from skidkit.errors import DegenerateFit, WindowTooLarge
from skidkit.traces import DecelTrace, DeviceKind, PositionTrace

Method = Literal["quadratic_fit", "central_difference"]


@dataclass(frozen=True)
class DiffConfig:
    """Differentiation settings: samples per local fit and the scheme.

    ``central_difference`` uses a stencil spanning the window
    (``x[i-h] - 2 x[i] + x[i+h]`` with ``h = window // 2``), so both
    methods drop the same edge samples and stay time-aligned.
    """

    window: int = 9
    method: Method = "quadratic_fit"

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 5 or self.window % 2 == 0:
            raise ValueError(f"window must be an odd integer >= 5, got {self.window}")
        if self.method not in ("quadratic_fit", "central_difference"):
            raise ValueError(f"unknown method {self.method!r}")


def _second_derivative_weights(window: int, dt: float) -> np.ndarray:
    """Least-squares weights mapping a window of positions to 2·c2."""
    # symmetric window: c2 decouples from c0/c1 after centering k^2
    half = window // 2
    k2 = np.arange(-half, half + 1, dtype=float) ** 2
    centered = k2 - k2.mean()
    denom = float(centered @ centered) * dt * dt
    if not (np.isfinite(denom) and denom > 0):
        raise DegenerateFit("singular normal equations for the local quadratic fit")
    return 2.0 * centered / denom


def accel_from_positions(p: PositionTrace, cfg: DiffConfig = DiffConfig()) -> DecelTrace:
    """Differentiate video positions twice into a deceleration trace.

    The first and last ``window // 2`` frames have no centered window and
    are dropped; ``t0`` moves forward by the same amount.
    """
    n = len(p)
    if cfg.window > n:
        raise WindowTooLarge(f"window {cfg.window} exceeds trace length {n}")
    half = cfg.window // 2
    dt = 1.0 / p.frame_rate
    x = p.positions
    if cfg.method == "quadratic_fit":
        weights = _second_derivative_weights(cfg.window, dt)
        windows = np.lib.stride_tricks.sliding_window_view(x, cfg.window)
        accel = windows @ weights
    else:
        h = half
        accel = (x[2 * h :] - 2.0 * x[h:-h] + x[: -2 * h]) / (h * dt) ** 2
    meta = dict(p.meta)
    meta["diff_method"] = cfg.method
    meta["diff_window"] = str(cfg.window)
    return DecelTrace(
        device=DeviceKind.VideoTracker,
        sample_rate=p.frame_rate,
        samples=-accel,
        t0=p.t0 + half * dt,
        meta=meta,
    )


def speed_distance_from_trace(d: DecelTrace, v0: float) -> tuple[np.ndarray, np.ndarray]:
    """Integrate deceleration into speed (m/s) and travelled distance (m).

    Trapezoidal rule from ``v0`` at the first sample. Once the speed reaches
    zero the vehicle is stopped: speed stays 0 and distance is frozen. The
    stopping interval is cut at the linearly interpolated zero crossing.
    """
    if not v0 >= 0:
        raise ValueError(f"v0 must be non-negative, got {v0}")
    a = d.samples
    dt = d.dt
    n = a.size
    v = np.zeros(n)
    s = np.zeros(n)
    v[0] = v0
    stopped = v0 == 0
    for i in range(1, n):
        if stopped:
            s[i] = s[i - 1]
            continue
        v_next = v[i - 1] - 0.5 * (a[i - 1] + a[i]) * dt
        if v_next > 0:
            v[i] = v_next
            s[i] = s[i - 1] + 0.5 * (v[i - 1] + v_next) * dt
        else:
            frac = v[i - 1] / (v[i - 1] - v_next)
            s[i] = s[i - 1] + 0.5 * v[i - 1] * frac * dt
            stopped = True
    return v, s


def positions_from_trace(d: DecelTrace, v0: float) -> PositionTrace:
    """Positions implied by a deceleration trace; inverse of :func:`accel_from_positions`."""
    _, s = speed_distance_from_trace(d, v0)
    return PositionTrace(frame_rate=d.sample_rate, positions=s, t0=d.t0, meta=dict(d.meta))


def _ramp_double_integral(t: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """∫∫ clip((t - a) / (b - a), 0, 1): distance lost to a ramp from ``a`` to ``b``."""
    width = (b - a)[:, None]
    u = np.clip(t[None, :] - a[:, None], 0.0, None)
    after = t[None, :] - b[:, None]
    return np.where(after < 0, u**3 / (6.0 * width), width**2 / 6.0 + width * after / 2.0 + after**2 / 2.0)


def knee_from_positions(p: PositionTrace, t_lo: float, t_hi: float, t_end: float) -> float:
    """Time at which braking deceleration stops rising, fitted on positions.

    The model is constant speed, then deceleration rising linearly from 0 at
    ``a`` to a constant level at ``b``, for ``t_lo <= a < b <= t_hi`` on a
    quarter-frame grid. Frames from half a second before ``t_lo`` up to
    ``t_end`` (which must precede the stop) enter the least-squares fit.
    Position noise is white, so this is far steadier than thresholding the
    twice-differentiated trace.
    """
    t = p.times
    keep = (t >= t_lo - 0.5) & (t <= t_end)
    t, x = t[keep], p.positions[keep]
    step = 0.25 / p.frame_rate
    grid = np.arange(t_lo, t_hi + 0.5 * step, step)
    i, j = np.triu_indices(grid.size, 1)
    if t.size < 4 or i.size == 0:
        raise DegenerateFit("too few frames to fit the braking ramp")
    # project out the constant-speed part, then score each ramp in closed form
    basis, _ = np.linalg.qr(np.column_stack([np.ones_like(t), t - t.mean()]))
    x_r = x - basis @ (basis.T @ x)
    g = _ramp_double_integral(t, grid[i], grid[j])
    g_r = g - (g @ basis) @ basis.T
    norm = np.einsum("ij,ij->i", g_r, g_r)
    with np.errstate(divide="ignore", invalid="ignore"):
        explained = np.where(norm > 0, (g_r @ x_r) ** 2 / norm, -np.inf)
    return float(grid[j[np.argmax(explained)]])
