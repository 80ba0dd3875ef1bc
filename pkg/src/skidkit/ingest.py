"""Readers and writers for the three device CSV dialects.

All dialects share the same framing: ``#``-prefixed comment lines (``# key:
value`` comments are directives or metadata), one header line, comma
separated rows, ``.`` as the decimal point.

``accel``   header ``t_s,decel[,speed_kmh,dist_m]``; ``# unit: g|ms2``, ``# rate: <Hz>``
``phone``   header ``t_s,ax_ms2,ay_ms2,az_ms2``; ``# rate: <Hz>``
``tracker`` header ``frame,x`` (or ``t_s,x``); ``# fps``, ``# unit: m|px``, ``# scale_m_per_px``
"""

from __future__ import annotations

import io
import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from skidkit.errors import (
    BiasWindowTooLong,
    FrameGap,
    MalformedHeader,
    MalformedRow,
    MissingScale,
    NonFiniteValue,
    NonMonotonicTime,
)
from skidkit.traces import DecelTrace, DeviceKind, PositionTrace
from skidkit.units import MS_TO_KMH, STANDARD_GRAVITY

DEFAULT_BIAS_WINDOW_S = 1.5
DEFAULT_FPS = 30.0

Axis = Literal["x", "y", "z"]
Sign = Literal["auto", "keep", "flip"]

_TIME_COLUMNS = ("t_s", "t")
_ACCEL_COLUMNS = {"decel": None, "decel_ms2": "ms2", "decel_g": "g"}
_PHONE_COLUMNS = {"x": "ax_ms2", "y": "ay_ms2", "z": "az_ms2"}
_DIRECTIVES = {"unit", "rate", "fps", "scale_m_per_px", "schema"}


@dataclass
class _Table:
    header: list[str]
    header_line: int
    rows: list[list[float]] = field(default_factory=list)
    row_lines: list[int] = field(default_factory=list)
    directives: dict[str, str] = field(default_factory=dict)
    directive_lines: dict[str, int] = field(default_factory=dict)
    meta: dict[str, str] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[self.header.index(name)] for row in self.rows], dtype=float)


def _decode(text: str | bytes) -> str:
    if isinstance(text, (bytes, bytearray)):
        return bytes(text).decode("utf-8-sig")
    return text.removeprefix("﻿")


def _read_table(text: str | bytes) -> _Table:
    table: _Table | None = None
    directives: dict[str, str] = {}
    directive_lines: dict[str, int] = {}
    meta: dict[str, str] = {}
    for lineno, raw in enumerate(io.StringIO(_decode(text)), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                key = key.strip().lower()
                value = value.strip()
                if key in _DIRECTIVES:
                    directives[key] = value
                    directive_lines[key] = lineno
                elif key:
                    meta[key] = value
            continue
        cells = [c.strip() for c in line.split(",")]
        if table is None:
            table = _Table(header=[c.lower() for c in cells], header_line=lineno)
            continue
        if len(cells) != len(table.header):
            raise MalformedRow(
                f"expected {len(table.header)} columns, found {len(cells)}", line=lineno
            )
        values = []
        for cell in cells:
            try:
                v = float(cell)
            except ValueError:
                raise MalformedRow(f"not a number: {cell!r}", line=lineno) from None
            if not math.isfinite(v):
                raise NonFiniteValue(f"non-finite value {cell!r}", line=lineno)
            values.append(v)
        table.rows.append(values)
        table.row_lines.append(lineno)
    if table is None:
        raise MalformedHeader("no header line found")
    table.directives = directives
    table.directive_lines = directive_lines
    table.meta = meta
    if not table.rows:
        raise MalformedHeader("no data rows after header", line=table.header_line)
    return table


def _directive_float(table: _Table, key: str) -> float | None:
    if key not in table.directives:
        return None
    value = table.directives[key]
    try:
        out = float(value)
    except ValueError:
        raise MalformedHeader(f"{key} must be a number, got {value!r}", line=table.directive_lines[key]) from None
    if not (math.isfinite(out) and out > 0):
        raise MalformedHeader(f"{key} must be positive, got {value!r}", line=table.directive_lines[key])
    return out


def _find_column(table: _Table, candidates: Iterable[str], what: str) -> str:
    for name in candidates:
        if name in table.header:
            return name
    raise MalformedHeader(
        f"missing {what} column (one of {', '.join(candidates)}); header is {','.join(table.header)}",
        line=table.header_line,
    )


def _checked_times(table: _Table, column: str) -> np.ndarray:
    t = table.column(column)
    steps = np.diff(t)
    if np.any(steps <= 0):
        bad = int(np.flatnonzero(steps <= 0)[0]) + 1
        raise NonMonotonicTime(
            f"time {t[bad]:g} s does not follow {t[bad - 1]:g} s", line=table.row_lines[bad]
        )
    return t


def _sample_rate(table: _Table, t: np.ndarray, nominal: float) -> float:
    declared = _directive_float(table, "rate")
    if declared is not None:
        return declared
    if t.size < 2:
        return nominal
    return float(f"{(t.size - 1) / (t[-1] - t[0]):.6g}")


def parse_accel_csv(text: str | bytes, g: float = STANDARD_GRAVITY) -> DecelTrace:
    """Parse a reference-accelerometer log into a :class:`DecelTrace`.

    Values are converted from g to m/s² when the log declares ``# unit: g``
    or uses a ``decel_g`` column. The optional ``speed_kmh`` and ``dist_m``
    columns become the trace's ``speed`` (m/s) and ``distance`` channels.
    """
    table = _read_table(text)
    t_col = _find_column(table, _TIME_COLUMNS, "time")
    a_col = _find_column(table, _ACCEL_COLUMNS, "deceleration")
    t = _checked_times(table, t_col)

    unit = _ACCEL_COLUMNS[a_col] or table.directives.get("unit", "ms2").lower()
    if unit not in ("g", "ms2"):
        raise MalformedHeader(f"unit must be g or ms2, got {unit!r}", line=table.directive_lines.get("unit"))
    samples = table.column(a_col)
    if unit == "g":
        samples = samples * g

    speed = table.column("speed_kmh") / MS_TO_KMH if "speed_kmh" in table.header else None
    distance = table.column("dist_m") if "dist_m" in table.header else None
    device = DeviceKind.ReferenceAccelerometer
    return DecelTrace(
        device=device,
        sample_rate=_sample_rate(table, t, device.nominal_rate),
        samples=samples,
        t0=float(t[0]),
        meta=table.meta,
        speed=speed,
        distance=distance,
    )


def parse_phone_csv(
    text: str | bytes,
    axis: Axis = "x",
    bias_window: float = DEFAULT_BIAS_WINDOW_S,
    sign: Sign = "auto",
) -> DecelTrace:
    """Parse a smartphone accelerometer log, keeping one axis.

    The sensor bias is the mean of the chosen axis over the first
    ``bias_window`` seconds (the constant-speed hold before braking) and is
    subtracted. With ``sign="auto"`` the series is flipped when its largest
    excursion is negative, so braking always comes out positive.
    """
    if axis not in _PHONE_COLUMNS:
        raise ValueError(f"axis must be x, y or z, got {axis!r}")
    if not (bias_window >= 0 and math.isfinite(bias_window)):
        raise BiasWindowTooLong(f"bias window must be a non-negative duration, got {bias_window}")
    table = _read_table(text)
    t_col = _find_column(table, _TIME_COLUMNS, "time")
    for col in _PHONE_COLUMNS.values():
        _find_column(table, (col,), f"{col}")
    t = _checked_times(table, t_col)
    raw = table.column(_PHONE_COLUMNS[axis])

    if bias_window > 0:
        if t[0] + bias_window >= t[-1]:
            raise BiasWindowTooLong(
                f"bias window {bias_window:g} s is not shorter than the trace ({t[-1] - t[0]:g} s)"
            )
        idle = t < t[0] + bias_window
        bias = float(raw[idle].mean())
        samples = raw - bias
    else:
        bias = 0.0
        samples = raw

    if sign == "flip" or (sign == "auto" and -samples.min() > samples.max()):
        samples = -samples
        flipped = True
    elif sign in ("auto", "keep"):
        flipped = False
    else:
        raise ValueError(f"sign must be auto, keep or flip, got {sign!r}")

    meta = dict(table.meta)
    meta.update(axis=axis, bias_ms2=f"{bias:.9g}", sign_flipped=str(flipped).lower())
    device = DeviceKind.Smartphone
    return DecelTrace(
        device=device,
        sample_rate=_sample_rate(table, t, device.nominal_rate),
        samples=samples,
        t0=float(t[0]),
        meta=meta,
    )


def parse_tracker_csv(text: str | bytes) -> PositionTrace:
    """Parse a video-tracking export of longitudinal positions.

    Pixel positions are scaled to meters with ``# scale_m_per_px``. Frames
    must be consecutive. When the vehicle moves towards negative x the
    positions are mirrored so that they increase along the travel direction.
    """
    table = _read_table(text)
    fps = _directive_float(table, "fps") or DEFAULT_FPS
    x_col = _find_column(table, ("x",), "position")
    if "frame" in table.header:
        frames = table.column("frame")
        if np.any(frames != np.round(frames)):
            bad = int(np.flatnonzero(frames != np.round(frames))[0])
            raise MalformedRow(f"frame index {frames[bad]:g} is not an integer", line=table.row_lines[bad])
    else:
        t_col = _find_column(table, ("frame",) + _TIME_COLUMNS, "frame or time")
        frames = np.round(_checked_times(table, t_col) * fps)
    steps = np.diff(frames)
    if np.any(steps <= 0):
        bad = int(np.flatnonzero(steps <= 0)[0]) + 1
        raise NonMonotonicTime(f"frame {frames[bad]:g} does not follow {frames[bad - 1]:g}", line=table.row_lines[bad])
    if np.any(steps != 1):
        bad = int(np.flatnonzero(steps != 1)[0]) + 1
        raise FrameGap(f"frames {frames[bad - 1]:g} to {frames[bad]:g} are not consecutive", line=table.row_lines[bad])

    unit = table.directives.get("unit", "m").lower()
    scale = _directive_float(table, "scale_m_per_px")
    if unit == "px":
        if scale is None:
            raise MissingScale("pixel positions need a '# scale_m_per_px:' comment", line=table.header_line)
    elif unit == "m":
        scale = 1.0
    else:
        raise MalformedHeader(f"unit must be m or px, got {unit!r}", line=table.directive_lines.get("unit"))

    positions = table.column(x_col) * scale
    meta = dict(table.meta)
    meta["unit"] = unit
    if positions[-1] < positions[0]:
        positions = -positions
        meta["mirrored"] = "true"
    return PositionTrace(
        frame_rate=fps,
        positions=positions,
        scale=scale,
        t0=float(frames[0]) / fps,
        meta=meta,
    )


def sniff_format(text: str | bytes) -> str:
    """Guess the dialect of a log from its header line."""
    for raw in io.StringIO(_decode(text)):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        header = {c.strip().lower() for c in line.split(",")}
        if header & set(_ACCEL_COLUMNS):
            return "accel"
        if set(_PHONE_COLUMNS.values()) <= header:
            return "phone"
        if "x" in header:
            return "tracker"
        raise MalformedHeader(f"unrecognised header {line!r}")
    raise MalformedHeader("no header line found")


def _num(v: float) -> str:
    return f"{v:.9g}"


def _comments(meta, directives: dict[str, str]) -> list[str]:
    lines = [f"# {k}: {v}" for k, v in directives.items()]
    lines += [f"# {k}: {v}" for k, v in sorted(meta.items()) if k not in directives]
    return lines


def format_accel_csv(trace: DecelTrace) -> str:
    """Serialize a trace in the ``accel`` dialect (m/s², 9 significant digits)."""
    lines = _comments(trace.meta, {"unit": "ms2", "rate": _num(trace.sample_rate)})
    header = ["t_s", "decel"]
    columns = [trace.times, trace.samples]
    if trace.speed is not None:
        header.append("speed_kmh")
        columns.append(trace.speed * MS_TO_KMH)
    if trace.distance is not None:
        header.append("dist_m")
        columns.append(trace.distance)
    lines.append(",".join(header))
    lines += [",".join(_num(v) for v in row) for row in zip(*columns)]
    return "\n".join(lines) + "\n"


def format_phone_csv(
    trace: DecelTrace,
    axis: Axis = "x",
    other_axes: tuple[np.ndarray, np.ndarray] | None = None,
) -> str:
    """Serialize a trace in the ``phone`` dialect with the samples on ``axis``.

    The two remaining axes are written from ``other_axes`` (in x, y, z order)
    or as zeros.
    """
    if axis not in _PHONE_COLUMNS:
        raise ValueError(f"axis must be x, y or z, got {axis!r}")
    n = len(trace)
    rest = list(other_axes) if other_axes is not None else [np.zeros(n), np.zeros(n)]
    axes = {}
    for name in "xyz":
        axes[name] = trace.samples if name == axis else np.asarray(rest.pop(0), dtype=float)
    skip = {"axis", "bias_ms2", "sign_flipped"}
    meta = {k: v for k, v in trace.meta.items() if k not in skip}
    lines = _comments(meta, {"rate": _num(trace.sample_rate)})
    lines.append("t_s,ax_ms2,ay_ms2,az_ms2")
    lines += [
        ",".join(_num(v) for v in row) for row in zip(trace.times, axes["x"], axes["y"], axes["z"])
    ]
    return "\n".join(lines) + "\n"


def format_tracker_csv(trace: PositionTrace, pixels: np.ndarray | None = None) -> str:
    """Serialize positions in the ``tracker`` dialect.

    With ``pixels`` given, those raw pixel coordinates are written together
    with the trace's scale; otherwise positions are written in meters.
    """
    first = round(trace.t0 * trace.frame_rate)
    skip = {"unit", "mirrored"}
    meta = {k: v for k, v in trace.meta.items() if k not in skip}
    if pixels is None:
        directives = {"fps": _num(trace.frame_rate), "unit": "m"}
        values = trace.positions
    else:
        directives = {"fps": _num(trace.frame_rate), "unit": "px", "scale_m_per_px": _num(trace.scale)}
        values = np.asarray(pixels, dtype=float)
        if values.shape != trace.positions.shape:
            raise ValueError("pixels must match the number of positions")
    lines = _comments(meta, directives)
    lines.append("frame,x")
    lines += [f"{first + i},{_num(v)}" for i, v in enumerate(values)]
    return "\n".join(lines) + "\n"
