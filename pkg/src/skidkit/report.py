"""Experiment reports: CSV tables, ``report.json`` and SVG plots.

Tables carry a ``# schema: skidkit/1`` first line and format every real
number with four decimals and a ``.`` decimal point regardless of locale.
``report.json`` keeps full precision and round-trips to an equal
:class:`ExperimentReport`.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import types
import typing
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from skidkit.errors import ReportIOError
from skidkit.friction import FrictionEstimate, SpeedEstimate
from skidkit.inference import (
    AnovaResult,
    CiResult,
    PrecisionResult,
    RegressionResult,
    TestSummary,
)
from skidkit.segmentation import Segmentation
from skidkit.traces import DecelTrace
from skidkit.units import MS_TO_KMH

SCHEMA = "skidkit/1"


@dataclass(frozen=True)
class TestRecord:
    """Per-test outcome: SZ statistics, expected deceleration and SZ distance."""

    __test__ = False

    test_id: str
    device: str
    source: str
    summary: TestSummary
    a_sz: float
    sz_start_s: float
    sz_end_s: float
    plateau_level: float
    auto_segmented: bool
    d_sz: float | None = None
    d_sz_method: str | None = None


@dataclass(frozen=True)
class ComparisonResult:
    """Reference device against one other method, over per-test SZ values."""

    reference: str
    method: str
    anova: AnovaResult
    ci: CiResult
    precision_ref: PrecisionResult
    precision_method: PrecisionResult
    regressions: tuple[RegressionResult, ...] = ()
    paired_tests: tuple[str, ...] = ()


@dataclass(frozen=True)
class SpeedRecord:
    test_id: str
    device: str
    estimate: SpeedEstimate
    d_sz_method: str


@dataclass(frozen=True)
class ExperimentReport:
    experiment_id: str
    reference: str
    g: float
    alpha: float
    per_test: tuple[TestRecord, ...] = ()
    per_method: dict[str, TestSummary] = field(default_factory=dict)
    comparisons: tuple[ComparisonResult, ...] = ()
    friction: dict[str, FrictionEstimate] = field(default_factory=dict)
    speeds: tuple[SpeedRecord, ...] = ()
    notes: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for comp in self.comparisons:
            for device in (comp.reference, comp.method):
                if device not in self.per_method:
                    raise ValueError(f"comparison refers to {device!r}, which has no per-method summary")

    def tests_for(self, device: str) -> list[TestRecord]:
        return [rec for rec in self.per_test if rec.device == device]

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, **dataclasses.asdict(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping) -> ExperimentReport:
        data = dict(data)
        schema = data.pop("schema", SCHEMA)
        if schema != SCHEMA:
            raise ValueError(f"unsupported report schema {schema!r}")
        return _decode(cls, data)

    @classmethod
    def from_json(cls, text: str) -> ExperimentReport:
        return cls.from_dict(json.loads(text))


def _decode(tp, value):
    """Rebuild a value of annotated type ``tp`` from its ``asdict`` form."""
    if value is None:
        return None
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType):
        options = [a for a in args if a is not type(None)]
        return _decode(options[0], value)
    if dataclasses.is_dataclass(tp):
        hints = typing.get_type_hints(tp)
        kwargs = {f.name: _decode(hints[f.name], value[f.name]) for f in dataclasses.fields(tp) if f.name in value}
        return tp(**kwargs)
    if origin is tuple:
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_decode(args[0], v) for v in value)
        return tuple(_decode(a, v) for a, v in zip(args, value))
    if origin is dict:
        return {str(k): _decode(args[1], v) for k, v in value.items()}
    if tp is float:
        return float(value)
    if tp is int:
        return int(value)
    return value


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.4f}"
    return str(value)


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {SCHEMA}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([_fmt(v) for v in row] for row in rows)
    return buf.getvalue()


def table_texts(r: ExperimentReport) -> dict[str, str]:
    """CSV file name -> contents for every table of a report."""
    per_test = _csv(
        ["experiment", "device", "test_id", "mean", "std_error", "variance", "min", "max", "count", "cl95",
         "a_sz", "sz_start_s", "sz_end_s"],
        [
            [r.experiment_id, rec.device, rec.test_id, s.mean, s.std_error, s.variance, s.min, s.max, s.count,
             s.cl95, rec.a_sz, rec.sz_start_s, rec.sz_end_s]
            for rec in r.per_test
            for s in [rec.summary]
        ],
    )
    per_method = _csv(
        ["device", "mean", "std_dev", "variance", "std_error", "min", "max", "count", "cl95"],
        [
            [dev, s.mean, s.std_dev, s.variance, s.std_error, s.min, s.max, s.count, s.cl95]
            for dev, s in r.per_method.items()
        ],
    )
    precision = _csv(
        ["reference", "method", "iq_reference", "iq_method", "estimation_number"],
        [
            [c.reference, c.method, c.precision_ref.iq, c.precision_method.iq, c.precision_method.estimation_number]
            for c in r.comparisons
        ],
    )
    anova = _csv(
        ["reference", "method", "f_value", "f_critical", "df_between", "df_within", "p_value", "alpha", "reject_h0"],
        [
            [c.reference, c.method, a.f_value, a.f_critical, a.df_between, a.df_within, a.p_value, a.alpha,
             a.reject_h0]
            for c in r.comparisons
            for a in [c.anova]
        ],
    )
    regression = _csv(
        ["reference", "method", "model", "beta0", "beta1", "r2", "rse", "n", "r2_kind"],
        [
            [c.reference, c.method, g.model, g.beta0, g.beta1, g.r2, g.rse, g.n, g.r2_kind]
            for c in r.comparisons
            for g in c.regressions
        ],
    )
    ci = _csv(
        ["reference", "method", "low", "high", "eps_abs", "eps_rel", "diff_mean", "alpha"],
        [
            [c.reference, c.method, i.low, i.high, i.eps_abs, i.eps_rel, i.diff_mean, i.alpha]
            for c in r.comparisons
            for i in [c.ci]
        ],
    )
    friction = _csv(
        ["device", "mu", "a_sz", "g", "mu_low", "mu_high"],
        [
            [dev, f.mu, f.a_sz, f.g, *(f.ci_mu if f.ci_mu is not None else (None, None))]
            for dev, f in r.friction.items()
        ],
    )
    speeds = _csv(
        ["device", "test_id", "v_sz_ms", "v_sz_kmh", "d_sz_m", "mu", "d_sz_method"],
        [
            [s.device, s.test_id, s.estimate.v_sz, s.estimate.v_sz * MS_TO_KMH, s.estimate.d_sz, s.estimate.mu,
             s.d_sz_method]
            for s in r.speeds
        ],
    )
    return {
        "per_test.csv": per_test,
        "per_method.csv": per_method,
        "precision.csv": precision,
        "anova.csv": anova,
        "regression.csv": regression,
        "confidence_intervals.csv": ci,
        "friction.csv": friction,
        "speeds.csv": speeds,
    }


def _write(path: Path, text: str) -> Path:
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _ensure_dir(out_dir: Path) -> Path:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportIOError(f"cannot create {out_dir}: {exc.strerror or exc}") from exc
    return out_dir


def emit_tables(r: ExperimentReport, out_dir: Path, formats: Sequence[str] = ("csv", "json")) -> list[Path]:
    """Write the CSV tables and/or ``report.json``; returns the written paths."""
    out_dir = _ensure_dir(out_dir)
    written = []
    if "csv" in formats:
        for name, text in table_texts(r).items():
            written.append(_write(out_dir / name, text))
    if "json" in formats:
        written.append(_write(out_dir / "report.json", r.to_json()))
    return written


# --- SVG ---------------------------------------------------------------------

_W, _H = 640, 360
_MARGIN = dict(left=60, right=20, top=36, bottom=46)
_PALETTE = {"accel": "#1f77b4", "phone": "#d62728", "tracker": "#2ca02c"}


def _c(v: float) -> str:
    return f"{v:.2f}"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-9 * span:
        ticks.append(round(first + k * step, 10))
        k += 1
    return ticks


class _Frame:
    """Maps data coordinates into one plot panel."""

    def __init__(self, x0, x1, y0, y1, left=_MARGIN["left"], width=_W - _MARGIN["left"] - _MARGIN["right"]):
        self.x0, self.x1 = x0, x1 if x1 > x0 else x0 + 1.0
        self.y0, self.y1 = y0, y1 if y1 > y0 else y0 + 1.0
        self.left = left
        self.width = width
        self.top = _MARGIN["top"]
        self.height = _H - _MARGIN["top"] - _MARGIN["bottom"]

    def px(self, x: float) -> float:
        return self.left + (x - self.x0) / (self.x1 - self.x0) * self.width

    def py(self, y: float) -> float:
        return self.top + (self.y1 - y) / (self.y1 - self.y0) * self.height

    def axes(self, xlabel: str, ylabel: str, x_ticks: bool = True) -> list[str]:
        bottom = self.top + self.height
        out = [
            f'<rect x="{_c(self.left)}" y="{_c(self.top)}" width="{_c(self.width)}" height="{_c(self.height)}" '
            'style="fill:none;stroke:#444;stroke-width:1"/>'
        ]
        for t in _nice_ticks(self.x0, self.x1) if x_ticks else []:
            x = self.px(t)
            out.append(f'<line x1="{_c(x)}" y1="{_c(bottom)}" x2="{_c(x)}" y2="{_c(bottom + 4)}" style="stroke:#444"/>')
            out.append(
                f'<text x="{_c(x)}" y="{_c(bottom + 16)}" style="font:10px sans-serif;text-anchor:middle">{t:g}</text>'
            )
        for t in _nice_ticks(self.y0, self.y1):
            y = self.py(t)
            out.append(
                f'<line x1="{_c(self.left - 4)}" y1="{_c(y)}" x2="{_c(self.left)}" y2="{_c(y)}" style="stroke:#444"/>'
            )
            out.append(
                f'<text x="{_c(self.left - 6)}" y="{_c(y + 3)}" style="font:10px sans-serif;text-anchor:end">{t:g}</text>'
            )
        out.append(
            f'<text x="{_c(self.left + self.width / 2)}" y="{_c(_H - 8)}" '
            f'style="font:11px sans-serif;text-anchor:middle">{_esc(xlabel)}</text>'
        )
        out.append(
            f'<text x="14" y="{_c(self.top + self.height / 2)}" style="font:11px sans-serif;text-anchor:middle" '
            f'transform="rotate(-90 14 {_c(self.top + self.height / 2)})">{_esc(ylabel)}</text>'
        )
        return out


def _svg(title: str, body: list[str]) -> str:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" style="fill:#ffffff"/>',
        f'<text x="{_W / 2:g}" y="20" style="font:bold 13px sans-serif;text-anchor:middle">{_esc(title)}</text>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def decel_svg(trace: DecelTrace, seg: Segmentation, title: str | None = None) -> str:
    """Deceleration against time with IZ/SZ shading and the plateau line."""
    times = trace.times
    samples = trace.samples
    t_end = trace.t0 + len(trace) * trace.dt
    ymax = max(float(samples.max()), seg.plateau_level) * 1.1
    ymin = min(0.0, float(samples.min()))
    frame = _Frame(float(trace.t0), float(t_end), ymin, ymax)
    body = []
    for name, start, end, colour in (
        ("iz", seg.iz_start, seg.iz_end, "#fde68a"),
        ("sz", seg.sz_start, seg.sz_end, "#bbf7d0"),
    ):
        if end > start:
            x0 = frame.px(trace.t0 + start * trace.dt)
            x1 = frame.px(trace.t0 + end * trace.dt)
            body.append(
                f'<rect class="{name}" x="{_c(x0)}" y="{_c(frame.top)}" width="{_c(x1 - x0)}" '
                f'height="{_c(frame.height)}" style="fill:{colour};fill-opacity:0.6"/>'
            )
    body += frame.axes("time (s)", "deceleration (m/s²)")
    points = " ".join(f"{_c(frame.px(t))},{_c(frame.py(a))}" for t, a in zip(times, samples))
    colour = _PALETTE.get(trace.device.value, "#333")
    body.append(f'<polyline class="trace" points="{points}" style="fill:none;stroke:{colour};stroke-width:1"/>')
    y = frame.py(seg.plateau_level)
    body.append(
        f'<line class="plateau" data-plateau="{float(seg.plateau_level)!r}" x1="{_c(frame.px(trace.t0 + seg.sz_start * trace.dt))}" '
        f'y1="{_c(y)}" x2="{_c(frame.px(trace.t0 + seg.sz_end * trace.dt))}" y2="{_c(y)}" '
        'style="stroke:#b91c1c;stroke-width:2"/>'
    )
    body.append(
        f'<text x="{_c(frame.left + frame.width - 4)}" y="{_c(frame.top + 14)}" '
        f'style="font:11px sans-serif;text-anchor:end">plateau {seg.plateau_level:.3f} m/s²</text>'
    )
    label = title or f"Deceleration, {trace.device.value} test {trace.meta.get('test', '')}".strip()
    return _svg(label, body)


def _paired_points(r: ExperimentReport, comp: ComparisonResult) -> list[tuple[float, float]]:
    ref = {rec.test_id: rec.a_sz for rec in r.tests_for(comp.reference)}
    alt = {rec.test_id: rec.a_sz for rec in r.tests_for(comp.method)}
    return [(alt[t], ref[t]) for t in comp.paired_tests if t in ref and t in alt]


def regression_svg(r: ExperimentReport) -> str | None:
    """Scatter of reference against each method with both fitted lines."""
    comps = [c for c in r.comparisons if c.regressions]
    if not comps:
        return None
    panel_w = (_W - _MARGIN["left"] - _MARGIN["right"] - 40 * (len(comps) - 1)) / len(comps)
    body = []
    for k, comp in enumerate(comps):
        pts = _paired_points(r, comp)
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        lo = min(xs + ys)
        hi = max(xs + ys)
        pad = 0.05 * (hi - lo) if hi > lo else 0.5
        frame = _Frame(lo - pad, hi + pad, lo - pad, hi + pad, left=_MARGIN["left"] + k * (panel_w + 40), width=panel_w)
        body += frame.axes(f"{comp.method} (m/s²)", f"{comp.reference} (m/s²)")
        for x, y in pts:
            body.append(f'<circle cx="{_c(frame.px(x))}" cy="{_c(frame.py(y))}" r="3" style="fill:#333"/>')
        for j, fit in enumerate(comp.regressions):
            colour = "#1f77b4" if fit.model == "with_intercept" else "#ff7f0e"
            xa, xb = frame.x0, frame.x1
            body.append(
                f'<line class="fit {fit.model}" x1="{_c(frame.px(xa))}" y1="{_c(frame.py(fit.beta0 + fit.beta1 * xa))}" '
                f'x2="{_c(frame.px(xb))}" y2="{_c(frame.py(fit.beta0 + fit.beta1 * xb))}" '
                f'style="stroke:{colour};stroke-width:1.5"/>'
            )
            body.append(
                f'<text x="{_c(frame.left + 6)}" y="{_c(frame.top + 14 + 14 * j)}" style="font:10px sans-serif;fill:{colour}">'
                f"{fit.model}: R²={fit.r2:.4f} RSE={fit.rse:.4f}</text>"
            )
    return _svg(f"Regression of {comps[0].reference} on other methods, {r.experiment_id}", body)


def friction_svg(r: ExperimentReport) -> str | None:
    """Bar chart of the SZ friction coefficient per device."""
    if not r.friction:
        return None
    devices = list(r.friction)
    top = max(max(f.ci_mu[1] if f.ci_mu else f.mu for f in r.friction.values()), 0.1) * 1.15
    frame = _Frame(0.0, float(len(devices)), 0.0, top)
    body = frame.axes("device", "friction coefficient μ", x_ticks=False)
    slot = frame.width / len(devices)
    for i, dev in enumerate(devices):
        est = r.friction[dev]
        x = frame.left + slot * (i + 0.2)
        y = frame.py(est.mu)
        body.append(
            f'<rect class="bar" data-mu="{est.mu!r}" x="{_c(x)}" y="{_c(y)}" width="{_c(slot * 0.6)}" '
            f'height="{_c(frame.py(0.0) - y)}" style="fill:{_PALETTE.get(dev, "#888")}"/>'
        )
        cx = frame.left + slot * (i + 0.5)
        if est.ci_mu is not None:
            y0, y1 = frame.py(est.ci_mu[0]), frame.py(est.ci_mu[1])
            body.append(f'<line x1="{_c(cx)}" y1="{_c(y0)}" x2="{_c(cx)}" y2="{_c(y1)}" style="stroke:#111;stroke-width:1.5"/>')
        body.append(
            f'<text x="{_c(cx)}" y="{_c(frame.py(0.0) + 16)}" style="font:11px sans-serif;text-anchor:middle">'
            f"{_esc(dev)} μ={est.mu:.3f}</text>"
        )
    return _svg(f"Friction coefficient in the SZ, {r.experiment_id}", body)


def emit_plots(
    trace: DecelTrace | None, seg: Segmentation | None, r: ExperimentReport, out_dir: Path
) -> list[Path]:
    """Write ``decel.svg``, ``regression.svg`` and ``friction.svg`` where data allow."""
    out_dir = _ensure_dir(out_dir)
    written = []
    if trace is not None and seg is not None:
        written.append(_write(out_dir / "decel.svg", decel_svg(trace, seg)))
    for name, text in (("regression.svg", regression_svg(r)), ("friction.svg", friction_svg(r))):
        if text is not None:
            written.append(_write(out_dir / name, text))
    return written
