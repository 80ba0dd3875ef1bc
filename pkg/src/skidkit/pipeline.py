"""ingest -> segmentation -> inference -> friction, assembled into a report."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from skidkit import ingest
from skidkit.errors import SkidkitError
from skidkit.friction import friction_coefficient, speed_at_sz
from skidkit.inference import (
    anova_oneway,
    ci_two_sample,
    estimation_number,
    information_quantity,
    linear_regression,
    summarize,
)
from skidkit.kinematics import DiffConfig, accel_from_positions, knee_from_positions
from skidkit.report import ComparisonResult, ExperimentReport, SpeedRecord, TestRecord
from skidkit.segmentation import (
    Segmentation,
    SzConfig,
    detect_zones,
    manual_zones,
    refine_sz_start,
    sz_expected_value,
)
from skidkit.traces import DecelTrace, DeviceKind, PositionTrace
from skidkit.units import STANDARD_GRAVITY


class InputError(SkidkitError):
    """An input file failed; carries the path for the message."""

    def __init__(self, path: Path, cause: Exception):
        self.path = path
        self.cause = cause
        super().__init__(f"{path}: {cause}")


@dataclass(frozen=True)
class AnalysisConfig:
    reference: str = "accel"
    axis: str = "x"
    g: float = STANDARD_GRAVITY
    alpha: float = 0.05
    ma_window: int | None = None  # samples
    ma_window_s: float | None = None  # seconds; used when ma_window is None
    sz_override: tuple[float, float] | None = None
    diff: DiffConfig = DiffConfig()
    bias_window: float = ingest.DEFAULT_BIAS_WINDOW_S
    experiment_id: str | None = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if self.sz_override is not None and not self.sz_override[0] < self.sz_override[1]:
            raise ValueError("SZ override start must precede its end")

    def window_for(self, sample_rate: float) -> int | None:
        if self.ma_window is not None:
            return self.ma_window
        if self.ma_window_s is not None:
            return max(1, round(self.ma_window_s * sample_rate))
        return None


@dataclass
class TestAnalysis:
    __test__ = False

    source: str
    test_id: str
    device: str
    trace: DecelTrace
    seg: Segmentation
    a_sz: float
    positions: PositionTrace | None = None
    d_sz: float | None = None
    d_sz_method: str | None = None
    meta: dict = field(default_factory=dict)


def load_trace(path: Path, fmt: str | None, cfg: AnalysisConfig) -> tuple[DecelTrace, PositionTrace | None]:
    text = Path(path).read_bytes()
    fmt = fmt or ingest.sniff_format(text)
    if fmt == "accel":
        return ingest.parse_accel_csv(text, g=cfg.g), None
    if fmt == "phone":
        return ingest.parse_phone_csv(text, axis=cfg.axis, bias_window=cfg.bias_window), None
    if fmt == "tracker":
        positions = ingest.parse_tracker_csv(text)
        return accel_from_positions(positions, cfg.diff), positions
    raise ValueError(f"unknown format {fmt!r}")


def _sz_distance(trace: DecelTrace, seg: Segmentation, positions: PositionTrace | None) -> tuple[float, str]:
    last = seg.sz_end - 1
    if trace.distance is not None:
        return float(trace.distance[last] - trace.distance[seg.sz_start]), "distance channel"
    if positions is not None:
        offset = round((trace.t0 - positions.t0) * positions.frame_rate)
        p = positions.positions
        return float(p[offset + last] - p[offset + seg.sz_start]), "video positions"
    # vehicle is at rest at the end of the SZ: integrate backwards from v = 0
    a = trace.samples[seg.sz_start : seg.sz_end]
    dt = trace.dt
    increments = 0.5 * (a[1:] + a[:-1]) * dt
    speed = np.concatenate([np.cumsum(increments[::-1])[::-1], [0.0]])
    return float(np.sum(0.5 * (speed[1:] + speed[:-1]) * dt)), "integrated to stop"


def refine_with_positions(trace: DecelTrace, seg: Segmentation, positions: PositionTrace) -> Segmentation:
    """Move an automatic SZ start to the knee fitted on the video positions."""
    if seg.sz_start == 0:
        return seg
    t_iz = trace.t0 + seg.iz_start * trace.dt
    t_sz, t_stop = seg.sz_seconds(trace)
    t_lo = max(t_iz - 0.2, positions.t0)
    t_hi = t_sz + 0.3
    t_end = t_stop - 0.2
    if not t_lo < t_hi < t_end:
        return seg
    knee = knee_from_positions(positions, t_lo, t_hi, t_end)
    start = min(max(trace.index_at(knee), seg.iz_start), seg.sz_end - 1)
    return replace(seg, iz_end=start, sz_start=start)


def analyze_trace(
    trace: DecelTrace,
    cfg: AnalysisConfig,
    positions: PositionTrace | None = None,
    source: str = "",
) -> TestAnalysis:
    """Segment one trace and compute its SZ expected value and distance."""
    sz_cfg = SzConfig(ma_window=cfg.window_for(trace.sample_rate))
    if cfg.sz_override is not None:
        seg = manual_zones(trace, *cfg.sz_override)
    else:
        seg = detect_zones(trace, sz_cfg)
        if positions is not None:
            seg = refine_with_positions(trace, seg, positions)
        else:
            seg = refine_sz_start(trace, seg, sz_cfg.window_for(trace.sample_rate))
    a_sz = sz_expected_value(trace, seg, sz_cfg.window_for(trace.sample_rate))
    d_sz, d_method = _sz_distance(trace, seg, positions)
    test_id = trace.meta.get("test") or Path(source).stem or "test"
    return TestAnalysis(
        source=source,
        test_id=test_id,
        device=trace.device.value,
        trace=trace,
        seg=seg,
        a_sz=a_sz,
        positions=positions,
        d_sz=d_sz,
        d_sz_method=d_method,
        meta=dict(trace.meta),
    )


def analyze_file(path: Path, cfg: AnalysisConfig, fmt: str | None = None, device: str | None = None) -> TestAnalysis:
    try:
        trace, positions = load_trace(path, fmt, cfg)
        result = analyze_trace(trace, cfg, positions, source=Path(path).name)
    except (SkidkitError, OSError, ValueError) as exc:
        raise InputError(Path(path), exc) from exc
    if device is not None:
        result.device = DeviceKind.parse(device).value
    return result


def _test_record(t: TestAnalysis) -> TestRecord:
    sz = t.trace.samples[t.seg.sz]
    start, end = t.seg.sz_seconds(t.trace)
    return TestRecord(
        test_id=t.test_id,
        device=t.device,
        source=t.source,
        summary=summarize(sz),
        a_sz=t.a_sz,
        sz_start_s=start,
        sz_end_s=end,
        plateau_level=t.seg.plateau_level,
        auto_segmented=t.seg.auto,
        d_sz=t.d_sz,
        d_sz_method=t.d_sz_method,
    )


def _unique_ids(tests: Sequence[TestAnalysis]) -> dict[str, float]:
    seen: dict[str, list[float]] = {}
    for t in tests:
        seen.setdefault(t.test_id, []).append(t.a_sz)
    return {k: v[0] for k, v in seen.items() if len(v) == 1}


def _compare(reference: str, method: str, ref: list[TestAnalysis], alt: list[TestAnalysis], alpha: float) -> ComparisonResult:
    ref_values = [t.a_sz for t in ref]
    alt_values = [t.a_sz for t in alt]
    prec_ref = information_quantity(ref_values)
    prec_alt = information_quantity(alt_values)
    prec_alt = replace(prec_alt, estimation_number=estimation_number(prec_ref.iq, prec_alt.iq))
    ref_ids, alt_ids = _unique_ids(ref), _unique_ids(alt)
    paired = sorted(set(ref_ids) & set(alt_ids))
    regressions = ()
    if len(paired) >= 3:
        points = [(alt_ids[k], ref_ids[k]) for k in paired]
        regressions = tuple(linear_regression(points, m) for m in ("with_intercept", "through_origin"))
    return ComparisonResult(
        reference=reference,
        method=method,
        anova=anova_oneway([ref_values, alt_values], alpha),
        ci=ci_two_sample(ref_values, alt_values, alpha),
        precision_ref=prec_ref,
        precision_method=prec_alt,
        regressions=regressions,
        paired_tests=tuple(paired),
    )


def build_report(tests: Sequence[TestAnalysis], cfg: AnalysisConfig) -> ExperimentReport:
    """Aggregate per-test analyses into an :class:`ExperimentReport`."""
    by_device: dict[str, list[TestAnalysis]] = {}
    for t in sorted(tests, key=lambda t: (t.device, t.test_id, t.source)):
        by_device.setdefault(t.device, []).append(t)

    per_method = {}
    friction = {}
    for device, group in by_device.items():
        values = [t.a_sz for t in group]
        if len(group) >= 2:
            summary = summarize(values)
            per_method[device] = summary
            ci = (summary.mean - summary.cl95, summary.mean + summary.cl95)
            friction[device] = friction_coefficient(max(summary.mean, 0.0), cfg.g, ci=ci)
        else:
            friction[device] = friction_coefficient(max(values[0], 0.0), cfg.g)

    comparisons = []
    if cfg.reference in per_method:
        for device in by_device:
            if device != cfg.reference and device in per_method:
                comparisons.append(
                    _compare(cfg.reference, device, by_device[cfg.reference], by_device[device], cfg.alpha)
                )

    speeds = []
    for device, group in by_device.items():
        mu = friction[device].mu
        for t in group:
            if t.d_sz is not None and t.d_sz >= 0:
                speeds.append(SpeedRecord(t.test_id, device, speed_at_sz(mu, t.d_sz, cfg.g), t.d_sz_method or ""))

    experiment = cfg.experiment_id
    if experiment is None:
        experiment = next((t.meta["experiment"] for t in tests if "experiment" in t.meta), "experiment")
    notes = {
        "g_ms2": repr(cfg.g),
        "ma_window": "quarter second" if cfg.window_for(100.0) is None else str(cfg.ma_window or cfg.ma_window_s),
        "anova_basis": "per-test SZ expected values",
        "iq_basis": "per-test SZ expected values",
        "r2_with_intercept": "centered: 1 - SS_res / sum((y - mean y)^2)",
        "r2_through_origin": "uncentered: 1 - SS_res / sum(y^2)",
        "speed_model": "v = sqrt(2 mu g d_sz) with the device mean mu",
        "segmentation": "manual" if cfg.sz_override is not None else "automatic",
        "sz_start": "given" if cfg.sz_override is not None else "least-squares ramp knee (video: on positions)",
    }
    return ExperimentReport(
        experiment_id=experiment,
        reference=cfg.reference,
        g=cfg.g,
        alpha=cfg.alpha,
        per_test=tuple(_test_record(t) for group in by_device.values() for t in group),
        per_method=per_method,
        comparisons=tuple(comparisons),
        friction=friction,
        speeds=tuple(speeds),
        notes=notes,
    )


def plot_subject(tests: Sequence[TestAnalysis], reference: str) -> TestAnalysis | None:
    """The test drawn in ``decel.svg``: first reference test, else the first test."""
    ordered = sorted(tests, key=lambda t: (t.device != reference, t.device, t.test_id, t.source))
    return ordered[0] if ordered else None

