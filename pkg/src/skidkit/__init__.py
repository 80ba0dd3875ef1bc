"""Friction estimation from braking tests with an accelerometer, a phone or video."""

from __future__ import annotations

from skidkit.friction import (
    FrictionEstimate,
    SpeedEstimate,
    friction_coefficient,
    speed_at_sz,
)
from skidkit.inference import (
    anova_oneway,
    ci_two_sample,
    estimation_number,
    information_quantity,
    linear_regression,
    summarize,
)
from skidkit.ingest import (
    parse_accel_csv,
    parse_phone_csv,
    parse_tracker_csv,
    sniff_format,
)
from skidkit.kinematics import DiffConfig, accel_from_positions
from skidkit.report import ExperimentReport, emit_plots, emit_tables
from skidkit.segmentation import (
    Segmentation,
    SzConfig,
    detect_zones,
    manual_zones,
    sz_expected_value,
)
from skidkit.simulator import SimulationSpec, simulate
from skidkit.traces import DecelTrace, DeviceKind, PositionTrace
from skidkit.units import STANDARD_GRAVITY

__version__ = "0.1.0"

__all__ = [
    "STANDARD_GRAVITY",
    "DecelTrace",
    "DeviceKind",
    "DiffConfig",
    "ExperimentReport",
    "FrictionEstimate",
    "PositionTrace",
    "Segmentation",
    "SimulationSpec",
    "SpeedEstimate",
    "SzConfig",
    "accel_from_positions",
    "anova_oneway",
    "ci_two_sample",
    "detect_zones",
    "emit_plots",
    "emit_tables",
    "estimation_number",
    "friction_coefficient",
    "information_quantity",
    "linear_regression",
    "manual_zones",
    "parse_accel_csv",
    "parse_phone_csv",
    "parse_tracker_csv",
    "simulate",
    "sniff_format",
    "speed_at_sz",
    "summarize",
    "sz_expected_value",
]
