"""Trace value types shared by ingest, kinematics and segmentation."""

from __future__ import annotations

import enum
import math
import warnings
from collections.abc import Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from skidkit.errors import IngestError, NonFiniteValue, NonMonotonicPosition

#: Positions may step backwards by this much (m) before a trace is rejected.
BACKTRACK_TOLERANCE_M = 0.25


class DeviceKind(str, enum.Enum):
    """Measurement device class; the value is the serialized token."""

    ReferenceAccelerometer = "accel"
    Smartphone = "phone"
    VideoTracker = "tracker"

    @classmethod
    def parse(cls, token: str) -> DeviceKind:
        try:
            return cls(token.strip().lower())
        except ValueError:
            raise ValueError(f"unknown device {token!r}; expected accel, phone or tracker") from None

    @property
    def nominal_rate(self) -> float:
        return NOMINAL_RATES[self]


NOMINAL_RATES = {
    DeviceKind.ReferenceAccelerometer: 100.0,
    DeviceKind.Smartphone: 30.0,
    DeviceKind.VideoTracker: 30.0,
}


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    arr.setflags(write=False)
    return arr


def _frozen_meta(meta: Mapping[str, str] | None) -> Mapping[str, str]:
    return MappingProxyType({str(k): str(v) for k, v in (meta or {}).items()})


@dataclass(frozen=True, eq=False)
class DecelTrace:
    """Uniformly sampled deceleration series, braking positive (m/s²).

    Timestamps are implied: ``t0 + i / sample_rate``. ``speed`` (m/s) and
    ``distance`` (m) are optional companion channels some devices log.
    """

    device: DeviceKind
    sample_rate: float
    samples: np.ndarray
    t0: float = 0.0
    meta: Mapping[str, str] = field(default_factory=dict)
    speed: np.ndarray | None = None
    distance: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "device", DeviceKind(self.device))
        object.__setattr__(self, "samples", _frozen_array(self.samples, "samples"))
        object.__setattr__(self, "meta", _frozen_meta(self.meta))
        if self.samples.size == 0:
            raise IngestError("trace has no samples")
        if not (math.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise IngestError(f"sample_rate must be positive, got {self.sample_rate}")
        if not math.isfinite(self.t0):
            raise NonFiniteValue("t0 is not finite")
        if not np.all(np.isfinite(self.samples)):
            bad = int(np.flatnonzero(~np.isfinite(self.samples))[0])
            raise NonFiniteValue(f"sample {bad} is not finite")
        for name in ("speed", "distance"):
            channel = getattr(self, name)
            if channel is None:
                continue
            channel = _frozen_array(channel, name)
            if channel.shape != self.samples.shape:
                raise IngestError(f"{name} channel length differs from samples")
            if not np.all(np.isfinite(channel)):
                raise NonFiniteValue(f"{name} channel has non-finite values")
            object.__setattr__(self, name, channel)

        nominal = self.device.nominal_rate
        if self.device is not DeviceKind.VideoTracker and abs(self.sample_rate - nominal) > 1e-6 * nominal:
            warnings.warn(
                f"{self.device.value} trace sampled at {self.sample_rate:g} Hz, nominal is {nominal:g} Hz",
                stacklevel=3,
            )

    def __len__(self) -> int:
        return self.samples.size

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.sample_rate

    def index_at(self, t: float) -> int:
        """Nearest sample index for time ``t``, clamped to ``[0, len]``."""
        i = round((t - self.t0) * self.sample_rate)
        return min(max(i, 0), len(self))

    def replace(self, **changes) -> DecelTrace:
        kwargs = dict(
            device=self.device,
            sample_rate=self.sample_rate,
            samples=self.samples,
            t0=self.t0,
            meta=dict(self.meta),
            speed=self.speed,
            distance=self.distance,
        )
        kwargs.update(changes)
        return DecelTrace(**kwargs)


@dataclass(frozen=True, eq=False)
class PositionTrace:
    """Longitudinal vehicle positions (m) from video, one per frame.

    Positions are expected to be non-decreasing; steps backwards larger than
    ``BACKTRACK_TOLERANCE_M`` are rejected as not a single braking run.
    """

    frame_rate: float
    positions: np.ndarray
    scale: float = 1.0
    t0: float = 0.0
    meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen_array(self.positions, "positions"))
        object.__setattr__(self, "meta", _frozen_meta(self.meta))
        if self.positions.size == 0:
            raise IngestError("trace has no positions")
        if not (math.isfinite(self.frame_rate) and self.frame_rate > 0):
            raise IngestError(f"frame_rate must be positive, got {self.frame_rate}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise IngestError(f"scale must be positive, got {self.scale}")
        if not np.all(np.isfinite(self.positions)):
            bad = int(np.flatnonzero(~np.isfinite(self.positions))[0])
            raise NonFiniteValue(f"position {bad} is not finite")
        backtrack = np.maximum.accumulate(self.positions) - self.positions
        if backtrack.max() > BACKTRACK_TOLERANCE_M:
            bad = int(np.argmax(backtrack > BACKTRACK_TOLERANCE_M))
            raise NonMonotonicPosition(
                f"position {bad} is {backtrack[bad]:.3f} m behind an earlier frame"
            )

    def __len__(self) -> int:
        return self.positions.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.positions.size) / self.frame_rate
