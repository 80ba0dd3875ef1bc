"""Synthetic braking tests observed through the three device models.

Ground truth: the vehicle holds ``v0`` for ``t_idle`` seconds, deceleration
ramps linearly to ``mu_true * g`` over ``t_rise`` (the IZ), then stays on
that plateau plus an optional sinusoidal ABS ripple (the SZ) until the
vehicle stops, after which it is zero. Speed and position are integrated in
closed form.

Observations:

* accel: ground truth + Gaussian noise at 100 Hz, with speed and distance
  channels integrated from the noisy signal as the device would;
* phone: the longitudinal axis reads ``-a + bias + noise`` at 30 Hz (braking
  is negative in the phone frame), the other axes read noise and gravity;
* video: positions converted to pixels, Gaussian pixel noise added, and
  rounded to whole pixels at 30 fps.

Randomness comes from SplitMix64 (see :class:`SplitMix64`), a counter-based
64-bit generator with a fixed published algorithm, so a seed reproduces the
same bytes on every platform.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from skidkit import ingest
from skidkit.errors import InvalidSpec
from skidkit.kinematics import speed_distance_from_trace
from skidkit.traces import DecelTrace, DeviceKind, PositionTrace
from skidkit.units import STANDARD_GRAVITY, kmh_to_ms

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STREAMS = {"accel": 1, "phone": 2, "video": 3, "bias": 4, "speed": 5}

DEFAULT_NOISE = {"accel": 0.3, "phone": 0.5}
DEFAULT_RATES = {"accel": 100.0, "phone": 30.0, "tracker": 30.0}


class SplitMix64:
    """Counter-based SplitMix64.

    Output ``k`` (k = 1, 2, ...) is ``mix(seed + k * 0x9E3779B97F4A7C15 mod
    2**64)`` where ``mix`` is the standard SplitMix64 finalizer::

        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        z = z ^ (z >> 31)

    all modulo 2**64. Uniforms take the top 53 bits; normals use the
    Box-Muller transform on consecutive uniform pairs.
    """

    def __init__(self, seed: int):
        if not 0 <= seed <= _MASK64:
            raise InvalidSpec(f"seed must be a 64-bit unsigned integer, got {seed}")
        self._seed = np.uint64(seed)
        self._counter = 0

    @staticmethod
    def mix(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.uint64)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    def next_u64(self, n: int) -> np.ndarray:
        k = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            return self.mix(self._seed + k * np.uint64(_GOLDEN))

    def uniform(self, n: int) -> np.ndarray:
        """Uniform doubles in ``(0, 1]``."""
        return ((self.next_u64(n) >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log(u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]).ravel()[:n]

    @classmethod
    def stream(cls, seed: int, label: str, index: int = 0) -> SplitMix64:
        """Independent generator for one (seed, purpose, test index) triple."""
        base = cls(seed).next_u64(1)[0]
        key = (int(base) ^ (_STREAMS[label] * 0x632BE59BD9B4E019) ^ (index * _GOLDEN)) & _MASK64
        return cls(int(cls.mix(np.array([key], dtype=np.uint64))[0]))


@dataclass(frozen=True)
class SimulationSpec:
    mu_true: float = 0.8
    g: float = STANDARD_GRAVITY
    v0: float = kmh_to_ms(40.0)
    t_idle: float = 1.5
    t_rise: float = 0.3
    abs_ripple_amp: float = 0.0
    abs_ripple_hz: float = 12.0
    noise_sigma: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_NOISE))
    pixel_sigma: float = 0.5
    scale: float = 0.02
    rates: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_RATES))
    seed: int = 0
    phone_bias: float | None = None  # m/s²; None draws one from the seed
    t_tail: float = 0.5  # recording continues this long after the stop
    test_index: int = 0

    def validate(self) -> None:
        if not 0 < self.mu_true <= 1.5:
            raise InvalidSpec(f"mu_true must lie in (0, 1.5], got {self.mu_true}")
        if not self.g > 0:
            raise InvalidSpec(f"g must be positive, got {self.g}")
        if not self.v0 > 0:
            raise InvalidSpec(f"v0 must be positive, got {self.v0}")
        if self.t_idle < 0 or self.t_rise < 0 or self.t_tail < 0:
            raise InvalidSpec("durations must be non-negative")
        if not 0 <= self.abs_ripple_amp < self.mu_true * self.g:
            raise InvalidSpec("ABS ripple amplitude must be non-negative and below the plateau")
        if self.abs_ripple_amp > 0 and not self.abs_ripple_hz > 0:
            raise InvalidSpec("ABS ripple frequency must be positive")
        if self.pixel_sigma < 0 or any(s < 0 for s in self.noise_sigma.values()):
            raise InvalidSpec("noise sigmas must be non-negative")
        if not self.scale > 0:
            raise InvalidSpec(f"scale must be positive, got {self.scale}")
        for device in DEFAULT_RATES:
            if not self.rates.get(device, DEFAULT_RATES[device]) > 0:
                raise InvalidSpec(f"{device} rate must be positive")
        if not 0 <= self.seed <= _MASK64:
            raise InvalidSpec(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.v0 - 0.5 * self.mu_true * self.g * self.t_rise <= 0:
            raise InvalidSpec("vehicle stops before the deceleration ramp completes")

    def rate(self, device: str) -> float:
        return float(self.rates.get(device, DEFAULT_RATES[device]))

    def sigma(self, device: str) -> float:
        return float(self.noise_sigma.get(device, DEFAULT_NOISE[device]))


@dataclass(frozen=True)
class Truth:
    mu_true: float
    sz_start_s: float
    sz_end_s: float
    v_sz_ms: float
    stop_distance_m: float
    seed: int
    v0_ms: float
    g: float
    phone_bias_ms2: float
    test_index: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> Truth:
        return cls(**json.loads(text))


class SimulatedTest(NamedTuple):
    accel: DecelTrace
    phone: DecelTrace  # longitudinal axis, sign-normalized, bias still present
    video: PositionTrace
    truth: Truth
    phone_axes: np.ndarray  # raw (3, n) x/y/z readings as logged
    video_pixels: np.ndarray


class _Motion:
    """Closed-form ground-truth kinematics for one spec."""

    def __init__(self, spec: SimulationSpec):
        self.level = spec.mu_true * spec.g
        self.amp = spec.abs_ripple_amp
        self.omega = 2.0 * math.pi * spec.abs_ripple_hz
        self.v0 = spec.v0
        self.t_idle = spec.t_idle
        self.t_rise = spec.t_rise
        self.t_sz = spec.t_idle + spec.t_rise
        self.v_sz = spec.v0 - 0.5 * self.level * spec.t_rise
        self.x_sz = spec.v0 * self.t_sz - self.level * spec.t_rise**2 / 6.0
        self.tau_stop = self._stop_time()
        self.t_stop = self.t_sz + self.tau_stop
        self.x_stop = float(self._plateau_position(np.array([self.tau_stop]))[0])

    def _plateau_speed(self, tau):
        v = self.v_sz - self.level * tau
        if self.amp:
            v = v - self.amp * (1.0 - np.cos(self.omega * tau)) / self.omega
        return v

    def _plateau_position(self, tau):
        x = self.x_sz + self.v_sz * tau - 0.5 * self.level * tau**2
        if self.amp:
            x = x - self.amp / self.omega * (tau - np.sin(self.omega * tau) / self.omega)
        return x

    def _stop_time(self) -> float:
        if not self.amp:
            return self.v_sz / self.level
        lo, hi = 0.0, self.v_sz / (self.level - self.amp)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self._plateau_speed(mid) > 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def decel(self, t: np.ndarray) -> np.ndarray:
        a = np.zeros_like(t)
        if self.t_rise > 0:
            ramp = (t >= self.t_idle) & (t < self.t_sz)
            a[ramp] = self.level * (t[ramp] - self.t_idle) / self.t_rise
        plateau = (t >= self.t_sz) & (t < self.t_stop)
        a[plateau] = self.level + self.amp * np.sin(self.omega * (t[plateau] - self.t_sz))
        return a

    def speed(self, t: np.ndarray) -> np.ndarray:
        v = np.full_like(t, self.v0)
        if self.t_rise > 0:
            ramp = (t >= self.t_idle) & (t < self.t_sz)
            v[ramp] = self.v0 - 0.5 * self.level * (t[ramp] - self.t_idle) ** 2 / self.t_rise
        plateau = (t >= self.t_sz) & (t < self.t_stop)
        v[plateau] = self._plateau_speed(t[plateau] - self.t_sz)
        v[t >= self.t_stop] = 0.0
        return v

    def position(self, t: np.ndarray) -> np.ndarray:
        x = self.v0 * t
        if self.t_rise > 0:
            ramp = (t >= self.t_idle) & (t < self.t_sz)
            tau = t[ramp] - self.t_idle
            x[ramp] = self.v0 * t[ramp] - self.level * tau**3 / (6.0 * self.t_rise)
        plateau = (t >= self.t_sz) & (t < self.t_stop)
        x[plateau] = self._plateau_position(t[plateau] - self.t_sz)
        x[t >= self.t_stop] = self.x_stop
        return x


def _timeline(rate: float, duration: float) -> np.ndarray:
    return np.arange(int(math.floor(duration * rate + 1e-9)) + 1) / rate


def simulate(spec: SimulationSpec) -> SimulatedTest:
    """Generate one braking test as seen by the three devices."""
    spec.validate()
    motion = _Motion(spec)
    duration = motion.t_stop + spec.t_tail
    seed, idx = spec.seed, spec.test_index
    meta = {"test": f"{idx + 1:02d}", "experiment": f"sim-{seed}", "surface": "synthetic"}

    t_acc = _timeline(spec.rate("accel"), duration)
    acc_noise = SplitMix64.stream(seed, "accel", idx).normal(t_acc.size) * spec.sigma("accel")
    accel_raw = DecelTrace(
        device=DeviceKind.ReferenceAccelerometer,
        sample_rate=spec.rate("accel"),
        samples=motion.decel(t_acc) + acc_noise,
        meta=meta,
    )
    speed, distance = speed_distance_from_trace(accel_raw, spec.v0)
    accel = accel_raw.replace(speed=speed, distance=distance)

    if spec.phone_bias is None:
        bias = float(SplitMix64.stream(seed, "bias", idx).uniform(1)[0] - 0.5)
    else:
        bias = float(spec.phone_bias)
    t_ph = _timeline(spec.rate("phone"), duration)
    ph_noise = SplitMix64.stream(seed, "phone", idx).normal(3 * t_ph.size).reshape(3, -1) * spec.sigma("phone")
    axes = np.vstack(
        [
            -motion.decel(t_ph) + bias + ph_noise[0],
            ph_noise[1],
            spec.g + ph_noise[2],
        ]
    )
    phone = DecelTrace(
        device=DeviceKind.Smartphone,
        sample_rate=spec.rate("phone"),
        samples=-axes[0],
        meta=meta,
    )

    t_vid = _timeline(spec.rate("tracker"), duration)
    px_noise = SplitMix64.stream(seed, "video", idx).normal(t_vid.size) * spec.pixel_sigma
    pixels = np.round(motion.position(t_vid) / spec.scale + px_noise)
    video = PositionTrace(
        frame_rate=spec.rate("tracker"),
        positions=pixels * spec.scale,
        scale=spec.scale,
        meta=meta,
    )

    truth = Truth(
        mu_true=spec.mu_true,
        sz_start_s=motion.t_sz,
        sz_end_s=motion.t_stop,
        v_sz_ms=motion.v_sz,
        stop_distance_m=motion.x_stop - motion.x_sz,
        seed=seed,
        v0_ms=spec.v0,
        g=spec.g,
        phone_bias_ms2=bias,
        test_index=idx,
    )
    return SimulatedTest(accel, phone, video, truth, axes, pixels)


def ground_truth(spec: SimulationSpec, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Noiseless (deceleration, speed, position) at times ``t``."""
    spec.validate()
    motion = _Motion(spec)
    t = np.asarray(t, dtype=float)
    return motion.decel(t), motion.speed(t), motion.position(t)


def experiment_specs(base: SimulationSpec, n_tests: int, v0_jitter: float = 0.05) -> list[SimulationSpec]:
    """Specs for ``n_tests`` repetitions; initial speed varies by up to ``±v0_jitter``."""
    if n_tests < 1:
        raise InvalidSpec(f"need at least one test, got {n_tests}")
    jitter = SplitMix64.stream(base.seed, "speed").uniform(n_tests) * 2.0 - 1.0
    specs = []
    for i in range(n_tests):
        spec = SimulationSpec(**{**_spec_fields(base), "test_index": i, "v0": base.v0 * (1.0 + v0_jitter * jitter[i])})
        spec.validate()
        specs.append(spec)
    return specs


def _spec_fields(spec: SimulationSpec) -> dict:
    return {name: getattr(spec, name) for name in spec.__dataclass_fields__}


def write_test(sim: SimulatedTest, out_dir: Path, phone_axis: str = "x") -> list[Path]:
    """Write the three device logs and the truth sidecar for one test."""
    out_dir = Path(out_dir)
    stem = f"test_{sim.truth.test_index + 1:02d}"
    raw_axis = {"x": 0, "y": 1, "z": 2}[phone_axis]
    order = [raw_axis] + [i for i in range(3) if i != raw_axis]
    phone_raw = sim.phone.replace(samples=sim.phone_axes[raw_axis])
    others = tuple(sim.phone_axes[i] for i in order[1:])
    files = {
        f"{stem}_accel.csv": ingest.format_accel_csv(sim.accel),
        f"{stem}_phone.csv": ingest.format_phone_csv(phone_raw, axis=phone_axis, other_axes=others),
        f"{stem}_tracker.csv": ingest.format_tracker_csv(sim.video, pixels=sim.video_pixels),
        f"{stem}_truth.json": sim.truth.to_json(),
    }
    paths = []
    for name, text in files.items():
        path = out_dir / name
        path.write_text(text, encoding="utf-8", newline="\n")
        paths.append(path)
    return paths


def write_experiment(base: SimulationSpec, n_tests: int, out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for spec in experiment_specs(base, n_tests):
        paths += write_test(simulate(spec), out_dir)
    return paths
