"""Synthetic device populations and their sensor outputs.

A device carries a speaker-to-microphone response curve (dB deviation per
frequency plus 2nd/3rd harmonic distortion), a six-parameter accelerometer
calibration and a User-Agent string. The simulators below are pure
functions of their inputs and a seed.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from sensorprint.accel import G, detect_rest_windows, z_axis_from_windows
from sensorprint.entropy import Submission
from sensorprint.rng import derive_rng

DEFAULT_USER_AGENTS: tuple[tuple[str, float], ...] = (
    ("Mozilla/5.0 (iPhone; CPU iPhone OS 6_1 like Mac OS X) AppleWebKit/536.26 Mobile/10B141", 3.0),
    ("Mozilla/5.0 (iPhone; CPU iPhone OS 7_0 like Mac OS X) AppleWebKit/537.51.1 Mobile/11A465", 3.0),
    ("Mozilla/5.0 (iPad; CPU OS 6_1 like Mac OS X) AppleWebKit/536.26 Mobile/10B141", 1.0),
    ("Mozilla/5.0 (Linux; U; Android 4.1.2; en-us; GT-I9300) AppleWebKit/534.30 Mobile Safari/534.30", 2.0),
    ("Mozilla/5.0 (Linux; Android 4.2.2; Nexus 4) AppleWebKit/537.36 Chrome/27.0 Mobile Safari/537.36", 1.5),
    ("Mozilla/5.0 (Linux; U; Android 2.3.4; en-us; DROID X2) AppleWebKit/533.1 Mobile Safari/533.1", 1.0),
    ("Mozilla/5.0 (Linux; Android 4.0.4; Galaxy Nexus) AppleWebKit/535.19 Chrome/18.0 Mobile Safari/535.19", 1.0),
    ("Mozilla/5.0 (Linux; U; Android 4.0.3; en-us; HTC One X) AppleWebKit/534.30 Mobile Safari/534.30", 0.5),
)


def synthetic_user_agents(n: int) -> tuple[tuple[str, float], ...]:
    """A catalog of ``n`` distinct equally weighted User-Agent strings."""
    return tuple((f"Mozilla/5.0 (Linux; Android 4.{i % 5}; Model-{i:03d}) Mobile", 1.0)
                 for i in range(n))


# --------------------------------------------------------------------------
# data model


@dataclass(frozen=True)
class AccelCalibration:
    s_x: float = 1.0
    s_y: float = 1.0
    s_z: float = 1.0
    o_x: float = 0.0
    o_y: float = 0.0
    o_z: float = 0.0

    def __post_init__(self):
        vals = (self.s_x, self.s_y, self.s_z, self.o_x, self.o_y, self.o_z)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("calibration parameters must be finite")
        if min(self.s_x, self.s_y, self.s_z) <= 0:
            raise ValueError("sensitivities must be strictly positive")

    @property
    def sensitivity(self) -> np.ndarray:
        return np.array([self.s_x, self.s_y, self.s_z])

    @property
    def offset(self) -> np.ndarray:
        return np.array([self.o_x, self.o_y, self.o_z])

    def apply(self, true_accel) -> np.ndarray:
        """Measured value for a true acceleration: ``v_t * S + O`` per axis."""
        return np.asarray(true_accel, float) * self.sensitivity + self.offset


@dataclass(frozen=True)
class AudioResponseProfile:
    """Gain deviation (dB) at knot frequencies, linearly interpolated."""

    knot_freqs: tuple[float, ...] = (0.0, 4000.0)
    gain_db: tuple[float, ...] = (0.0, 0.0)
    h2: float = 0.0
    h3: float = 0.0
    tolerance_db: float = 2.0

    def __post_init__(self):
        if len(self.knot_freqs) != len(self.gain_db) or not self.knot_freqs:
            raise ValueError("knot_freqs and gain_db must be non-empty and the same length")
        if any(b <= a for a, b in zip(self.knot_freqs, self.knot_freqs[1:])):
            raise ValueError("knot frequencies must be strictly increasing")
        if any(abs(g) > self.tolerance_db for g in self.gain_db):
            raise ValueError(f"gain deviations exceed +/-{self.tolerance_db} dB")
        for name in ("h2", "h3"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")

    @classmethod
    def flat(cls, h2: float = 0.0, h3: float = 0.0) -> "AudioResponseProfile":
        return cls(h2=h2, h3=h3)

    def gain_db_at(self, freq: float) -> float:
        return float(np.interp(freq, self.knot_freqs, self.gain_db))


@dataclass(frozen=True)
class NoiseSpec:
    audio_sigma: float = 0.0
    accel_sigma: float = 0.0
    quantization_step: float | None = None

    def __post_init__(self):
        if self.audio_sigma < 0 or self.accel_sigma < 0:
            raise ValueError("noise levels must be non-negative")
        if self.quantization_step is not None and self.quantization_step <= 0:
            raise ValueError("quantization_step must be positive when given")


@dataclass(frozen=True)
class LocationEffect:
    """Placement-dependent gain change and extra per-measurement jitter.

    ``gain_db`` shifts the response at each knot frequency; ``variance_db2``
    is the variance (dB^2) of a fresh Gaussian gain jitter drawn for every
    measurement. Both are interpolated linearly between knots. An empty
    effect is the neutral one.
    """

    knot_freqs: tuple[float, ...] = ()
    gain_db: tuple[float, ...] = ()
    variance_db2: tuple[float, ...] = ()

    def __post_init__(self):
        if not (len(self.knot_freqs) == len(self.gain_db) == len(self.variance_db2)):
            raise ValueError("location effect arrays must have equal length")
        if not all(math.isfinite(v) for v in (*self.gain_db, *self.variance_db2)):
            raise ValueError("location effect values must be finite")
        if any(v < 0 for v in self.variance_db2):
            raise ValueError("variances must be non-negative")

    def gain_db_at(self, freq: float) -> float:
        if not self.knot_freqs:
            return 0.0
        return float(np.interp(freq, self.knot_freqs, self.gain_db))

    def variance_at(self, freq: float) -> float:
        if not self.knot_freqs:
            return 0.0
        return float(np.interp(freq, self.knot_freqs, self.variance_db2))


NEUTRAL_LOCATION = LocationEffect()


@dataclass(frozen=True)
class Orientation:
    """Device attitude as a rotation matrix (device axes expressed in world).

    Gravity seen in the device frame is ``matrix.T @ (0, 0, g)``; a device
    lying face-up therefore reads +g on its Z axis.
    """

    matrix: tuple[tuple[float, float, float], ...] = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

    @classmethod
    def from_matrix(cls, m) -> "Orientation":
        m = np.asarray(m, float)
        if m.shape != (3, 3) or not np.allclose(m @ m.T, np.eye(3), atol=1e-9):
            raise ValueError("orientation matrix must be orthonormal 3x3")
        return cls(tuple(tuple(float(v) for v in row) for row in m))

    @classmethod
    def face_up(cls) -> "Orientation":
        return cls()

    @classmethod
    def face_down(cls) -> "Orientation":
        return cls(((1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, -1.0)))

    @classmethod
    def about_axis(cls, axis, angle: float) -> "Orientation":
        axis = np.asarray(axis, float)
        rot = Rotation.from_rotvec(axis / np.linalg.norm(axis) * angle)
        return cls.from_matrix(rot.as_matrix())

    @classmethod
    def random(cls, rng: np.random.Generator) -> "Orientation":
        return cls.from_matrix(Rotation.random(random_state=rng).as_matrix())

    def then_tilt(self, tilt_x: float, tilt_y: float) -> "Orientation":
        """Compose with a small extra tilt about the world X and Y axes."""
        extra = Rotation.from_euler("xy", [tilt_x, tilt_y]).as_matrix()
        return Orientation.from_matrix(extra @ np.asarray(self.matrix))

    def gravity(self) -> np.ndarray:
        return np.asarray(self.matrix).T @ np.array([0.0, 0.0, G])


@dataclass(frozen=True)
class DeviceProfile:
    device_id: str
    audio: AudioResponseProfile = field(default_factory=AudioResponseProfile)
    accel: AccelCalibration = field(default_factory=AccelCalibration)
    user_agent: str = ""
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    cookie_id: str = ""


@dataclass(frozen=True)
class AccelSample:
    t: float
    x: float
    y: float
    z: float


@dataclass(frozen=True, eq=False)
class AccelStream:
    """Time-ordered accelerometer samples held as arrays."""

    t: np.ndarray
    xyz: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[AccelSample]:
        for t, (x, y, z) in zip(self.t.tolist(), self.xyz.tolist()):
            yield AccelSample(t, x, y, z)

    def samples(self) -> list[AccelSample]:
        return list(self)

    @classmethod
    def concat(cls, streams: Sequence["AccelStream"]) -> "AccelStream":
        return cls(np.concatenate([s.t for s in streams]), np.concatenate([s.xyz for s in streams]))


@dataclass(frozen=True, eq=False)
class Recording:
    sample_rate: float
    samples: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("recording contains non-finite samples")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def middle(self, seconds: float = 1.0) -> "Recording":
        """Centered window of the given length."""
        n = int(round(seconds * self.sample_rate))
        if n > len(self.samples):
            raise ValueError(f"recording shorter than {seconds} s")
        start = (len(self.samples) - n) // 2
        return Recording(self.sample_rate, self.samples[start:start + n])


# --------------------------------------------------------------------------
# populations


@dataclass(frozen=True)
class ParameterRanges:
    """Sampling ranges for a synthetic population.

    ``distribution`` is ``"uniform"`` or ``"gaussian"``; the Gaussian
    variant is centred on the range midpoint with std = width / 6 and
    clipped to the range.
    """

    sensitivity: tuple[float, float] = (0.99, 1.04)
    offset: tuple[float, float] = (-0.5, 0.5)
    tolerance_db: float = 2.0
    h2: tuple[float, float] = (0.02, 0.12)
    h3: tuple[float, float] = (0.01, 0.06)
    knot_spacing_hz: float = 50.0
    max_knot_hz: float = 4000.0
    distribution: str = "uniform"
    user_agents: tuple[tuple[str, float], ...] = DEFAULT_USER_AGENTS
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def validate(self) -> None:
        for name in ("sensitivity", "offset", "h2", "h3"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValueError(f"range {name}={lo, hi} is not well formed (min <= max)")
        if self.sensitivity[0] <= 0:
            raise ValueError("sensitivity range must be strictly positive")
        if not (0 <= self.h2[0] and self.h2[1] < 1 and 0 <= self.h3[0] and self.h3[1] < 1):
            raise ValueError("harmonic distortion ranges must lie in [0, 1)")
        if self.tolerance_db < 0:
            raise ValueError("tolerance_db must be non-negative")
        if self.knot_spacing_hz <= 0 or self.max_knot_hz <= 0:
            raise ValueError("knot spacing and maximum must be positive")
        if self.distribution not in ("uniform", "gaussian"):
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if not self.user_agents or any(w < 0 for _, w in self.user_agents) \
                or sum(w for _, w in self.user_agents) <= 0:
            raise ValueError("user agent catalog needs positive total weight")

    def draw(self, rng: np.random.Generator, lo: float, hi: float, size=None):
        if self.distribution == "uniform":
            return rng.uniform(lo, hi, size)
        return np.clip(rng.normal((lo + hi) / 2, (hi - lo) / 6, size), lo, hi)


def sample_population(n: int, ranges: ParameterRanges = ParameterRanges(),
                      seed: int = 0) -> list[DeviceProfile]:
    """``n`` devices with independently drawn parameters.

    Device ``i`` depends only on ``(seed, i)``, so populations of different
    sizes share a common prefix.
    """
    if n < 0:
        raise ValueError("population size must be non-negative")
    ranges.validate()
    knots = tuple(float(f) for f in np.arange(0.0, ranges.max_knot_hz + ranges.knot_spacing_hz / 2,
                                              ranges.knot_spacing_hz))
    agents = [ua for ua, _ in ranges.user_agents]
    weights = np.array([w for _, w in ranges.user_agents], float)
    weights /= weights.sum()
    population = []
    for i in range(n):
        rng = derive_rng(seed, "device", i)
        s = ranges.draw(rng, *ranges.sensitivity, size=3)
        o = ranges.draw(rng, *ranges.offset, size=3)
        gains = ranges.draw(rng, -ranges.tolerance_db, ranges.tolerance_db, size=len(knots))
        h2 = float(ranges.draw(rng, *ranges.h2))
        h3 = float(ranges.draw(rng, *ranges.h3))
        ua = agents[int(rng.choice(len(agents), p=weights))]
        cookie = f"{int(rng.integers(0, 2**63)):016x}"
        population.append(DeviceProfile(
            device_id=f"dev{i:05d}",
            audio=AudioResponseProfile(knots, tuple(float(g) for g in gains), h2, h3,
                                       ranges.tolerance_db),
            accel=AccelCalibration(*(float(v) for v in s), *(float(v) for v in o)),
            user_agent=ua,
            noise=ranges.noise,
            cookie_id=cookie,
        ))
    return population


# --------------------------------------------------------------------------
# audio


@functools.lru_cache(maxsize=512)
def sine_table(freq: float, n: int, sample_rate: float) -> np.ndarray:
    """``sin(2 pi freq t)`` sampled at ``t = k / sample_rate``; read-only."""
    y = np.sin(2 * np.pi * freq * np.arange(n) / sample_rate)
    y.flags.writeable = False
    return y


def simulate_audio_playback(device: DeviceProfile, location: LocationEffect,
                            freqs: Sequence[float], amplitude: float, duration: float,
                            sample_rate: float = 8000.0, seed: int = 0,
                            run: int = 0) -> Recording:
    """Record simultaneous tones at ``freqs`` through the device's audio loop.

    Each tone reaches the microphone with amplitude
    ``amplitude * 10**((device_dB(f) + location_dB(f) + jitter)/20)`` and
    adds ``h2`` and ``h3`` times that amplitude at 2f and 3f (dropped if
    above Nyquist). Gaussian sample noise follows the device's NoiseSpec.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    nyquist = sample_rate / 2
    for f in freqs:
        if not 0 < f < nyquist:
            raise ValueError(f"frequency {f} Hz outside (0, {nyquist}) Hz")
    n = int(round(duration * sample_rate))
    rng = derive_rng(seed, "audio", device.device_id, run, *freqs)
    y = np.zeros(n)
    for f in freqs:
        db = device.audio.gain_db_at(f) + location.gain_db_at(f)
        var = location.variance_at(f)
        if var > 0:
            db += rng.normal(0.0, math.sqrt(var))
        a1 = amplitude * 10 ** (db / 20)
        for mult, coef in ((1, 1.0), (2, device.audio.h2), (3, device.audio.h3)):
            if coef and mult * f < nyquist:
                y += coef * a1 * sine_table(mult * f, n, sample_rate)
    if device.noise.audio_sigma > 0:
        y += rng.normal(0.0, device.noise.audio_sigma, n)
    return Recording(sample_rate, y)


def simulate_audio_measurement(device: DeviceProfile, location: LocationEffect, freq: float,
                               amplitude: float, duration: float, sample_rate: float = 8000.0,
                               seed: int = 0, run: int = 0) -> Recording:
    return simulate_audio_playback(device, location, [freq], amplitude, duration,
                                   sample_rate, seed, run)


# --------------------------------------------------------------------------
# accelerometer


def simulate_rest_stream(device: DeviceProfile, orientation: Orientation, duration: float,
                         rate: float, seed: int = 0, run: int = 0, t0: float = 0.0) -> AccelStream:
    if duration <= 0 or rate <= 0:
        raise ValueError("duration and rate must be positive")
    n = int(round(duration * rate))
    t = t0 + np.arange(n) / rate
    measured = device.accel.apply(orientation.gravity())
    xyz = np.tile(measured, (n, 1))
    if device.noise.accel_sigma > 0:
        rng = derive_rng(seed, "rest", device.device_id, run, *np.ravel(orientation.matrix))
        xyz = xyz + rng.normal(0.0, device.noise.accel_sigma, (n, 3))
    q = device.noise.quantization_step
    if q:
        xyz = np.round(xyz / q) * q
    return AccelStream(t, xyz)


def _flip_motion(n: int, rate: float, t0: float, rng: np.random.Generator) -> AccelStream:
    """Hand-held flip: strongly varying, off-gravity readings."""
    t = t0 + np.arange(n) / rate
    phase = np.linspace(0, np.pi, n)
    xyz = np.column_stack([4 * np.sin(3 * phase), 6 * np.sin(phase), 3 * np.cos(phase)])
    xyz += rng.normal(0.0, 1.0, (n, 3))
    return AccelStream(t, xyz)


@dataclass(frozen=True)
class RestDetection:
    magnitude_tol: float = 1.0
    variance_tol: float = 0.01
    min_samples: int = 50
    dominance: float = 0.9


def submission_counts(n_devices: int, distribution) -> dict[int, int]:
    """Exact number of devices per submission multiplicity.

    ``distribution`` is an int (every device submits that often) or a
    mapping multiplicity -> weight, apportioned by largest remainder.
    """
    if isinstance(distribution, (int, np.integer)):
        return {int(distribution): n_devices}
    items = sorted((int(k), float(w)) for k, w in dict(distribution).items())
    if not items or any(k < 1 or w < 0 for k, w in items):
        raise ValueError("submission distribution needs multiplicities >= 1 and weights >= 0")
    total = sum(w for _, w in items)
    if total <= 0:
        raise ValueError("submission distribution weights sum to zero")
    quotas = [(k, w / total * n_devices) for k, w in items]
    counts = {k: int(math.floor(q)) for k, q in quotas}
    short = n_devices - sum(counts.values())
    by_remainder = sorted(quotas, key=lambda kq: (-(kq[1] - math.floor(kq[1])), kq[0]))
    for k, _ in by_remainder[:short]:
        counts[k] += 1
    return counts


def simulate_submission(device: DeviceProfile, seed: int, index: int, duration: float = 2.0,
                        rate: float = 50.0, tilt_sigma: float = 0.0, offset_drift: float = 0.0,
                        detection: RestDetection = RestDetection(),
                        timestamp: float = 0.0) -> Submission:
    """One face-up / flip / face-down session reduced to a Z-axis fingerprint.

    ``tilt_sigma`` (rad) tilts each resting surface; ``offset_drift`` (m/s^2)
    shifts the device offsets by a fresh Gaussian amount for the session.
    """
    rng = derive_rng(seed, "session", device.device_id, index)
    tilts = rng.normal(0.0, tilt_sigma, 4) if tilt_sigma > 0 else np.zeros(4)
    if offset_drift > 0:
        drift = rng.normal(0.0, offset_drift, 3)
        cal = device.accel
        device = replace(device, accel=replace(cal, o_x=cal.o_x + drift[0],
                                               o_y=cal.o_y + drift[1], o_z=cal.o_z + drift[2]))
    up = Orientation.face_up().then_tilt(tilts[0], tilts[1])
    down = Orientation.face_down().then_tilt(tilts[2], tilts[3])
    n_flip = max(int(rate // 2), 2)
    s_up = simulate_rest_stream(device, up, duration, rate, seed, run=2 * index, t0=timestamp)
    flip = _flip_motion(n_flip, rate, timestamp + duration, rng)
    s_down = simulate_rest_stream(device, down, duration, rate, seed, run=2 * index + 1,
                                  t0=timestamp + duration + n_flip / rate)
    stream = AccelStream.concat([s_up, flip, s_down])
    windows = detect_rest_windows(stream, detection.magnitude_tol, detection.variance_tol,
                                  detection.min_samples)
    fp = z_axis_from_windows(windows, detection.dominance)
    return Submission(device.cookie_id or device.device_id, device.user_agent,
                      fp.o_z, fp.s_z, timestamp)


def simulate_submission_set(population: Sequence[DeviceProfile],
                            submissions_per_device: int | Mapping[int, float] = 2,
                            seed: int = 0, duration: float = 2.0, rate: float = 50.0,
                            tilt_sigma: float = 0.0, offset_drift: float = 0.0,
                            detection: RestDetection = RestDetection(),
                            session_gap: float = 3600.0) -> list[Submission]:
    """Cookie-correlated Z-axis submissions for a whole population.

    Multiplicities are assigned to devices by a seeded permutation so the
    number of devices per multiplicity matches the distribution exactly.
    Each submission is a fresh noisy session.
    """
    if not population:
        raise ValueError("population must be non-empty")
    counts = submission_counts(len(population), submissions_per_device)
    multiplicities = [k for k in sorted(counts) for _ in range(counts[k])]
    order = derive_rng(seed, "multiplicity", len(population)).permutation(len(population))
    subs = []
    for slot, dev_idx in enumerate(order):
        device = population[dev_idx]
        for k in range(multiplicities[slot]):
            subs.append(simulate_submission(device, seed, k, duration, rate, tilt_sigma,
                                            offset_drift, detection, timestamp=k * session_gap))
    subs.sort(key=lambda s: (s.cookie_id, s.timestamp))
    return subs
