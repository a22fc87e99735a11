"""Accelerometer calibration fingerprints.

Two estimators live here:

* the closed-form Z-axis pair, computed from one face-up and one face-down
  rest reading;
* the full six-parameter fit (three offsets, three sensitivities) from six or
  more arbitrary rest positions, solved by numerical gradient descent on the
  sum of squared gravity-magnitude residuals.

Rest windows are found with :func:`detect_rest_windows`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

G = 9.80665

FACE_UP = "face_up"
FACE_DOWN = "face_down"
OTHER = "other"


@dataclass(frozen=True)
class RestWindow:
    start: int
    end: int  # exclusive
    mean: tuple[float, float, float]
    count: int

    @property
    def mean_vector(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float)


@dataclass(frozen=True)
class ZAxisFingerprint:
    o_z: float
    s_z: float

    def __post_init__(self):
        if not (math.isfinite(self.o_z) and math.isfinite(self.s_z)):
            raise ValueError("Z-axis fingerprint must be finite")
        if self.s_z <= 0:
            raise ValueError(f"s_z must be positive, got {self.s_z}")


@dataclass(frozen=True)
class SixParamFingerprint:
    o_x: float
    o_y: float
    o_z: float
    s_x: float
    s_y: float
    s_z: float
    residual_norm: float = 0.0
    converged: bool = True
    iterations: int = 0
    objective_trace: tuple[float, ...] = field(default=(), repr=False, compare=False)

    @property
    def offsets(self) -> np.ndarray:
        return np.array([self.o_x, self.o_y, self.o_z])

    @property
    def sensitivities(self) -> np.ndarray:
        return np.array([self.s_x, self.s_y, self.s_z])

    def as_vector(self) -> np.ndarray:
        """Order: o_x, o_y, o_z, s_x, s_y, s_z."""
        return np.concatenate([self.offsets, self.sensitivities])


@dataclass(frozen=True)
class GdConfig:
    """Hyperparameters of the six-parameter gradient descent."""

    gradient_step: float = 1e-6
    learning_rate: float = 1e-3
    max_iterations: int = 10_000
    tolerance: float = 1e-12
    min_separation_deg: float = 10.0
    record_trace: bool = False

    def __post_init__(self):
        for name in ("gradient_step", "learning_rate", "max_iterations",
                     "tolerance", "min_separation_deg"):
            if not getattr(self, name) > 0:
                raise ValueError(f"GdConfig.{name} must be positive")


class UnderdeterminedError(ValueError):
    """Raised when too few distinct rest orientations are available."""


# --------------------------------------------------------------------------
# rest detection


def _as_xyz(stream) -> np.ndarray:
    xyz = getattr(stream, "xyz", None)
    if xyz is not None:
        return np.asarray(xyz, dtype=float)
    return np.array([[s.x, s.y, s.z] for s in stream], dtype=float).reshape(-1, 3)


def detect_rest_windows(stream, magnitude_tol: float = 1.0,
                        variance_tol: float = 0.01,
                        min_samples: int = 50) -> list[RestWindow]:
    """Find maximal contiguous segments where the device is still.

    A sample qualifies when its magnitude lies within ``magnitude_tol`` of g.
    Runs of qualifying samples are then grown greedily from the left for as
    long as every axis keeps a (population) variance at or below
    ``variance_tol``; a window that breaks the variance bound is closed and a
    new one starts at the offending sample.

    ``stream`` is either an :class:`~sensorprint.device.AccelStream` or any
    iterable of objects with ``x``, ``y``, ``z`` attributes.
    """
    xyz = _as_xyz(stream)
    if len(xyz) == 0:
        return []
    mag = np.linalg.norm(xyz, axis=1)
    ok = np.abs(mag - G) <= magnitude_tol

    # boundaries of runs of in-band samples
    padded = np.concatenate([[False], ok, [False]])
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    windows = []
    for run_start, run_end in zip(edges[::2], edges[1::2]):
        start = run_start
        while run_end - start >= min_samples:
            seg = xyz[start:run_end] - xyz[start]
            n = np.arange(1, len(seg) + 1)[:, None]
            c1 = np.cumsum(seg, axis=0)
            c2 = np.cumsum(seg * seg, axis=0)
            var = c2 / n - (c1 / n) ** 2
            bad = np.flatnonzero((var > variance_tol).any(axis=1))
            stop = start + (bad[0] if len(bad) else len(seg))
            if stop - start >= min_samples:
                mean = xyz[start:stop].mean(axis=0)
                windows.append(RestWindow(int(start), int(stop),
                                          tuple(float(v) for v in mean),
                                          int(stop - start)))
            if stop == start:
                # a single sample never violates the bound; guard anyway
                stop += 1
            start = stop
    return windows


def classify_orientation(window: RestWindow, dominance: float = 0.9) -> str:
    m = window.mean_vector
    norm = float(np.linalg.norm(m))
    z = m[2]
    if norm == 0.0 or abs(z) < dominance * norm:
        return OTHER
    return FACE_UP if z > 0 else FACE_DOWN


def pooled_mean(windows: Sequence[RestWindow]) -> np.ndarray:
    """Sample-count weighted mean of several window means."""
    if not windows:
        raise ValueError("no windows to pool")
    w = np.array([win.count for win in windows], dtype=float)
    means = np.array([win.mean for win in windows])
    return (w[:, None] * means).sum(axis=0) / w.sum()


# --------------------------------------------------------------------------
# Z axis


def estimate_z_axis(z_up: float, z_down: float) -> ZAxisFingerprint:
    if not z_up > z_down:
        raise ValueError(
            f"face-up reading {z_up} must exceed face-down reading {z_down}; "
            "windows are probably mislabeled")
    return ZAxisFingerprint(o_z=float((z_up + z_down) / 2), s_z=float((z_up - z_down) / (2 * G)))


def z_axis_from_windows(windows: Iterable[RestWindow],
                        dominance: float = 0.9) -> ZAxisFingerprint:
    """Pool face-up and face-down windows and apply :func:`estimate_z_axis`."""
    up, down = [], []
    for win in windows:
        label = classify_orientation(win, dominance)
        if label == FACE_UP:
            up.append(win)
        elif label == FACE_DOWN:
            down.append(win)
    if not up or not down:
        raise ValueError(
            f"need both face-up and face-down windows (got {len(up)} up, {len(down)} down)")
    return estimate_z_axis(pooled_mean(up)[2], pooled_mean(down)[2])


# --------------------------------------------------------------------------
# six parameters


def six_param_residual(params, m) -> float:
    """Gravity-magnitude residual of one rest measurement.

    ``params`` is ``(o_x, o_y, o_z, s_x, s_y, s_z)`` or a
    :class:`SixParamFingerprint`; ``m`` is the window mean ``(x, y, z)``.
    """
    p = params.as_vector() if isinstance(params, SixParamFingerprint) else np.asarray(params, float)
    s = p[3:]
    if np.any(s == 0):
        raise ValueError("sensitivities must be non-zero")
    true = (np.asarray(m, float) - p[:3]) / s
    return float(true @ true - G * G)


def _objective(params: np.ndarray, means: np.ndarray) -> np.ndarray:
    """Sum of squared residuals for a stack of parameter rows, shape (k, 6)."""
    o = params[:, None, :3]
    s = params[:, None, 3:]
    eps = (((means[None] - o) / s) ** 2).sum(axis=-1) - G * G
    return (eps ** 2).sum(axis=-1)


def six_param_objective(params, means) -> float:
    p = np.asarray(params, float).reshape(1, 6)
    return float(_objective(p, np.asarray(means, float).reshape(-1, 3))[0])


# The descent runs in scaled coordinates theta = (O, g*(S - 1)) so that both
# halves of the parameter vector are in m/s^2 and share one step size.

def _to_params(theta: np.ndarray) -> np.ndarray:
    return np.concatenate([theta[..., :3], 1.0 + theta[..., 3:] / G], axis=-1)


def _to_theta(params: np.ndarray) -> np.ndarray:
    return np.concatenate([params[..., :3], G * (params[..., 3:] - 1.0)], axis=-1)


def objective_gradient(params, means, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of the objective in scaled coordinates."""
    theta = _to_theta(np.asarray(params, float))
    means = np.asarray(means, float).reshape(-1, 3)
    return _gradient(theta, means, step)


def _gradient(theta: np.ndarray, means: np.ndarray, step: float) -> np.ndarray:
    e = np.eye(6) * step
    f = _objective(_to_params(np.vstack([theta + e, theta - e])), means)
    return (f[:6] - f[6:]) / (2 * step)


def count_distinct_orientations(means, min_separation_deg: float = 10.0) -> int:
    """Size of a greedy set of mean directions pairwise >= the given angle apart."""
    dirs = np.asarray(means, float).reshape(-1, 3)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    cos_max = math.cos(math.radians(min_separation_deg))
    kept: list[np.ndarray] = []
    for d in dirs:
        if all(float(d @ k) <= cos_max for k in kept):
            kept.append(d)
    return len(kept)


def estimate_six_params(means, cfg: GdConfig = GdConfig()) -> SixParamFingerprint:
    """Fit offsets and sensitivities of all three axes from rest means.

    Starts at O = 0, S = 1. Each iteration takes a step along the negative
    central-difference gradient; the trial step length is the Barzilai-Borwein
    estimate from the previous iteration (``learning_rate`` on the first) and
    is halved until the objective does not increase, so the objective trace
    is monotone non-increasing. Stops when the decrease falls below
    ``cfg.tolerance``, when no descent step can be found, or after
    ``cfg.max_iterations`` (then ``converged`` is False).
    """
    means = np.asarray(means, float).reshape(-1, 3)
    distinct = count_distinct_orientations(means, cfg.min_separation_deg)
    if distinct < 6:
        raise UnderdeterminedError(
            f"six parameters need at least 6 distinct rest orientations, got {distinct}")

    theta = np.zeros(6)
    f = float(_objective(_to_params(theta)[None], means)[0])
    trace = [f] if cfg.record_trace else None
    grad = _gradient(theta, means, cfg.gradient_step)
    trial = cfg.learning_rate
    converged = False
    it = 0
    while it < cfg.max_iterations:
        if f == 0.0:
            converged = True
            break
        step = trial
        while True:
            cand = theta - step * grad
            fc = float(_objective(_to_params(cand)[None], means)[0])
            if fc <= f:
                break
            step /= 2
            if step < 1e-30:
                break
        if fc > f:
            # no descent direction at this resolution: stationary
            converged = True
            break
        it += 1
        grad_c = _gradient(cand, means, cfg.gradient_step)
        s = cand - theta
        y = grad_c - grad
        sy = float(s @ y)
        trial = float(s @ s) / sy if sy > 0 else cfg.learning_rate
        decrease = f - fc
        theta, f, grad = cand, fc, grad_c
        if trace is not None:
            trace.append(f)
        if decrease < cfg.tolerance:
            converged = True
            break

    p = _to_params(theta)
    return SixParamFingerprint(*(float(v) for v in p), residual_norm=f,
                               converged=converged, iterations=it,
                               objective_trace=tuple(trace or ()))
