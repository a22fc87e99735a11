"""Probe tones and harmonic response extraction.

``r(f, j)`` is the amplitude of the ``j * f`` component of a recording,
obtained by projecting it onto sampled cosine and sine references:

    r = (2 / N) * sqrt((C . R)^2 + (S . R)^2)

With an integer number of cycles in the window a unit sine gives exactly 1.
Dividing by the played amplitude gives the feedback ratio.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from sensorprint.device import Recording

PROBE_FREQUENCIES = (220.0, 330.0, 440.0, 550.0, 660.0, 880.0, 1320.0)
THIRTEEN_FREQUENCIES = tuple(float(f) for f in range(100, 1301, 100))
STEALTH_BASE_FREQUENCIES = (460.0, 740.0, 1060.0)


@dataclass(frozen=True)
class FrequencyPlan:
    frequencies: tuple[float, ...] = PROBE_FREQUENCIES
    harmonics: tuple[int, ...] = (1, 2)
    sample_rate: float = 8000.0

    def __post_init__(self):
        f = self.frequencies
        if not f or len(set(f)) != len(f) or min(f) <= 0:
            raise ValueError("plan frequencies must be distinct and positive")
        if not self.harmonics or min(self.harmonics) < 1:
            raise ValueError("harmonic indices must be >= 1")
        if max(f) * max(self.harmonics) >= self.sample_rate / 2:
            raise ValueError(
                f"highest harmonic {max(f) * max(self.harmonics)} Hz is not below Nyquist")

    def keys(self) -> list[tuple[float, int]]:
        return [(f, j) for f in self.frequencies for j in self.harmonics]


DEFAULT_PLAN = FrequencyPlan()
THIRTEEN_PLAN = FrequencyPlan(THIRTEEN_FREQUENCIES)


@dataclass(frozen=True)
class QuadratureBasis:
    freq: float
    harmonic: int
    cos: np.ndarray
    sin: np.ndarray


@dataclass(frozen=True)
class AudioFingerprint:
    """Feedback ratios keyed by (probe frequency, harmonic index)."""

    values: Mapping[tuple[float, int], float]

    def __post_init__(self):
        for k, v in self.values.items():
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"response at {k} must be finite and non-negative, got {v}")

    @property
    def frequencies(self) -> list[float]:
        return sorted({f for f, _ in self.values})

    @property
    def harmonics(self) -> list[int]:
        return sorted({j for _, j in self.values})

    def harmonic(self, j: int) -> np.ndarray:
        """Responses of harmonic ``j`` in ascending frequency order."""
        return np.array([self.values[(f, j)] for f in self.frequencies])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.harmonic(j) for j in self.harmonics])


def synthesize_tone(freq: float, amplitude: float, duration: float,
                    sample_rate: float = 8000.0) -> Recording:
    if not 0 < freq < sample_rate / 2:
        raise ValueError(f"frequency {freq} Hz outside (0, {sample_rate / 2}) Hz")
    n = int(round(duration * sample_rate))
    return Recording(sample_rate, amplitude * np.sin(2 * np.pi * freq * np.arange(n) / sample_rate))


@functools.lru_cache(maxsize=256)
def quadrature_basis(freq: float, harmonic: int, n: int, sample_rate: float) -> QuadratureBasis:
    phase = 2 * np.pi * harmonic * freq * np.arange(n) / sample_rate
    cos, sin = np.cos(phase), np.sin(phase)
    cos.flags.writeable = sin.flags.writeable = False
    return QuadratureBasis(freq, harmonic, cos, sin)


def quadrature_response(rec: Recording, freq: float, harmonic: int = 1) -> float:
    n = len(rec.samples)
    if n == 0:
        raise ValueError("empty recording")
    target = harmonic * freq
    if not 0 < target < rec.sample_rate / 2:
        raise ValueError(f"{target} Hz is not below Nyquist ({rec.sample_rate / 2} Hz)")
    if n < rec.sample_rate / target:
        raise ValueError("window shorter than one cycle of the probed frequency")
    basis = quadrature_basis(freq, harmonic, n, rec.sample_rate)
    c = float(basis.cos @ rec.samples)
    s = float(basis.sin @ rec.samples)
    return 2.0 / n * math.hypot(c, s)


def sweep_fingerprint(measure: Callable[[float, float], Recording], plan: FrequencyPlan = DEFAULT_PLAN,
                      played_amplitude: float = 1.0) -> AudioFingerprint:
    """Play each plan frequency in turn and extract its harmonics.

    ``measure(freq, amplitude)`` must return the analysis window of the
    recorded playback.
    """
    if played_amplitude <= 0:
        raise ValueError("played amplitude must be positive")
    values = {}
    for f in plan.frequencies:
        rec = measure(f, played_amplitude)
        for j in plan.harmonics:
            values[(f, j)] = quadrature_response(rec, f, j) / played_amplitude
    return AudioFingerprint(values)


def check_stealth_bases(base_freqs: Sequence[float], harmonics: Sequence[int],
                        sample_rate: float, tol: float = 1e-9) -> None:
    fs = sorted(base_freqs)
    for i, a in enumerate(fs):
        for b in fs[i + 1:]:
            ratio = b / a
            if abs(ratio - round(ratio)) < tol:
                raise ValueError(f"{b} Hz is a harmonic of {a} Hz")
    targets = [j * f for f in fs for j in harmonics]
    if max(targets) >= sample_rate / 2:
        raise ValueError("a requested harmonic is not below Nyquist")
    if len({round(t, 6) for t in targets}) != len(targets):
        raise ValueError("harmonics of different base frequencies coincide")


def stealth_fingerprint(rec: Recording, base_freqs: Sequence[float] = STEALTH_BASE_FREQUENCIES,
                        harmonics: Sequence[int] = (2, 3),
                        played_amplitude: float = 1.0) -> AudioFingerprint:
    """Harmonic amplitudes of simultaneously played base tones, from one spectrum.

    Uses a rectangular-window real DFT of arbitrary length and reads the bin
    nearest each ``j * f``; magnitudes are scaled by 2/N like the quadrature
    response, then divided by the played amplitude.
    """
    check_stealth_bases(base_freqs, harmonics, rec.sample_rate)
    n = len(rec.samples)
    if n == 0:
        raise ValueError("empty recording")
    spectrum = np.abs(np.fft.rfft(rec.samples)) * 2.0 / n
    values = {}
    for f in base_freqs:
        for j in harmonics:
            k = int(round(j * f * n / rec.sample_rate))
            values[(float(f), j)] = float(spectrum[k]) / played_amplitude
    return AudioFingerprint(values)
