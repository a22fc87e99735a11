"""Device matching: L2 distance, Gaussian maximum likelihood, scaled Z-axis
distance and k-nearest-neighbours with k-fold cross-validation."""

from __future__ import annotations

import enum
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from sensorprint.accel import ZAxisFingerprint
from sensorprint.rng import derive_rng

VARIANCE_FLOOR = 1e-12


class DistanceVariant(str, enum.Enum):
    A = "A"  # first harmonic
    B = "B"  # second harmonic
    B_PRIME = "B'"  # B + first differences
    B_DOUBLE_PRIME = "B''"  # B + first and second differences


def extract_features(fp, variant: DistanceVariant | str) -> np.ndarray:
    """Feature vector of an :class:`~sensorprint.audio.AudioFingerprint`.

    Differences are taken across the ordered frequency axis.
    """
    variant = DistanceVariant(variant)
    harmonic = 1 if variant is DistanceVariant.A else 2
    if harmonic not in fp.harmonics:
        raise KeyError(f"fingerprint has no harmonic {harmonic} values")
    base = fp.harmonic(harmonic)
    if variant in (DistanceVariant.A, DistanceVariant.B):
        return base
    parts = [base, np.diff(base)]
    if variant is DistanceVariant.B_DOUBLE_PRIME:
        parts.append(np.diff(base, n=2))
    return np.concatenate(parts)


# --------------------------------------------------------------------------
# L2


@dataclass
class FingerprintDb:
    """Enrolled vectors per device; every vector has the same length."""

    vectors: dict[str, list[np.ndarray]]

    def __post_init__(self):
        if not self.vectors:
            raise ValueError("fingerprint database needs at least one device")
        self.vectors = {k: [np.asarray(v, float) for v in vs] for k, vs in self.vectors.items()}
        lengths = {len(v) for vs in self.vectors.values() for v in vs}
        if len(lengths) != 1:
            raise ValueError(f"enrolled vectors have mixed lengths {sorted(lengths)}")
        self.dim = lengths.pop()

    @classmethod
    def single(cls, mapping: Mapping[str, Sequence[float]]) -> "FingerprintDb":
        return cls({k: [np.asarray(v, float)] for k, v in mapping.items()})


def l2_classify(db: FingerprintDb, probe) -> str:
    """Device with the nearest enrolled vector; ties go to the lowest id."""
    probe = np.asarray(probe, float)
    if probe.shape != (db.dim,):
        raise ValueError(f"probe length {probe.size} does not match database dimension {db.dim}")
    best, best_d = None, np.inf
    for dev in sorted(db.vectors):
        d = min(float(np.sum((v - probe) ** 2)) for v in db.vectors[dev])
        if d < best_d:
            best, best_d = dev, d
    return best


# --------------------------------------------------------------------------
# maximum likelihood


@dataclass
class MleModel:
    devices: list[str]
    mean: np.ndarray  # (devices, features)
    var: np.ndarray

    def scores(self, probe) -> np.ndarray:
        probe = np.asarray(probe, float)
        if probe.shape != (self.mean.shape[1],):
            raise ValueError(
                f"probe length {probe.size} does not match model dimension {self.mean.shape[1]}")
        return -(((probe - self.mean) ** 2) / self.var).sum(axis=1)


def mle_fit(training: Mapping[str, Sequence[Sequence[float]]],
            variance_floor: float = VARIANCE_FLOOR) -> MleModel:
    devices = sorted(training)
    means, variances = [], []
    for dev in devices:
        x = np.asarray(training[dev], float)
        if x.ndim != 2 or len(x) < 2:
            raise ValueError(f"device {dev!r} needs at least 2 training vectors")
        means.append(x.mean(axis=0))
        variances.append(np.maximum(x.var(axis=0), variance_floor))
    mean = np.array(means)
    if mean.ndim != 2:
        raise ValueError("training vectors have inconsistent lengths")
    return MleModel(devices, mean, np.array(variances))


def mle_classify(model: MleModel, probe) -> str:
    # argmax returns the first maximum; devices are sorted, so ties -> lowest id
    return model.devices[int(np.argmax(model.scores(probe)))]


# --------------------------------------------------------------------------
# accelerometer


@dataclass(frozen=True)
class ScaledDistanceConfig:
    m_sz: float = 300.0

    def __post_init__(self):
        if self.m_sz < 0:
            raise ValueError("m_sz must be non-negative")


def scaled_accel_distance(a: ZAxisFingerprint, b: ZAxisFingerprint,
                          cfg: ScaledDistanceConfig = ScaledDistanceConfig()) -> float:
    return (b.o_z - a.o_z) ** 2 + cfg.m_sz * (b.s_z - a.s_z) ** 2


# --------------------------------------------------------------------------
# k-NN


def knn_classify(labeled: Sequence[tuple[Sequence[float], Hashable]], probe, k: int = 1):
    if not labeled:
        raise ValueError("knn needs a non-empty training set")
    if not 1 <= k <= len(labeled):
        raise ValueError(f"k={k} must be between 1 and {len(labeled)}")
    x = np.array([np.asarray(v, float) for v, _ in labeled])
    d = ((x - np.asarray(probe, float)) ** 2).sum(axis=1)
    nearest = np.argsort(d, kind="stable")[:k]
    votes = Counter(labeled[i][1] for i in nearest)
    top = max(votes.values())
    return min(lbl for lbl, n in votes.items() if n == top)


Classifier = Callable[[Sequence[tuple[np.ndarray, Hashable]], np.ndarray], Hashable]


def knn(k: int = 1) -> Classifier:
    def classify(train, probe):
        return knn_classify(train, probe, min(k, len(train)))
    classify.__name__ = f"knn{k}"
    return classify


@dataclass(frozen=True)
class KFoldResult:
    accuracy: float
    correct: int
    total: int
    folds: int
    small_class_warning: bool

    def __float__(self):
        return self.accuracy


def stratified_folds(labels: Sequence[Hashable], folds: int, seed: int) -> list[int]:
    """Fold index per item: each class is shuffled and dealt round-robin."""
    rng = derive_rng(seed, "kfold", folds, len(labels))
    by_label = defaultdict(list)
    for i, lbl in enumerate(labels):
        by_label[lbl].append(i)
    assignment = [0] * len(labels)
    slot = 0
    for lbl in sorted(by_label, key=repr):
        members = by_label[lbl]
        for j in rng.permutation(len(members)):
            assignment[members[j]] = slot % folds
            slot += 1
    return assignment


def kfold_accuracy(labeled: Sequence[tuple[Sequence[float], Hashable]], folds: int = 10,
                   classifier: Classifier | None = None, seed: int = 0) -> KFoldResult:
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if len(labeled) < folds:
        raise ValueError(f"{len(labeled)} samples cannot fill {folds} folds")
    classifier = classifier or knn(1)
    labels = [lbl for _, lbl in labeled]
    small = min(Counter(labels).values()) < folds
    if small:
        warnings.warn("some classes have fewer members than folds", RuntimeWarning, stacklevel=2)
    assignment = stratified_folds(labels, folds, seed)
    correct = 0
    for fold in range(folds):
        train = [(np.asarray(v, float), lbl) for (v, lbl), a in zip(labeled, assignment) if a != fold]
        test = [(np.asarray(v, float), lbl) for (v, lbl), a in zip(labeled, assignment) if a == fold]
        correct += sum(classifier(train, v) == lbl for v, lbl in test)
    return KFoldResult(correct / len(labeled), correct, len(labeled), folds, small)
