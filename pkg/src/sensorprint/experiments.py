"""Seeded experiment pipelines on synthetic populations.

Every experiment is split into a simulation step producing a
:class:`~sensorprint.dataset.Dataset` and an analysis step turning a dataset
into a result record::

    {"experiment", "seed", "config", "metrics": {...},
     "tables": {name: {"columns": [...], "rows": [[...], ...]}}}

Results contain only plain Python values, so they serialize canonically.
"""

from __future__ import annotations

import dataclasses
import math
from collections import defaultdict
from typing import Sequence

import numpy as np

from sensorprint.accel import G, GdConfig, detect_rest_windows, estimate_six_params
from sensorprint.audio import (DEFAULT_PLAN, THIRTEEN_PLAN, FrequencyPlan, stealth_fingerprint,
                               sweep_fingerprint)
from sensorprint.classify import (FingerprintDb, ScaledDistanceConfig, extract_features,
                                  kfold_accuracy, knn, l2_classify, mle_classify, mle_fit)
from sensorprint.config import ExperimentConfig
from sensorprint.dataset import AudioRecord, Dataset, SixParamRecord
from sensorprint.device import (DeviceProfile, LocationEffect, Orientation, sample_population,
                                simulate_audio_measurement, simulate_audio_playback,
                                simulate_rest_stream, simulate_submission_set)
from sensorprint.entropy import (GridSpec, enrolled_match_intervals, grid_entropy,
                                 intra_device_distances, msz_plateaus, origin_sensitivity,
                                 percentile_nearest_rank, recognition_counts, ua_only_identified)
from sensorprint.rng import derive_rng

AUDIO_EXPERIMENTS = ("audio-l2", "audio-mle", "stealth")
ACCEL_EXPERIMENTS = ("msz-sweep", "accel-entropy")


def plan_for(cfg: ExperimentConfig) -> FrequencyPlan:
    a = cfg.audio
    if a.plan == "seven":
        freqs = DEFAULT_PLAN.frequencies
    elif a.plan == "thirteen":
        freqs = THIRTEEN_PLAN.frequencies
    else:
        freqs = tuple(float(f) for f in a.plan)
    return FrequencyPlan(freqs, tuple(a.harmonics), a.sample_rate)


def make_locations(cfg: ExperimentConfig, freqs: Sequence[float]) -> list[LocationEffect]:
    """Placement effects sharing one per-frequency jitter profile.

    Jitter std at each knot is log-uniform over ``audio.noise_std_db``; each
    location adds its own Gaussian gain offset per knot.
    """
    a = cfg.audio
    knots = tuple(sorted(float(f) for f in freqs))
    lo, hi = a.noise_std_db
    if hi > 0:
        rng = derive_rng(cfg.seed, "jitter")
        std = np.exp(rng.uniform(math.log(max(lo, 1e-12)), math.log(hi), len(knots))) if lo > 0 \
            else rng.uniform(0.0, hi, len(knots))
    else:
        std = np.zeros(len(knots))
    var = tuple(float(v) for v in std ** 2)
    locations = []
    for loc in range(a.locations):
        gains = derive_rng(cfg.seed, "location", loc).normal(0.0, a.location_gain_db, len(knots)) \
            if a.location_gain_db > 0 else np.zeros(len(knots))
        locations.append(LocationEffect(knots, tuple(float(g) for g in gains), var))
    return locations


def _replicated(cfg: ExperimentConfig) -> bool:
    return cfg.experiment == "msz-sweep" and cfg.accel.replicates > 1


def replicate_seed(cfg: ExperimentConfig, replicate: int) -> int:
    if not _replicated(cfg):
        return cfg.seed
    return int(derive_rng(cfg.seed, "replicate", replicate).integers(0, 2 ** 63))


def population_for(cfg: ExperimentConfig, replicate: int = 0) -> list[DeviceProfile]:
    """Devices of one population; replicates get their own seed and id prefix."""
    pop = sample_population(cfg.devices, cfg.population.ranges(), replicate_seed(cfg, replicate))
    if not _replicated(cfg):
        return pop
    return [dataclasses.replace(d, device_id=f"r{replicate:03d}-{d.device_id}") for d in pop]


# --------------------------------------------------------------------------
# simulation


def simulate_audio_fingerprints(cfg: ExperimentConfig,
                                population: Sequence[DeviceProfile]) -> list[AudioRecord]:
    """Sweep (and for the stealth experiment, simultaneous-tone) fingerprints.

    Each (location, run) pair is an independent measurement session.
    """
    a = cfg.audio
    plan = plan_for(cfg)
    stealth = cfg.experiment == "stealth"
    locations = make_locations(cfg, sorted(set(plan.frequencies) | set(a.stealth_bases)))
    if stealth:
        locations = locations[:1]
    records = []
    for dev in population:
        for l, loc in enumerate(locations):
            for k in range(a.runs):
                session = l * 1000 + k

                def measure(f, amp, dev=dev, loc=loc, session=session):
                    rec = simulate_audio_measurement(dev, loc, f, amp, a.playback_seconds,
                                                     a.sample_rate, cfg.seed, session)
                    return rec.middle(a.window_seconds)

                fp = sweep_fingerprint(measure, plan, a.amplitude)
                records.append(AudioRecord(dev.device_id, l, k, "sweep", fp))
                if stealth:
                    rec = simulate_audio_playback(dev, loc, a.stealth_bases, a.amplitude,
                                                  a.playback_seconds, a.sample_rate, cfg.seed,
                                                  session).middle(a.window_seconds)
                    fp = stealth_fingerprint(rec, a.stealth_bases, (2, 3), a.amplitude)
                    records.append(AudioRecord(dev.device_id, l, k, "stealth", fp))
    return records


def simulate_submissions(cfg: ExperimentConfig, population: Sequence[DeviceProfile],
                         replicate: int = 0):
    c = cfg.accel
    subs = simulate_submission_set(population, c.submissions, replicate_seed(cfg, replicate),
                                   c.duration, c.rate, c.tilt_sigma, c.offset_drift, c.detection)
    return [dataclasses.replace(s, group=replicate) for s in subs]


def random_orientations(rng: np.random.Generator, count: int,
                        min_separation_deg: float = 10.0) -> list[Orientation]:
    """Random attitudes whose gravity directions are pairwise separated."""
    cos_max = math.cos(math.radians(min_separation_deg))
    chosen: list[Orientation] = []
    dirs: list[np.ndarray] = []
    while len(chosen) < count:
        o = Orientation.random(rng)
        d = o.gravity() / G
        if all(float(d @ e) <= cos_max for e in dirs):
            chosen.append(o)
            dirs.append(d)
    return chosen


def rest_means(device: DeviceProfile, orientations: Sequence[Orientation], cfg: ExperimentConfig,
               session: int) -> np.ndarray:
    """Mean reading of the detected rest window in each orientation."""
    c = cfg.accel
    means = []
    for i, o in enumerate(orientations):
        stream = simulate_rest_stream(device, o, c.duration, c.rate, cfg.seed,
                                      run=session * 1000 + i)
        windows = detect_rest_windows(stream, c.detection.magnitude_tol, c.detection.variance_tol,
                                      c.detection.min_samples)
        if not windows:
            raise ValueError(f"no rest window detected for {device.device_id} orientation {i}")
        best = max(windows, key=lambda w: w.count)
        means.append(best.mean_vector)
    return np.array(means)


def simulate_six_param(cfg: ExperimentConfig,
                       population: Sequence[DeviceProfile]) -> list[SixParamRecord]:
    s = cfg.accel.six
    gd = GdConfig(learning_rate=s.learning_rate, max_iterations=s.max_iterations,
                  tolerance=s.tolerance)
    records = []
    for dev in population:
        for k in range(s.sets):
            rng = derive_rng(cfg.seed, "orientations", dev.device_id, k)
            means = rest_means(dev, random_orientations(rng, s.orientations), cfg, k)
            records.append(SixParamRecord(dev.device_id, k, estimate_six_params(means, gd)))
    return records


def replicate_of(device_id: str) -> int:
    """Replicate index encoded in a device id (``rNNN-`` prefix), else 0."""
    head, sep, _ = device_id.partition("-")
    return int(head[1:]) if sep and head[:1] == "r" and head[1:].isdigit() else 0


def fingerprint_dataset(cfg: ExperimentConfig, devices: Sequence[DeviceProfile]) -> Dataset:
    """Every fingerprint the configured experiment needs for ``devices``."""
    ds = Dataset(devices=list(devices))
    if cfg.experiment in AUDIO_EXPERIMENTS:
        ds.audio = simulate_audio_fingerprints(cfg, ds.devices)
    elif cfg.experiment == "six-param":
        ds.six_param = simulate_six_param(cfg, ds.devices)
    else:
        groups = defaultdict(list)
        for d in ds.devices:
            groups[replicate_of(d.device_id)].append(d)
        for rep in sorted(groups):
            ds.submissions.extend(simulate_submissions(cfg, groups[rep], rep))
    ds.check_integrity()
    return ds


def simulate_population(cfg: ExperimentConfig) -> list[DeviceProfile]:
    reps = cfg.accel.replicates if _replicated(cfg) else 1
    return [d for rep in range(reps) for d in population_for(cfg, rep)]


def simulate_dataset(cfg: ExperimentConfig) -> Dataset:
    return fingerprint_dataset(cfg, simulate_population(cfg))


# --------------------------------------------------------------------------
# analysis


def _table(columns: Sequence[str], rows) -> dict:
    return {"columns": list(columns), "rows": [list(r) for r in rows]}


def _by_key(records: Sequence[AudioRecord], method: str) -> dict[tuple[str, int, int], AudioRecord]:
    return {(r.device_id, r.location, r.run): r for r in records if r.method == method}


def _dims(records: dict) -> tuple[list[str], list[int], list[int]]:
    devices = sorted({k[0] for k in records})
    locations = sorted({k[1] for k in records})
    runs = sorted({k[2] for k in records})
    return devices, locations, runs


def analyze_audio_l2(cfg: ExperimentConfig, ds: Dataset) -> dict:
    """Enroll run 0 at the training location; probe every run elsewhere."""
    recs = _by_key(ds.audio, "sweep")
    devices, locations, runs = _dims(recs)
    train = cfg.audio.train_location
    variants = list(cfg.audio.variants)
    rows, correct_all, total_all = [], 0, 0
    for loc in locations:
        if loc == train:
            continue
        row = [loc]
        for v in variants:
            db = FingerprintDb.single({d: extract_features(recs[d, train, runs[0]].fingerprint, v)
                                       for d in devices})
            hits = sum(l2_classify(db, extract_features(recs[d, loc, k].fingerprint, v)) == d
                       for d in devices for k in runs)
            total = len(devices) * len(runs)
            row.append(hits / total)
            if v == "B":
                correct_all += hits
                total_all += total
        rows.append(row)
    metrics = {"accuracy_b": correct_all / total_all if total_all else float("nan")}
    for i, v in enumerate(variants):
        metrics[f"accuracy_{v}"] = float(np.mean([r[i + 1] for r in rows])) if rows else float("nan")
    return {"metrics": metrics, "tables": {"l2": _table(["location", *variants], rows)}}


def analyze_audio_mle(cfg: ExperimentConfig, ds: Dataset) -> dict:
    """Train on all but the last run, test the last run at every location.

    The ``all`` protocol trains on every location; ``omit`` (when configured)
    leaves ``audio.omit_location`` out of training. L2 on the per-device
    training mean of the second harmonic is reported alongside.
    """
    recs = _by_key(ds.audio, "sweep")
    devices, locations, runs = _dims(recs)
    if len(runs) < 3:
        raise ValueError("MLE needs at least two training runs plus one test run")
    test_run, train_runs = runs[-1], runs[:-1]
    protocols = [("all", locations)]
    if cfg.audio.omit_location is not None:
        protocols.append(("omit", [l for l in locations if l != cfg.audio.omit_location]))
    rows = []
    metrics: dict[str, float] = {}
    for name, train_locs in protocols:
        models, l2dbs = {}, None
        for v in ("A", "B"):
            train = {d: [extract_features(recs[d, l, k].fingerprint, v)
                         for l in train_locs for k in train_runs] for d in devices}
            models[v] = mle_fit(train)
            if v == "B":
                l2dbs = FingerprintDb.single({d: np.mean(t, axis=0) for d, t in train.items()})
        hits = defaultdict(int)
        for loc in locations:
            row = [name, loc]
            for label, fn in (("main", lambda x: mle_classify(models["A"], extract_features(x, "A"))),
                              ("second_harmonic",
                               lambda x: mle_classify(models["B"], extract_features(x, "B"))),
                              ("l2_second_harmonic",
                               lambda x: l2_classify(l2dbs, extract_features(x, "B")))):
                c = sum(fn(recs[d, loc, test_run].fingerprint) == d for d in devices)
                hits[label] += c
                row.append(c / len(devices))
            rows.append(row)
        n = len(devices) * len(locations)
        for label, c in hits.items():
            metrics[f"{name}_{label}"] = c / n
    metrics["mle_accuracy"] = metrics["all_second_harmonic"]
    metrics["l2_accuracy"] = metrics["all_l2_second_harmonic"]
    columns = ["protocol", "location", "main", "second_harmonic", "l2_second_harmonic"]
    return {"metrics": metrics, "tables": {"mle": _table(columns, rows)}}


def analyze_stealth(cfg: ExperimentConfig, ds: Dataset) -> dict:
    a = cfg.audio
    rows, metrics = [], {}
    for method in ("sweep", "stealth"):
        labeled = [(r.fingerprint.as_vector(), r.device_id)
                   for r in sorted(ds.audio, key=lambda r: (r.device_id, r.location, r.run))
                   if r.method == method]
        res = kfold_accuracy(labeled, a.folds, knn(a.knn_k), cfg.seed)
        metrics[f"{method}_accuracy"] = res.accuracy
        rows.append([method, res.correct, res.total, res.accuracy])
    return {"metrics": metrics,
            "tables": {"knn": _table(["method", "correct", "total", "accuracy"], rows)}}


def analyze_six_param(cfg: ExperimentConfig, ds: Dataset) -> dict:
    """k-NN cross-validation on (O, g*S); scaling puts both terms in m/s^2."""
    s = cfg.accel.six
    recs = sorted(ds.six_param, key=lambda r: (r.device_id, r.set_index))
    labeled = [(np.concatenate([r.fingerprint.offsets, G * r.fingerprint.sensitivities]),
                r.device_id) for r in recs]
    res = kfold_accuracy(labeled, s.folds, knn(s.knn_k), cfg.seed)
    converged = sum(r.fingerprint.converged for r in recs)
    metrics = {"knn_accuracy": res.accuracy, "converged": converged / len(recs),
               "max_residual_norm": max(r.fingerprint.residual_norm for r in recs)}
    rows = [[r.device_id, r.set_index, *(float(x) for x in r.fingerprint.as_vector()),
             r.fingerprint.iterations] for r in recs]
    columns = ["device_id", "set", "o_x", "o_y", "o_z", "s_x", "s_y", "s_z", "iterations"]
    return {"metrics": metrics, "tables": {"six_param": _table(columns, rows),
                                           "knn": _table(["correct", "total", "accuracy"],
                                                         [[res.correct, res.total, res.accuracy]])}}


def analyze_entropy(cfg: ExperimentConfig, ds: Dataset) -> dict:
    c = cfg.accel
    subs = ds.submissions
    d_o, d_s = intra_device_distances(subs)
    points = [s.point for s in subs]
    grid = GridSpec(c.grid.width_o, c.grid.width_s)
    report = grid_entropy(points, grid)
    h_min, h_max = origin_sensitivity(points, (grid.width_o, grid.width_s), c.grid.origin_offsets)
    dist = ScaledDistanceConfig(c.m_sz)
    rows = []
    rates = {}
    for name, pct, fuse in (("unfused", None, False), ("filtered", c.filter_percentile, False),
                            ("fused", None, True), ("fused_filtered", c.filter_percentile, True)):
        r = recognition_counts(subs, dist, pct, fuse)
        rates[name] = r.rate
        rows.append([name, r.correct, r.total, r.filtered_out, r.rate])
    metrics = {
        "p95_delta_o": percentile_nearest_rank(d_o, 95), "p95_delta_s": percentile_nearest_rank(d_s, 95),
        "entropy_bits": report.entropy, "occupied_cells": report.occupied_cells,
        "entropy_origin_min": h_min, "entropy_origin_max": h_max,
        "ua_only_identified": ua_only_identified(subs),
        **{f"rate_{k}": v for k, v in rates.items()},
    }
    columns = ["protocol", "correct", "total", "filtered_out", "rate"]
    return {"metrics": metrics, "tables": {"recognition": _table(columns, rows)}}


def analyze_sweep(cfg: ExperimentConfig, ds: Dataset) -> dict:
    """Enrolled-match rate per M_Sz value, pooled over replicate populations.

    Exact per-probe M intervals give the maximal plateau(s) independently of
    the sampled grid.
    """
    groups = defaultdict(list)
    for s in ds.submissions:
        groups[s.group].append(s)
    intervals = [iv for g in sorted(groups) for iv in enrolled_match_intervals(groups[g])]
    total = len(intervals)
    rows = []
    for m in cfg.accel.m_sz_values:
        correct = sum(lo < m < hi for lo, hi in intervals)
        rows.append([float(m), correct / total, correct, total])
    best, ranges = msz_plateaus(intervals)
    metrics = {"best_rate": best / total, "plateau_count": len(ranges),
               "plateau_lo": ranges[0][0], "plateau_hi": ranges[-1][1],
               "probes": total, "replicates": len(groups)}
    return {"metrics": metrics,
            "tables": {"sweep": _table(["m_sz", "rate", "correct", "total"], rows),
                       "plateaus": _table(["lo", "hi", "rate"],
                                          [[lo, hi, best / total] for lo, hi in ranges])}}


ANALYSES = {"audio-l2": analyze_audio_l2, "audio-mle": analyze_audio_mle,
            "stealth": analyze_stealth, "six-param": analyze_six_param,
            "accel-entropy": analyze_entropy, "msz-sweep": analyze_sweep}

# first table is the one emitted as CSV
MAIN_TABLE = {"audio-l2": "l2", "audio-mle": "mle", "stealth": "knn", "six-param": "knn",
              "accel-entropy": "recognition", "msz-sweep": "sweep"}


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def analyze(cfg: ExperimentConfig, ds: Dataset) -> dict:
    ds.check_integrity()
    out = ANALYSES[cfg.experiment](cfg, ds)
    return _plain({"experiment": cfg.experiment, "seed": cfg.seed, "config": cfg.to_dict(),
                   "metrics": out["metrics"], "tables": out["tables"]})


def run_experiment(cfg: ExperimentConfig) -> dict:
    cfg.validate()
    return analyze(cfg, simulate_dataset(cfg))
