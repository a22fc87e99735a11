import pytest

from sensorprint.config import ExperimentConfig
from sensorprint.experiments import (MAIN_TABLE, analyze, make_locations, population_for,
                                     replicate_of, run_experiment, simulate_dataset)
from sensorprint.report import csv_report


def _cfg(**kw):
    return ExperimentConfig.from_dict(kw)


def test_audio_mle_near_noiseless_is_perfect():
    cfg = _cfg(experiment="audio-mle", devices=8, seed=4,
               audio={"runs": 3, "noise_std_db": [1e-6, 1e-6], "location_gain_db": 0.0})
    m = run_experiment(cfg)["metrics"]
    assert m["mle_accuracy"] == 1.0


def test_audio_l2_table_shape():
    cfg = _cfg(experiment="audio-l2", devices=5, audio={"locations": 3})
    res = run_experiment(cfg)
    table = res["tables"]["l2"]
    assert table["columns"] == ["location", "A", "B", "B'", "B''"]
    assert [row[0] for row in table["rows"]] == [1, 2]


def test_six_param_noiseless_is_perfect():
    cfg = _cfg(experiment="six-param", devices=6, accel={"six": {"sets": 3, "folds": 3}})
    m = run_experiment(cfg)["metrics"]
    assert m["knn_accuracy"] == 1.0 and m["converged"] == 1.0


def test_sweep_csv_one_row_per_value():
    values = [1.0, 30.0, 300.0, 3000.0]
    cfg = _cfg(experiment="msz-sweep", devices=10,
               population={"noise": {"accel_sigma": 0.05}},
               accel={"m_sz_values": values, "replicates": 2})
    res = run_experiment(cfg)
    rows = csv_report(res).splitlines()
    assert rows[0] == "m_sz,rate,correct,total"
    assert [float(r.split(",")[0]) for r in rows[1:]] == values
    assert res["metrics"]["replicates"] == 2


def test_replicates_are_independent_populations():
    cfg = _cfg(experiment="msz-sweep", devices=3, accel={"replicates": 2})
    a, b = population_for(cfg, 0), population_for(cfg, 1)
    assert [replicate_of(d.device_id) for d in a + b] == [0] * 3 + [1] * 3
    assert a[0].accel != b[0].accel
    assert replicate_of("device-7") == 0


def test_locations_share_jitter_std_but_differ():
    cfg = _cfg(experiment="audio-l2", audio={"noise_std_db": [0.5, 0.5]})
    locs = make_locations(cfg, [220.0, 440.0])
    assert len(locs) == 3 and locs[0] != locs[1]


@pytest.mark.parametrize("experiment", sorted(MAIN_TABLE))
def test_analysis_deterministic(experiment):
    small = {"devices": 4, "audio": {"runs": 3, "locations": 2, "folds": 3}, "accel": {"six": {"sets": 3, "folds": 3}}}
    cfg = _cfg(experiment=experiment, seed=21, **small)
    ds = simulate_dataset(cfg)
    a, b = analyze(cfg, ds), analyze(cfg, simulate_dataset(cfg))
    assert a == b
    assert MAIN_TABLE[experiment] in a["tables"]
    assert csv_report(a) == csv_report(b)
