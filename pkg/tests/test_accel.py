import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sensorprint.accel import (FACE_DOWN, FACE_UP, OTHER, G, GdConfig, RestWindow,
                               UnderdeterminedError, classify_orientation, count_distinct_orientations,
                               detect_rest_windows, estimate_six_params, estimate_z_axis,
                               objective_gradient, pooled_mean, six_param_objective,
                               six_param_residual, z_axis_from_windows)
from sensorprint.device import (AccelCalibration, AccelStream, DeviceProfile, NoiseSpec,
                                Orientation, simulate_rest_stream)
from sensorprint.experiments import random_orientations


def _const(n, v):
    return AccelStream(np.arange(n) / 50.0, np.tile(np.asarray(v, float), (n, 1)))


def _window(mean):
    return RestWindow(0, 10, tuple(mean), 10)


def _ideal(params):
    """(o_x, o_y, o_z, s_x, s_y, s_z) for the identity calibration."""
    return np.array([0, 0, 0, 1, 1, 1], float) if params is None else np.asarray(params, float)


# --- rest detection --------------------------------------------------------

def test_constant_stream_one_window():
    w = detect_rest_windows(_const(100, (0, 0, 9.81)), min_samples=10)
    assert len(w) == 1 and (w[0].start, w[0].end, w[0].count) == (0, 100, 100)
    assert w[0].mean == pytest.approx((0, 0, 9.81))


def test_burst_splits_windows():
    rng = np.random.default_rng(0)
    burst = rng.normal(0, 5, (20, 3)) + (0, 0, 9.81)
    xyz = np.vstack([np.tile((0, 0, 9.81), (40, 1)), burst, np.tile((0, 0, 9.81), (40, 1))])
    w = detect_rest_windows(AccelStream(np.arange(100) / 50.0, xyz), min_samples=10)
    assert len(w) == 2
    assert w[0].end <= 40 and w[1].start >= 60
    assert w[0].end <= w[1].start


def test_off_gravity_magnitude_no_windows():
    assert detect_rest_windows(_const(100, (0, 0, 12.0)), magnitude_tol=1.0, min_samples=10) == []
    assert detect_rest_windows(AccelStream(np.zeros(0), np.zeros((0, 3)))) == []


def test_windows_accept_sample_iterables():
    stream = _const(60, (0, 0, G))
    assert detect_rest_windows(stream.samples(), min_samples=10) == detect_rest_windows(stream, min_samples=10)


@given(st.integers(0, 1000))
def test_windows_satisfy_bounds(seed):
    rng = np.random.default_rng(seed)
    xyz = np.tile((0, 0, G), (300, 1)) + rng.normal(0, 0.08, (300, 3))
    xyz[rng.integers(0, 300, 5)] += rng.normal(0, 4, (5, 3))
    wins = detect_rest_windows(AccelStream(np.arange(300) / 50.0, xyz), 1.0, 0.01, 20)
    for a, b in zip(wins, wins[1:]):
        assert a.end <= b.start
    for w in wins:
        seg = xyz[w.start:w.end]
        assert w.count >= 20
        assert np.all(np.abs(np.linalg.norm(seg, axis=1) - G) <= 1.0)
        assert np.all(seg.var(axis=0) <= 0.01 + 1e-12)


# --- orientation labels ----------------------------------------------------

def test_classify_orientation():
    assert classify_orientation(_window((0, 0, 9.8))) == FACE_UP
    assert classify_orientation(_window((0, 0, -9.8))) == FACE_DOWN
    assert classify_orientation(_window((6.93, 0, 6.93))) == OTHER
    assert classify_orientation(_window((0, 0, 0))) == OTHER


def test_pooled_mean_weights_by_count():
    a = RestWindow(0, 10, (0.0, 0.0, 9.0), 10)
    b = RestWindow(20, 50, (0.0, 0.0, 10.0), 30)
    assert pooled_mean([a, b])[2] == pytest.approx(9.75)
    with pytest.raises(ValueError):
        pooled_mean([])


# --- Z axis ----------------------------------------------------------------

def test_estimate_z_axis_examples():
    fp = estimate_z_axis(9.80665, -9.80665)
    assert (fp.s_z, fp.o_z) == (1.0, 0.0)
    fp = estimate_z_axis(10.10, -9.51)
    assert fp.s_z == pytest.approx(19.61 / (2 * 9.80665), abs=1e-12)
    assert fp.s_z == pytest.approx(0.999832, abs=1e-6)
    assert fp.o_z == pytest.approx(0.295, abs=1e-12)
    with pytest.raises(ValueError):
        estimate_z_axis(-9.8, 9.8)


@given(st.floats(0.99, 1.04), st.floats(-0.5, 0.5))
def test_z_axis_round_trip(s_z, o_z):
    dev = DeviceProfile("d", accel=AccelCalibration(s_z=s_z, o_z=o_z))
    up = simulate_rest_stream(dev, Orientation.face_up(), 1.0, 50.0)
    down = simulate_rest_stream(dev, Orientation.face_down(), 1.0, 50.0)
    wins = detect_rest_windows(AccelStream.concat([up, down]), min_samples=10)
    fp = z_axis_from_windows(wins)
    assert fp.s_z == pytest.approx(s_z, abs=1e-9)
    assert fp.o_z == pytest.approx(o_z, abs=1e-9)


def test_z_axis_needs_both_faces():
    with pytest.raises(ValueError):
        z_axis_from_windows([_window((0, 0, 9.8))])


def test_z_error_shrinks_with_window_length():
    errs = {}
    for n in (100, 10_000):
        e = []
        for i in range(50):
            dev = DeviceProfile(f"d{i}", accel=AccelCalibration(s_z=1.01, o_z=0.1),
                                noise=NoiseSpec(accel_sigma=0.1))
            up = simulate_rest_stream(dev, Orientation.face_up(), n / 50.0, 50.0, seed=i, run=0)
            down = simulate_rest_stream(dev, Orientation.face_down(), n / 50.0, 50.0, seed=i, run=1)
            fp = estimate_z_axis(up.xyz[:, 2].mean(), down.xyz[:, 2].mean())
            e.append(abs(fp.s_z - 1.01) + abs(fp.o_z - 0.1))
        errs[n] = np.median(e)
    assert errs[10_000] < errs[100]


# --- six parameters --------------------------------------------------------

def test_residual_examples():
    ident = _ideal(None)
    assert six_param_residual(ident, (0, 0, G)) == 0.0
    p = np.array([0, 0, 0.3, 1, 1, 1.02])
    assert six_param_residual(p, (0, 0, -9.80665 * 1.02 + 0.3)) == pytest.approx(0.0, abs=1e-9)
    assert six_param_residual(ident, (0, 0, 0)) == pytest.approx(-96.170384, abs=1e-6)
    with pytest.raises(ValueError):
        six_param_residual([0, 0, 0, 1, 0, 1], (0, 0, G))


def _means(cal, orientations):
    return np.array([cal.apply(o.gravity()) for o in orientations])


@given(st.integers(0, 2**31))
def test_residual_zero_at_truth(seed):
    rng = np.random.default_rng(seed)
    cal = AccelCalibration(*rng.uniform(0.99, 1.04, 3), *rng.uniform(-0.5, 0.5, 3))
    truth = np.concatenate([cal.offset, cal.sensitivity])
    for m in _means(cal, random_orientations(rng, 6)):
        assert six_param_residual(truth, m) == pytest.approx(0.0, abs=1e-9)


@given(st.integers(0, 2**31))
def test_gradient_matches_finer_step(seed):
    rng = np.random.default_rng(seed)
    cal = AccelCalibration(*rng.uniform(0.99, 1.04, 3), *rng.uniform(-0.5, 0.5, 3))
    means = _means(cal, random_orientations(rng, 8))
    p = np.concatenate([rng.uniform(-0.5, 0.5, 3), rng.uniform(0.97, 1.06, 3)])
    g1 = objective_gradient(p, means, 1e-6)
    g2 = objective_gradient(p, means, 1e-7)
    scale = np.abs(g2).max()
    assert np.allclose(g1, g2, rtol=1e-4, atol=1e-4 * scale)


def test_six_param_recovery_example():
    cal = AccelCalibration(1.01, 0.99, 1.03, 0.1, -0.2, 0.3)
    means = _means(cal, random_orientations(np.random.default_rng(1), 8))
    fp = estimate_six_params(means, GdConfig(record_trace=True))
    assert fp.converged
    assert np.allclose(fp.as_vector(), [0.1, -0.2, 0.3, 1.01, 0.99, 1.03], atol=1e-3)
    trace = np.array(fp.objective_trace)
    assert np.all(np.diff(trace) <= 0)
    assert fp.residual_norm == pytest.approx(six_param_objective(fp.as_vector(), means))


def test_six_param_ideal_returns_initial_point():
    axes = [Orientation.about_axis(ax, ang) for ax, ang in
            [((1, 0, 0), 0.0), ((1, 0, 0), math.pi), ((1, 0, 0), math.pi / 2),
             ((1, 0, 0), -math.pi / 2), ((0, 1, 0), math.pi / 2), ((0, 1, 0), -math.pi / 2)]]
    means = np.round(_means(AccelCalibration(), axes), 12)
    fp = estimate_six_params(means)
    assert np.allclose(fp.as_vector(), [0, 0, 0, 1, 1, 1], atol=1e-12)
    assert fp.residual_norm <= 1e-12


def test_six_param_underdetermined():
    means = _means(AccelCalibration(), random_orientations(np.random.default_rng(0), 5))
    with pytest.raises(UnderdeterminedError):
        estimate_six_params(means)
    near = np.vstack([means, means[0] * (1 + 1e-6)])  # a sixth, but not distinct
    assert count_distinct_orientations(near) == 5
    with pytest.raises(UnderdeterminedError):
        estimate_six_params(near)


def test_six_param_flags_non_convergence():
    cal = AccelCalibration(1.01, 0.99, 1.03, 0.1, -0.2, 0.3)
    means = _means(cal, random_orientations(np.random.default_rng(2), 8))
    fp = estimate_six_params(means, GdConfig(max_iterations=2))
    assert not fp.converged and fp.iterations == 2


def test_gd_config_validation():
    with pytest.raises(ValueError):
        GdConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        GdConfig(max_iterations=0)
