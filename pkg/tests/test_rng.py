import numpy as np
from hypothesis import given, strategies as st

from sensorprint.rng import derive_rng


@given(st.integers(0, 2**64 - 1), st.text(max_size=8), st.integers(-5, 5), st.floats(-1e3, 1e3))
def test_same_keys_same_stream(seed, s, i, f):
    a = derive_rng(seed, s, i, f).random(4)
    b = derive_rng(seed, s, i, f).random(4)
    assert np.array_equal(a, b)


def test_keys_separate_streams():
    base = derive_rng(7, "audio", "dev00001", 0).random(8)
    assert not np.array_equal(base, derive_rng(7, "audio", "dev00001", 1).random(8))
    assert not np.array_equal(base, derive_rng(8, "audio", "dev00001", 0).random(8))
    assert not np.array_equal(base, derive_rng(7, "audio", "dev00002", 0).random(8))


def test_float_keys_distinguish_nearby_values():
    assert derive_rng(0, 440.0).integers(1 << 62) != derive_rng(0, 440.0000001).integers(1 << 62)
