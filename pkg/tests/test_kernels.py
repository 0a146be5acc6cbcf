import numpy as np
import pytest

from phn import kernels
from phn.kernels import pure


def test_backend_identifies_itself():
    assert kernels.BACKEND in ("compiled", "pure")


def test_trailing_mean_full_and_warmup_windows():
    out = kernels.trailing_mean([10.0, 20.0, 30.0], window=2)
    assert out.tolist() == [10.0, 15.0, 25.0]


def test_trailing_mean_constant_series_is_fixed_point():
    out = kernels.trailing_mean([30.0] * 100, window=42)
    assert all(v == 30.0 for v in out)


def test_trailing_mean_rejects_bad_window():
    with pytest.raises(ValueError):
        kernels.trailing_mean([1.0], window=0)


def test_impulse_response_zero_doses():
    out = kernels.impulse_response(np.zeros(50), tau=42.0)
    assert not out.any()


def test_impulse_response_matches_direct_sum():
    rng = np.random.default_rng(3)
    doses = rng.uniform(0, 80, 40)
    out = kernels.impulse_response(doses, tau=9.0)
    t = 25
    expected = sum(doses[s] * np.exp(-(t - s) / 9.0) for s in range(t))
    assert out[t] == pytest.approx(expected, rel=1e-12)


def test_impulse_value_extends_response_by_one_day():
    rng = np.random.default_rng(4)
    doses = rng.uniform(0, 80, 30)
    full = kernels.impulse_response(doses, tau=11.0)
    assert kernels.impulse_value(doses[:17], tau=11.0) == full[17]


def test_group_minutes_merges_small_gaps_only():
    minutes = np.array([0, 1, 2, 3, 4, 7, 8, 9, 10, 11, 30], dtype=np.int64)
    # gap of 2 between 4 and 7 merges; 30 is isolated and too short
    assert kernels.group_minutes(minutes, max_gap=2, min_len=5) == [(0, 11)]
    # with no gap bridging the first run splits and both halves survive
    assert kernels.group_minutes(minutes, max_gap=0, min_len=5) == [(0, 4), (7, 11)]


def test_group_minutes_empty():
    assert kernels.group_minutes(np.array([], dtype=np.int64), 2, 5) == []


def test_backends_agree_bit_for_bit():
    rng = np.random.default_rng(11)
    values = rng.uniform(0, 200, 500)
    assert [float(v) for v in kernels.trailing_mean(values, 42)] == pure.trailing_mean(
        values.tolist(), 42
    )
    assert [float(v) for v in kernels.impulse_response(values[:120], 42.0)] == (
        pure.impulse_response(values[:120].tolist(), 42.0)
    )
    assert kernels.impulse_value(values[:77], 7.0) == pure.impulse_value(
        values[:77].tolist(), 7.0
    )
    minutes = np.sort(rng.choice(100_000, 2_000, replace=False)).astype(np.int64)
    assert kernels.group_minutes(minutes, 2, 5) == pure.group_minutes(minutes.tolist(), 2, 5)
