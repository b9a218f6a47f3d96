import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from qmpemba import analysis
from qmpemba.analysis import Series, detect_crossings, fit_power_law, local_exponent, plateau_estimate

T = np.geomspace(0.01, 1000, 121)


def series(values, label="s", times=T):
    return Series(label, times, values)


def test_series_validation():
    with pytest.raises(ValueError):
        Series("x", [0.0, 1.0], [1, 2])
    with pytest.raises(ValueError):
        Series("x", [1.0, 1.0], [1, 2])
    with pytest.raises(ValueError):
        Series("x", [1.0], [1])
    with pytest.raises(ValueError):
        Series("x", [1.0, 2.0], [1, 2, 3])
    s = Series.positive_times("x", [0, 1, 2], [5, 4, 3])
    assert list(s.times) == [1, 2]


def test_exact_power_law_fit():
    t = np.geomspace(1, 100, 20)
    f = fit_power_law(Series("p", t, 3 * t**-2.0), 1, 100)
    assert f.exponent == pytest.approx(-2.0, abs=1e-10)
    assert f.amplitude == pytest.approx(3.0, abs=1e-10)
    assert f.r_squared == pytest.approx(1.0, abs=1e-10)
    assert f.n_points == 20


def test_corrected_power_law_exponent_bound():
    f = fit_power_law(series(T**-0.5 * (1 + 0.1 / T)), 10, 100)
    assert -0.55 < f.exponent < -0.5


def test_constant_series_exponent_zero():
    f = fit_power_law(series(np.full(T.size, 0.3)), 1, 100)
    assert f.exponent == pytest.approx(0.0, abs=1e-12)
    assert 0.0 <= f.r_squared <= 1.0


def test_fit_errors_and_exclusions():
    with pytest.raises(ValueError):
        fit_power_law(series(T**-1.0), 100, 10)
    with pytest.raises(ValueError, match="nonpositive"):
        fit_power_law(series(-T), 1, 100)
    t = np.arange(1.0, 5.0)
    with pytest.raises(ValueError, match="usable points"):
        fit_power_law(Series("few", t, t), 1, 10)
    v = T**-1.0
    v[(T > 5) & (T < 8)] = 0.0
    v[np.argmin(np.abs(T - 20))] = 1e-20
    f = fit_power_law(series(v), 1, 100)
    assert f.n_excluded >= 2
    assert f.exponent == pytest.approx(-1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(c=st.floats(1e-6, 1e6), p=st.floats(-3, 1), seed=st.integers(0, 1000))
def test_fit_scale_covariance(c, p, seed):
    noise = 1 + 0.1 * np.random.default_rng(seed).uniform(-1, 1, T.size)
    v = T**p * noise
    f1 = fit_power_law(series(v), 1, 100)
    f2 = fit_power_law(series(c * v), 1, 100)
    assert abs(f1.exponent - f2.exponent) < 1e-12
    assert f2.amplitude / f1.amplitude == pytest.approx(c, rel=1e-10)


def test_default_window():
    assert analysis.default_fit_window(14) == (5.0, pytest.approx(19.6))


def test_local_exponent_pure_power_law():
    le = local_exponent(series(T**-1.5), 7)
    np.testing.assert_allclose(le.values, -1.5, atol=1e-10)
    assert len(le) == T.size - 6


def test_local_exponent_crossover_is_monotone():
    # t^-1/2 at early times, t^-3/2 beyond t=1
    v = T**-0.5 / (1 + T)
    le = local_exponent(series(v), 7)
    assert le.values[0] == pytest.approx(-0.5, abs=0.02)
    assert le.values[-1] == pytest.approx(-1.5, abs=0.02)
    assert np.all(np.diff(le.values) < 0)


def test_local_exponent_noisy_constant():
    rng = np.random.default_rng(1)
    v = 1 + 0.01 * rng.normal(size=T.size)
    le = local_exponent(series(v), 9)
    assert np.all(np.abs(le.values) < 3 * le.errors + 1e-12) or np.mean(np.abs(le.values) < 3 * le.errors) > 0.95


def test_local_exponent_rejects():
    with pytest.raises(ValueError):
        local_exponent(series(T**-1.0), 2)
    with pytest.raises(ValueError):
        local_exponent(Series("short", [1.0, 2.0, 3.0], [1, 2, 3]), 5)


def test_crossing_examples():
    s1 = series(T**-0.5, "slow")
    s2 = series(0.5 * T**-1.5, "fast")
    c = detect_crossings(s1, s2)
    assert len(c) == 1 and c[0] == pytest.approx(0.5, rel=1e-12)
    assert detect_crossings(s1, s1) == []
    assert detect_crossings(series(2 / T), series(1 / T)) == []


def test_crossing_on_shifted_grids():
    s1 = Series("a", T, T**-0.5)
    t2 = np.geomspace(0.02, 500, 77)
    c = detect_crossings(s1, Series("b", t2, 0.5 * t2**-1.5))
    assert len(c) == 1 and c[0] == pytest.approx(0.5, rel=1e-3)
    with pytest.raises(ValueError, match="non-overlapping"):
        detect_crossings(Series("a", [1.0, 2.0], [1, 1]), Series("b", [3.0, 4.0], [1, 1]))


def test_crossing_persistence_filters_flicker():
    t = np.arange(1.0, 21.0)
    base = np.ones(t.size)
    other = base.copy()
    other[5] = 2.0  # one-sample flip
    other[12:] = 2.0  # lasting swap
    assert detect_crossings(Series("a", t, base + 0.5), Series("b", t, other)) == [pytest.approx(12.0, rel=0.1)]
    assert len(detect_crossings(Series("a", t, base + 0.5), Series("b", t, other), persistence=1)) == 3


def test_crossing_t_start():
    s1 = series(T**-0.5)
    s2 = series(0.5 * T**-1.5)
    assert detect_crossings(s1, s2, t_start=1.0) == []


def test_exact_touch_crossing():
    t = np.arange(1.0, 11.0)
    a = np.array([3, 3, 3, 2, 1, 1, 1, 1, 1, 1.0])
    b = np.full(10, 2.0)
    assert detect_crossings(Series("a", t, a), Series("b", t, b)) == [4.0]


@settings(max_examples=50, deadline=None)
@given(p1=st.floats(-2, -0.1), p2=st.floats(-2, -0.1), c=st.floats(0.05, 20), k=st.floats(1e-3, 1e3))
def test_crossing_antisymmetry_and_scale_invariance(p1, p2, c, k):
    assume(abs(p1 - p2) > 0.05)
    s1 = series(T**p1)
    s2 = series(c * T**p2)
    c12 = detect_crossings(s1, s2)
    c21 = detect_crossings(s2, s1)
    assert len(c12) == len(c21)
    assert np.allclose(c12, c21, rtol=1e-12)
    scaled = detect_crossings(series(k * s1.values), series(k * s2.values))
    assert np.allclose(scaled, c12, rtol=1e-9)
    tx = c ** (1 / (p1 - p2))
    if T[3] < tx < T[-4]:
        assert len(c12) == 1 and c12[0] == pytest.approx(tx, rel=1e-9)


def test_synthetic_mpemba_topology():
    # matched start: lower initial distance, slower decay vs higher and faster
    near = series(0.2 * (1 + T) ** -0.5, "a_pos")
    far = series(0.6 * (1 + T) ** -1.5, "a_zero")
    c = detect_crossings(far, near)
    assert len(c) == 1
    assert far.values[0] > near.values[0] and far.values[-1] < near.values[-1]
    assert c[0] == pytest.approx(2.0, rel=1e-3)


def test_plateau_examples():
    assert plateau_estimate(series(np.full(T.size, 0.4))) == (pytest.approx(0.4), pytest.approx(0.0, abs=1e-15))
    t = np.linspace(1, 1e5, 400)
    mean, std = plateau_estimate(Series("p", t, 1 / t + 0.01))
    assert abs(mean - 0.01) < max(std, 1e-4)
    with pytest.raises(ValueError):
        plateau_estimate(Series("p", np.arange(1.0, 10.0), np.ones(9)))
    with pytest.raises(ValueError):
        plateau_estimate(series(T), tail_fraction=0.7)
