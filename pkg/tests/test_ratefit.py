import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wbirkhoff.averaging import ErrorCurve, error_curve, log_grid
from wbirkhoff.diophantine import small_divisor_scan
from wbirkhoff.dynamics import GOLDEN_MEAN, OrbitObservable, PeriodicTable, Rotation, TrigPoly, benchmark_signal
from wbirkhoff.exceptions import DivergingBoundError, ParameterError
from wbirkhoff.ratefit import (bound_coefficients, classify_orbit, fit_rate, self_difference_curve,
                               terminal_slope, theoretical_bound, theoretical_zeta)
from wbirkhoff.weights import WeightSpec, derivative_l1_norm

B11 = WeightSpec.bump(1, 1)
GRID = np.unique(np.geomspace(4, 900, 40).round())


def test_recovers_stretched_exponential():
    fit = fit_rate(GRID, np.exp(-np.sqrt(GRID)))
    assert fit.model == "exponential"
    assert fit.zeta == pytest.approx(0.5, abs=0.02)
    assert fit.r_squared > 0.999


def test_recovers_power_law():
    fit = fit_rate(GRID, 3 * GRID ** -2.0)
    assert fit.model == "polynomial"
    assert fit.m == pytest.approx(2.0, abs=0.02)


def test_recovers_n_over_log_n():
    fit = fit_rate(GRID, np.exp(-0.5 * GRID / np.log(GRID)), include_nlogn=True, trim_transient=False)
    assert fit.model == "nlogn"
    assert fit.c == pytest.approx(0.5, rel=1e-6)


def test_inconclusive_cases():
    few = fit_rate([10, 20, 30], [1e-3, 1e-4, 1e-5])
    assert few.model == "inconclusive" and "usable" in few.reason
    noise = np.random.default_rng(0).uniform(0.1, 1.0, GRID.size)
    assert fit_rate(GRID, noise, trim_transient=False).model == "inconclusive"
    with pytest.raises(ValueError):
        few.predict(10)


def test_floor_points_excluded():
    err = np.exp(-np.sqrt(GRID))
    flags = np.zeros(GRID.size, bool)
    flags[30:] = True
    err[30:] = 1e-3  # garbage past the floor must not matter
    fit = fit_rate(GRID, err, flags)
    assert fit.floor_truncated
    assert fit.n_range_used[1] == int(GRID[29])
    assert fit.zeta == pytest.approx(0.5, abs=0.02)


def test_rate_fit_json():
    payload = json.loads(fit_rate(GRID, 3 * GRID ** -2.0).to_json())
    assert payload["model"] == "polynomial"
    assert payload["zeta_or_m"] == pytest.approx(2.0)
    assert set(payload) == {"model", "c", "zeta_or_m", "r2", "floor_truncated"}


def test_prediction_reproduces_input():
    fit = fit_rate(GRID, 5 * np.exp(-0.8 * GRID ** 0.4))
    np.testing.assert_allclose(fit.predict(GRID), 5 * np.exp(-0.8 * GRID ** 0.4), rtol=1e-8)


def test_benchmark_faster_weight_fits_larger_zeta():
    grid = log_grid(8, 1 << 14, 8)
    fits = {pq: fit_rate(error_curve(benchmark_signal(), WeightSpec.bump(*pq), grid)) for pq in ((1, 1), (2, 2))}
    assert fits[(1, 1)].model == fits[(2, 2)].model == "exponential"
    assert fits[(2, 2)].zeta > fits[(1, 1)].zeta


def test_theoretical_zeta():
    assert theoretical_zeta(WeightSpec.bump(0.5, 0.5)) == pytest.approx(1 / 3)
    assert theoretical_zeta(WeightSpec.bump(1, 2)) == 0.5
    assert theoretical_zeta(WeightSpec.bump(2, 2)) == pytest.approx(2 / 3)


def test_classify_quasi_periodic_orbit_regular():
    assert classify_orbit(benchmark_signal(), B11).label == "regular"


def test_classify_constant_signal_regular():
    verdict = classify_orbit(PeriodicTable([2.0]), B11)
    assert verdict.label == "regular"
    assert verdict.proxy.floor_flag[0]


def test_classify_random_signal_chaotic():
    data = np.random.default_rng(0).uniform(size=3 * (1 << 14))
    verdict = classify_orbit(data, B11)
    assert verdict.label == "chaotic"
    assert verdict.evidence.m == pytest.approx(0.5, abs=0.2)


@pytest.mark.slow
def test_classify_random_signals_mostly_chaotic():
    labels = [classify_orbit(np.random.default_rng(seed).uniform(size=3 * (1 << 14)), B11).label
              for seed in range(20)]
    assert labels.count("chaotic") >= 16
    assert "regular" not in labels


def test_self_difference_proxy_is_non_increasing():
    proxy = self_difference_curve(benchmark_signal(), B11, log_grid(16, 2048, 4))
    assert np.all(np.diff(proxy.errors) <= 0)


def test_terminal_slope():
    fit = fit_rate(GRID, 3 * GRID ** -2.0)
    assert terminal_slope(fit) == pytest.approx(2.0)
    assert math.isnan(terminal_slope(fit_rate([1, 2], [1, 1])))


def test_bound_single_mode_example():
    coeffs = bound_coefficients(B11, 2, 0.3, 1.0, {1: 1.0})
    assert coeffs.c3 * coeffs.c4 == pytest.approx((2 * math.pi * 0.3) ** -2)
    assert coeffs.c2 == derivative_l1_norm(B11, 2)
    assert coeffs.c1 >= 1.0
    signal = OrbitObservable(TrigPoly.from_dict({(1,): 1.0}, real=False), Rotation((GOLDEN_MEAN,)))
    measured = error_curve(signal, B11, [1000]).errors[0]
    assert coeffs.bound(1000) > measured


def test_bound_rejects_low_order():
    with pytest.raises(ParameterError):
        theoretical_bound(B11, 0, 0.3, 1.0, {1: 1.0})
    with pytest.raises(ParameterError):
        theoretical_bound(B11, 1, 0.3, 1.0, {1: 1.0})


def test_bound_rejects_uniform_weight():
    assert derivative_l1_norm(WeightSpec.uniform(), 1) == 2.0
    with pytest.raises(DivergingBoundError, match="uniform"):
        theoretical_bound(WeightSpec.uniform(), 2, 0.3, 1.0, {1: 1.0})


def test_bound_diverging_decay():
    with pytest.raises(DivergingBoundError):
        theoretical_bound(B11, 2, 0.3, 1.0, {1: math.inf})


def test_bound_holds_for_random_polynomials():
    rho = Rotation((GOLDEN_MEAN,))
    scan = small_divisor_scan(rho, 1000)
    grid = log_grid(16, 1 << 13, 2)
    for seed in range(10):
        rng = np.random.default_rng(seed)
        ks = np.arange(1, 6)
        c = rng.normal(size=5) + 1j * rng.normal(size=5)
        poly = TrigPoly.from_dict({**{(int(k),): v for k, v in zip(ks, c)},
                                   **{(-int(k),): np.conj(v) for k, v in zip(ks, c)}})
        measured = error_curve(OrbitObservable(poly, rho), B11, grid, reference=0.0).errors
        bound = bound_coefficients(B11, 2, scan.gamma, scan.tau, poly).bound(grid)
        assert np.all(bound >= measured)


@settings(max_examples=40, deadline=None)
@given(scale=st.floats(1e-6, 1e6), zeta=st.sampled_from([0.3, 0.5, 0.7]), power=st.booleans())
def test_property_scale_invariance(scale, zeta, power):
    err = GRID ** -1.5 if power else np.exp(-GRID ** zeta)
    base = fit_rate(GRID, err, np.zeros(GRID.size, bool))
    scaled = fit_rate(GRID, scale * err, np.zeros(GRID.size, bool))
    assert base.model == scaled.model
    assert base.zeta_or_m == pytest.approx(scaled.zeta_or_m, rel=1e-9)


def test_error_curve_input_accepted():
    curve = ErrorCurve(GRID, np.exp(-np.sqrt(GRID)), np.zeros(1), np.zeros(GRID.size, bool))
    assert fit_rate(curve).zeta == pytest.approx(0.5, abs=0.02)
