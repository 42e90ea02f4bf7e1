import math
from itertools import product
from threading import Thread

import numpy as np
import pytest
from scipy import special, stats

from wbirkhoff.exceptions import ParameterError, TooNoisyError
from wbirkhoff.stochastic import (Distribution, OutsideHypothesisWarning, WeightedSumSampler, characteristic_distance,
                                  clt_results_csv, dkw_bound, kolmogorov_to_normal, rademacher_exact_distance,
                                  slln_sigma, theta_moments, weight_square_integral, weighted_clt_distance,
                                  weighted_lln_check, weighted_slln_trajectory)
from wbirkhoff.weights import WeightSpec

B11 = WeightSpec.bump(1, 1)


def test_theta_squares_sum_to_one():
    for n in (3, 10, 1000, 10**5):
        assert theta_moments(B11, n)[0] == pytest.approx(1.0, abs=1e-15)


def test_theta_fourth_moment_asymptotics():
    n = 10**4
    _, fourth = theta_moments(B11, n)
    assert n * fourth == pytest.approx(weight_square_integral(B11), rel=0.05)


def test_uniform_theta_fourth_moment_exact():
    assert theta_moments(WeightSpec.uniform(), 1000)[1] == pytest.approx(1e-3, rel=1e-14)


def test_weight_square_integral_uniform():
    assert weight_square_integral(WeightSpec.uniform()) == pytest.approx(1.0, rel=1e-12)


def test_rademacher_two_terms_exact():
    # theta_0 = 0 for the bump, so the sum is +-theta_1 = +-1: two atoms, not four
    assert rademacher_exact_distance(B11, 2) == pytest.approx(special.ndtr(1.0) - 0.5, abs=1e-15)


def test_rademacher_exact_against_enumeration():
    from wbirkhoff.stochastic import theta
    n = 8
    th = theta(B11, n)
    sums = sorted(sum(s * t for s, t in zip(signs, th)) for signs in product((-1, 1), repeat=n))
    worst = 0.0
    for i, x in enumerate(sums):
        phi = special.ndtr(x)
        worst = max(worst, abs((i + 1) / 2**n - phi), abs(i / 2**n - phi))
    # ties between atoms only make the enumeration oracle looser
    assert rademacher_exact_distance(B11, n) <= worst + 1e-12


def test_rademacher_enumeration_limit():
    with pytest.raises(ParameterError):
        rademacher_exact_distance(B11, 23)


def test_characteristic_distance_gaussian_is_zero():
    assert characteristic_distance(Distribution.gaussian(), B11, 50) == 0.0


def test_characteristic_distance_uniform_decreases():
    d50 = characteristic_distance(Distribution.uniform_sym(), B11, 50)
    d400 = characteristic_distance(Distribution.uniform_sym(), B11, 400)
    assert d400 < d50
    assert d50 / d400 == pytest.approx(8.0, rel=0.1)


def test_characteristic_distance_against_monte_carlo():
    exact = characteristic_distance(Distribution.uniform_sym(), B11, 10)
    sampler = WeightedSumSampler(Distribution.uniform_sym(), B11, 10, seed=5)
    res = weighted_clt_distance(sampler, 4 * 10**5)
    assert abs(res.distance - exact) <= res.dkw_bound


def test_gaussian_distance_within_dkw():
    # DKW is a 95% radius, so single seeds may exceed it; judge the seed ensemble instead
    runs = [weighted_clt_distance(WeightedSumSampler(Distribution.gaussian(), B11, 100, seed=s), 10**5)
            for s in range(40)]
    assert not any(r.outside_hypothesis for r in runs)
    assert sum(r.distance > r.dkw_bound for r in runs) <= 6
    scaled = [r.distance * math.sqrt(r.trials) for r in runs]
    assert stats.kstest(scaled, stats.kstwobign.cdf).pvalue > 0.01


def test_gaussian_sums_have_unit_variance():
    trials = 2 * 10**5
    sums = WeightedSumSampler(Distribution.gaussian(), B11, 200, seed=9).weighted_sums(trials)
    # the stated 3/sqrt(trials) band is about 2.1 standard errors of a Gaussian sample variance
    assert abs(sums.var() - 1.0) < 3 / math.sqrt(trials)


def test_too_few_trials():
    with pytest.raises(TooNoisyError):
        weighted_clt_distance(WeightedSumSampler(Distribution.gaussian(), B11, 10), 999)


def test_rademacher_flagged_outside_hypothesis():
    with pytest.warns(OutsideHypothesisWarning):
        res = weighted_clt_distance(WeightedSumSampler(Distribution.rademacher(), B11, 50), 2000)
    assert res.outside_hypothesis


def test_infinite_variance_rejected():
    with pytest.raises(ParameterError):
        weighted_clt_distance(WeightedSumSampler(Distribution.cauchy(), B11, 50), 2000)


def test_seed_determinism_and_thread_independence():
    sampler = WeightedSumSampler(Distribution.uniform_sym(), B11, 5000, seed=42)
    a = sampler.weighted_sums(3000)
    b = WeightedSumSampler(Distribution.uniform_sym(), B11, 5000, seed=42).weighted_sums(3000, n_jobs=4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, WeightedSumSampler(Distribution.uniform_sym(), B11, 5000, seed=43).weighted_sums(3000))


def test_concurrent_callers_share_nothing():
    sampler = WeightedSumSampler(Distribution.gaussian(), B11, 300, seed=7)
    expected = sampler.weighted_sums(2000)
    results = [None] * 4

    def work(i):
        results[i] = sampler.weighted_sums(2000)

    threads = [Thread(target=work, args=(i,)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for r in results:
        np.testing.assert_array_equal(r, expected)


def test_dkw_and_kolmogorov_helpers():
    assert dkw_bound(10**6) == pytest.approx(math.sqrt(math.log(40) / 2e6))
    assert kolmogorov_to_normal([0.0]) == pytest.approx(0.5)
    csv_text = clt_results_csv([weighted_clt_distance(WeightedSumSampler(Distribution.gaussian(), B11, 10), 1000)])
    assert csv_text.splitlines()[0] == "N,distance,dkw_bound,trials,seed"


def test_slln_sigma():
    assert slln_sigma(2) == 1.0
    assert slln_sigma(4) == 0.75
    assert slln_sigma(1) == 2.0
    with pytest.raises(ParameterError):
        slln_sigma(0)


def test_slln_gaussian_scaled_sums_small():
    worst = 0.0
    for seed in range(20):
        traj = weighted_slln_trajectory(WeightedSumSampler(Distribution.gaussian(), B11, 2, seed=seed), 2,
                                        [10**4])
        worst = max(worst, abs(traj.scaled[-1]))
    assert worst < 0.05


def test_slln_log_scaling_bounded():
    grid = [100, 1000, 10**4]
    peak = max(np.max(np.abs(weighted_slln_trajectory(
        WeightedSumSampler(Distribution.gaussian(), B11, 2, seed=s), 2, grid).log_scaled)) for s in range(50))
    assert peak < 3


def test_slln_zero_distribution_exact():
    traj = weighted_slln_trajectory(WeightedSumSampler(Distribution.zero(), B11, 2), 2, [10, 100])
    assert np.all(traj.scaled == 0.0)


def test_slln_rejects_uncentred_and_warns_without_moment():
    with pytest.raises(ParameterError):
        weighted_slln_trajectory(WeightedSumSampler(Distribution.constant(1.0), B11, 2), 2, [10])
    with pytest.warns(OutsideHypothesisWarning):
        weighted_slln_trajectory(WeightedSumSampler(Distribution.student_t(3), B11, 2), 4, [10, 100])


def test_lln_gaussian():
    assert weighted_lln_check(WeightedSumSampler(Distribution.gaussian(), B11, 10**4, seed=3), 0.05, 2000) > 0.99


def test_lln_constant_is_certain():
    assert weighted_lln_check(WeightedSumSampler(Distribution.constant(2.5), B11, 1000), 1e-9, 1000) == 1.0


def test_lln_cauchy_fails_and_warns():
    with pytest.warns(OutsideHypothesisWarning):
        p = weighted_lln_check(WeightedSumSampler(Distribution.cauchy(), B11, 10**4, seed=3), 0.05, 2000)
    assert p < 0.5


def test_distribution_validation():
    with pytest.raises(ParameterError):
        Distribution("poisson")
    with pytest.raises(ParameterError):
        Distribution.student_t(0)
    custom = Distribution.custom(lambda rng, shape: rng.exponential(size=shape) - 1.0)
    assert WeightedSumSampler(custom, B11, 10).weighted_sums(5).shape == (5,)
