import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wbirkhoff.dynamics import (BENCHMARK_RHO, GOLDEN_MEAN, FlowSampler, OrbitObservable, PeriodicTable, Recorded,
                                Rotation, TrigPoly, eval_observable, benchmark_observable, benchmark_signal,
                                make_signal, read_csv_samples, translate, true_average)
from wbirkhoff.exceptions import InputDomainError, ParameterError, ShapeError, SignalTooShortError


def _exact_translate(theta, rho, n):
    """Rational oracle: the double inputs are exact dyadic rationals."""
    return float((Fraction(theta) + n * Fraction(rho)) % 1)


def test_zero_rotation_is_identity():
    theta = np.array([0.1, 0.7, 0.25])
    np.testing.assert_array_equal(translate(theta, Rotation((0.0, 0.0, 0.0)), 12345), theta)


def test_exact_period():
    assert translate(0.0, Rotation((0.25,)), 4)[0] == 0.0


def test_golden_million_steps_against_rational_oracle():
    got = translate(0.0, Rotation((GOLDEN_MEAN,)), 10**6)[0]
    assert abs(got - _exact_translate(0.0, GOLDEN_MEAN, 10**6)) < 1e-12


def test_translate_vectorized_matches_rational_oracle():
    ns = np.array([0, 1, 17, 10**5, 10**7, 2**40])
    got = translate(0.3, Rotation((BENCHMARK_RHO,)), ns)[:, 0]
    want = [_exact_translate(0.3, BENCHMARK_RHO, int(n)) for n in ns]
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-15)


def test_translate_errors():
    with pytest.raises(ShapeError):
        translate([0.0, 0.0], Rotation((0.1,)), 3)
    with pytest.raises(ParameterError):
        translate(0.0, Rotation((0.1,)), -1)


def test_rotation_components_reduced():
    rho = Rotation((1.25, -0.25))
    assert rho.components == (0.25, 0.75)
    with pytest.raises(InputDomainError):
        Rotation((math.inf,))


def test_constant_observable():
    f = TrigPoly.from_dict({(0,): 2.5})
    assert eval_observable(f, 0.123)[0] == 2.5


def test_benchmark_observable_at_zero_and_mean():
    f = benchmark_observable()
    assert eval_observable(f, 0.0)[0] == pytest.approx(1.0, abs=1e-15)
    assert true_average(f)[0] == 0.0


def test_true_average_constant():
    assert true_average(TrigPoly.from_dict({(0,): 3.0}))[0] == 3.0


def test_true_average_against_grid_quadrature():
    f = TrigPoly.from_dict({(0,): 0.7, (2,): 0.3 - 0.1j, (-2,): 0.3 + 0.1j, (3,): 0.5j, (-3,): -0.5j})
    x = np.arange(10**6) / 10**6
    grid_mean = eval_observable(f, x[:, None]).mean()
    assert true_average(f)[0] == pytest.approx(0.7, abs=1e-15)
    assert abs(grid_mean - 0.7) < 1e-9


def test_random_trig_poly_against_term_by_term_sum():
    rng = np.random.default_rng(1)
    freqs = rng.integers(-6, 7, size=(5, 2))
    coeffs = rng.normal(size=5) + 1j * rng.normal(size=5)
    f = TrigPoly(freqs, coeffs, real=False)
    pts = rng.uniform(size=(100, 2))
    got = eval_observable(f, pts)[:, 0]
    for theta, value in zip(pts, got):
        oracle = 0j
        for k, c in zip(freqs, coeffs):
            oracle += c * complex(math.cos(2 * math.pi * (k @ theta)), math.sin(2 * math.pi * (k @ theta)))
        assert abs(value - oracle) < 1e-13


def test_real_flag_enforces_conjugate_symmetry():
    with pytest.raises(InputDomainError):
        TrigPoly.from_dict({(1,): 1.0j})


def test_trig_poly_json_round_trip():
    f = benchmark_observable()
    g = TrigPoly.from_json(f.to_json())
    np.testing.assert_array_equal(f.freqs, g.freqs)
    np.testing.assert_array_equal(f.coeffs, g.coeffs)


def test_periodic_table_source():
    src = make_signal("periodic", values=[1, -1])
    assert src.period == 2
    np.testing.assert_array_equal(src.samples(6)[:, 0], [1, -1, 1, -1, 1, -1])


def test_benchmark_signal_first_element():
    assert benchmark_signal()[0][0] == pytest.approx(1.0, abs=1e-15)


def test_recorded_from_csv(tmp_path):
    data = np.random.default_rng(0).normal(size=(1000, 2))
    path = tmp_path / "x.csv"
    path.write_text("a,b\n" + "\n".join(f"{float(r[0])!r},{float(r[1])!r}" for r in data) + "\n")
    src = make_signal("recorded", samples=read_csv_samples(path))
    np.testing.assert_array_equal(src[999], data[-1])
    with pytest.raises(SignalTooShortError):
        src.samples(1001)


def test_signal_validation():
    with pytest.raises(InputDomainError):
        PeriodicTable([])
    with pytest.raises(InputDomainError):
        Recorded([1.0, math.nan])
    with pytest.raises(ParameterError):
        FlowSampler(np.cos, step=0.0)
    with pytest.raises(ParameterError):
        make_signal("noise")


def test_reads_are_bit_identical():
    src = benchmark_signal()
    np.testing.assert_array_equal(src.samples(5000), src.samples(5000))


@pytest.mark.parametrize("u,period", [(3, 8), (5, 16)])
def test_dyadic_rotation_embeds_periodic_table_exactly(u, period):
    f = TrigPoly.from_dict({(1,): 0.5, (-1,): 0.5, (2,): 0.25j, (-2,): -0.25j})
    orbit = OrbitObservable(f, Rotation((u / period,)), (0.0,))
    table = PeriodicTable(orbit.samples(period)[:, 0])
    np.testing.assert_array_equal(orbit.samples(50 * period), table.samples(50 * period))


def test_rational_rotation_embeds_periodic_table_to_rounding():
    # 3/7 is not a double: the phase drifts by at most n ulp(rho) / 2
    period, u, n = 7, 3, 700
    f = TrigPoly.from_dict({(1,): 0.5, (-1,): 0.5, (2,): 0.25j, (-2,): -0.25j})
    orbit = OrbitObservable(f, Rotation((u / period,)), (0.0,))
    table = PeriodicTable(orbit.samples(period)[:, 0])
    drift = n * math.ulp(u / period) / 2
    lipschitz = 2 * math.pi * (0.5 * 1 * 2 + 0.25 * 2 * 2)
    np.testing.assert_allclose(orbit.samples(n), table.samples(n), rtol=0, atol=lipschitz * drift + 1e-15)


@settings(max_examples=60, deadline=None)
@given(theta=st.floats(0, 1, exclude_max=True), rho=st.floats(0, 1, exclude_max=True),
       a=st.integers(0, 5 * 10**5), b=st.integers(0, 5 * 10**5))
def test_property_translation_additivity(theta, rho, a, b):
    r = Rotation((rho,))
    two_step = translate(translate(theta, r, a), r, b)[0]
    one_step = translate(theta, r, a + b)[0]
    gap = abs(two_step - one_step)
    assert min(gap, 1.0 - gap) < 1e-12
