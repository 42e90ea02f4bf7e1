import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from wbirkhoff.exceptions import DegenerateNormalizerError, InputDomainError, ParameterError
from wbirkhoff.weights import (WeightKind, WeightSpec, derivative_l1_norm, eval_weight, normalizer,
                               parse_weight, sample_weights, weight_derivative)

BUILTIN = [WeightSpec.bump(1, 1), WeightSpec.bump(0.5, 0.5), WeightSpec.bump(1, 2), WeightSpec.bump(2, 2),
           WeightSpec.double_exp(), WeightSpec.sine_squared(), WeightSpec.uniform()]


def _mp_bump_z(p, q):
    mpmath.mp.dps = 30
    return mpmath.quad(lambda x: mpmath.exp(-x ** -p * (1 - x) ** -q), [0, 0.5, 1])


def test_bump_endpoints_are_zero():
    spec = WeightSpec.bump(1, 1)
    assert eval_weight(spec, 0.0) == 0.0
    assert eval_weight(spec, 1.0) == 0.0


def test_bump_midpoint_matches_mpmath_quadrature():
    z = float(_mp_bump_z(1, 1))
    spec = WeightSpec.bump(1, 1)
    assert spec.z_integral == pytest.approx(z, rel=1e-12)
    assert eval_weight(spec, 0.5) == pytest.approx(math.exp(-4.0) / z, rel=1e-12)


def test_unequal_exponents_normalization_against_mpmath():
    assert WeightSpec.bump(0.5, 2).z_integral == pytest.approx(float(_mp_bump_z(0.5, 2)), rel=1e-12)


def test_p_equals_q_symmetry_pointwise():
    spec = WeightSpec.bump(2, 2)
    # dyadic points keep 1 - x exact; the steep profile would amplify its rounding otherwise
    x = np.arange(1, 1024) / 1024
    np.testing.assert_allclose(eval_weight(spec, x), eval_weight(spec, 1.0 - x), rtol=1e-15)


def test_outside_support_is_exactly_zero():
    for spec in (WeightSpec.bump(1, 2), WeightSpec.double_exp()):
        vals = eval_weight(spec, np.array([-0.5, -1e-300, 0.0, 1.0, 1.0 + 1e-12, 7.0]))
        assert np.all(vals == 0.0)


def test_underflow_flushes_to_zero_without_nan():
    spec = WeightSpec.bump(2, 2)
    vals = eval_weight(spec, np.array([1e-300, 1e-20, 1e-3, 1 - 1e-3]))
    assert np.all(np.isfinite(vals))
    assert vals[0] == 0.0 and vals[1] == 0.0


def test_bad_inputs_raise():
    with pytest.raises(InputDomainError):
        eval_weight(WeightSpec.bump(), float("nan"))
    with pytest.raises(ParameterError):
        WeightSpec.bump(0, 1)
    with pytest.raises(ParameterError):
        WeightSpec.bump(1, -2)
    with pytest.raises(ParameterError):
        derivative_l1_norm(WeightSpec.bump(), 0)
    with pytest.raises(ParameterError):
        derivative_l1_norm(WeightSpec.bump(), 21)


@pytest.mark.parametrize("spec", BUILTIN, ids=lambda s: s.to_string())
def test_normalization_by_quadrature(spec):
    value, _ = integrate.quad(lambda x: float(spec(x)), 0, 1, points=[0.5], limit=400, epsabs=0, epsrel=1e-13)
    assert abs(value - 1.0) < 1e-12


def test_normalizer_uniform_is_n():
    assert normalizer(WeightSpec.uniform(), 100) == 100.0


def test_normalizer_asymptotic_to_n():
    assert abs(normalizer(WeightSpec.bump(1, 1), 10**5) / 10**5 - 1.0) < 0.01


def test_normalizer_four_point_direct_sum():
    spec = WeightSpec.bump(1, 1)
    z = float(_mp_bump_z(1, 1))
    direct = sum(math.exp(-1.0 / (x * (1.0 - x))) / z for x in (0.25, 0.5, 0.75))
    assert normalizer(spec, 4) == pytest.approx(direct, rel=1e-13)


@pytest.mark.parametrize("spec", BUILTIN, ids=lambda s: s.to_string())
def test_normalizer_forward_equals_reverse(spec):
    w = sample_weights(spec, 10007)
    forward = normalizer(spec, 10007)
    reverse = math.fsum(w[::-1])
    assert abs(forward - reverse) <= 4 * math.ulp(forward)


def test_degenerate_custom_normalizer():
    with pytest.warns(UserWarning):
        spec = WeightSpec.custom(lambda x: np.where(np.asarray(x) > 0.9, 1.0, 0.0))
    with pytest.raises(DegenerateNormalizerError):
        normalizer(spec, 5)


def test_first_derivative_norm_is_twice_the_peak():
    spec = WeightSpec.bump(1, 2)
    x = np.linspace(0, 1, 200001)
    peak = eval_weight(spec, x).max()
    assert derivative_l1_norm(spec, 1) == pytest.approx(2.0 * peak, rel=1e-6)


def test_first_derivative_norm_against_central_differences():
    spec = WeightSpec.bump(1, 1)
    x = np.linspace(0.0, 1.0, 100001)
    h = 1e-6
    fd = (eval_weight(spec, x + h) - eval_weight(spec, x - h)) / (2 * h)
    oracle = integrate.trapezoid(np.abs(fd), x)
    assert derivative_l1_norm(spec, 1) == pytest.approx(oracle, rel=1e-6)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_pointwise_derivatives_against_mpmath(m):
    spec = WeightSpec.bump(1, 1)
    z = _mp_bump_z(1, 1)
    for x in (0.2, 0.37, 0.5, 0.81):
        oracle = mpmath.diff(lambda t: mpmath.exp(-1 / (t * (1 - t))) / z, mpmath.mpf(x), m)
        assert float(weight_derivative(spec, x, m)[0]) == pytest.approx(float(oracle), rel=1e-9)


def test_double_exp_derivative_against_mpmath():
    spec = WeightSpec.double_exp()
    z = mpmath.mpf(spec.z_integral)
    f = lambda t: mpmath.exp(-mpmath.exp(1 / t) - mpmath.exp(1 / (1 - t))) / z  # noqa: E731
    for m in (1, 2):
        oracle = mpmath.diff(f, mpmath.mpf("0.45"), m)
        assert float(weight_derivative(spec, 0.45, m)[0]) == pytest.approx(float(oracle), rel=1e-8)


def test_derivative_norms_grow_super_geometrically():
    spec = WeightSpec.bump(1, 1)
    vals = [derivative_l1_norm(spec, m) for m in range(2, 9)]
    ratios = np.diff(np.log(vals))
    assert np.all(np.diff(ratios) > 0)


def test_uniform_derivative_norm_is_jump_total():
    assert derivative_l1_norm(WeightSpec.uniform(), 1) == 2.0
    assert math.isinf(derivative_l1_norm(WeightSpec.uniform(), 2))


def test_min_pq():
    assert WeightSpec.bump(1, 2).min_pq == 1.0
    assert math.isinf(WeightSpec.double_exp().min_pq)
    with pytest.raises(ParameterError):
        WeightSpec.uniform().min_pq


@pytest.mark.parametrize("text,kind", [("bump:p=1,q=2", WeightKind.BUMP_PQ), ("bump", WeightKind.BUMP_PQ),
                                       ("dexp", WeightKind.DOUBLE_EXP), ("sin2", WeightKind.SINE_SQUARED),
                                       ("uniform", WeightKind.UNIFORM)])
def test_parse_weight(text, kind):
    assert parse_weight(text).kind is kind


def test_parse_weight_round_trip():
    spec = WeightSpec.bump(0.5, 2)
    assert parse_weight(spec.to_string()) == spec


@pytest.mark.parametrize("text", ["bump:p=0", "bump:r=1", "gauss", "bump:p=x"])
def test_parse_weight_rejects(text):
    with pytest.raises(ParameterError):
        parse_weight(text)


exponents = st.floats(min_value=0.25, max_value=3.0)


@settings(max_examples=25, deadline=None)
@given(p=exponents, q=exponents)
def test_property_normalized_for_any_exponents(p, q):
    spec = WeightSpec.bump(p, q)
    value, _ = integrate.quad(lambda x: float(spec(x)), 0, 1, points=[p / (p + q)], limit=400,
                              epsabs=0, epsrel=1e-13)
    assert abs(value - 1.0) < 1e-12


@settings(max_examples=25, deadline=None)
@given(p=exponents, q=exponents, seed=st.integers(0, 2**32 - 1))
def test_property_swap_symmetry(p, q, seed):
    x = np.random.default_rng(seed).integers(1, 2**20, 1000) / 2**20
    a = eval_weight(WeightSpec.bump(p, q), x)
    b = eval_weight(WeightSpec.bump(q, p), 1.0 - x)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-300)
    assert np.all(a >= 0)
