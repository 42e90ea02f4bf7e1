"""Weighted Birkhoff averages: accelerated ergodic means, rate fitting and companion diagnostics."""

__version__ = "0.1.0"

from .averaging import (ContinuousAverage, ErrorCurve, error_curve, log_grid, toeplitz_counterexample,
                        unweighted_average, weighted_average, weighted_average_continuous)
from .diophantine import (SmallDivisorScan, continued_fraction, convergents, rotation_from_quotients,
                          small_divisor_scan)
from .dynamics import (BENCHMARK_RHO, GOLDEN_MEAN, OrbitObservable, PeriodicTable, Recorded, Rotation, TrigPoly,
                       benchmark_observable, benchmark_signal, translate)
from .estimators import (ConvergenceRateEstimator, OrbitClassifier, TrigInterpolator,
                         WeightedBirkhoffAverage, WeightedFourierEstimator)
from .exceptions import (BudgetError, DegenerateNormalizerError, DivergingBoundError, InputDomainError,
                         ParameterError, ShapeError, SignalTooShortError, TooNoisyError, WBirkhoffError)
from .fourier import (FourierRequest, FourierResult, effective_order_budget, fourier_spectrum,
                      weighted_fourier_coeff)
from .periodic import TrigInterp, mode_sum_smallness, periodic_weighted_error, trig_interpolate
from .ratefit import RateFit, bound_coefficients, classify_orbit, fit_rate, theoretical_bound
from .stochastic import (Distribution, WeightedSumSampler, theta_moments, weighted_clt_distance,
                         weighted_lln_check, weighted_slln_trajectory)
from .weights import WeightKind, WeightSpec, derivative_l1_norm, normalizer, parse_weight, sample_weights

from types import ModuleType as _ModuleType

__all__ = sorted(name for name, obj in globals().items()
                 if not name.startswith("_") and not isinstance(obj, _ModuleType))
