"""Monte Carlo checks of the weighted laws of large numbers and the weighted CLT."""
from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from ._numerics import fsum
from .averaging import check_grid
from .exceptions import ParameterError, TooNoisyError
from .weights import WeightSpec, _check_n_steps, normalizer, sample_weights

MIN_TRIALS = 1000
CHUNK_ELEMENTS = 1 << 22
MAX_ENUMERATION_TERMS = 22
SQRT3 = math.sqrt(3.0)


class OutsideHypothesisWarning(UserWarning):
    """The distribution does not meet the hypotheses of the theorem being checked."""


@dataclass(frozen=True)
class Distribution:
    """I.i.d. law of the summands ``X_n``. Build with the classmethod constructors."""

    kind: str
    param: float = 0.0
    custom_draw: Optional[Callable] = field(default=None, compare=False, repr=False)
    custom_mean: float = 0.0
    custom_variance: float = 1.0

    KINDS = ("gaussian", "uniform_sym", "rademacher", "student_t", "cauchy", "constant", "zero", "custom")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError(f"unknown distribution {self.kind!r}")
        if self.kind == "student_t" and not self.param > 0:
            raise ParameterError("student_t needs positive degrees of freedom")
        if self.kind == "custom" and self.custom_draw is None:
            raise ParameterError("custom distribution needs a draw function")

    @classmethod
    def gaussian(cls):
        return cls("gaussian")

    @classmethod
    def uniform_sym(cls):
        """Uniform on ``[-sqrt 3, sqrt 3]``: mean 0, variance 1."""
        return cls("uniform_sym")

    @classmethod
    def rademacher(cls):
        return cls("rademacher")

    @classmethod
    def student_t(cls, df):
        return cls("student_t", float(df))

    @classmethod
    def cauchy(cls):
        return cls("cauchy")

    @classmethod
    def constant(cls, c):
        return cls("constant", float(c))

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def custom(cls, draw, mean=0.0, variance=1.0):
        """``draw(rng, shape)`` must return an array of that shape."""
        return cls("custom", custom_draw=draw, custom_mean=float(mean), custom_variance=float(variance))

    @property
    def log_concave_unconditional(self):
        return self.kind in ("gaussian", "uniform_sym")

    @property
    def mean(self):
        """Expectation; the Cauchy law has none and reports its centre 0."""
        return {"constant": self.param, "custom": self.custom_mean}.get(self.kind, 0.0)

    @property
    def variance(self):
        if self.kind in ("gaussian", "uniform_sym", "rademacher"):
            return 1.0
        if self.kind in ("constant", "zero"):
            return 0.0
        if self.kind == "student_t":
            return self.param / (self.param - 2.0) if self.param > 2 else math.inf
        if self.kind == "cauchy":
            return math.inf
        return self.custom_variance

    def has_moment(self, mu):
        """Whether ``E|X|^mu`` is finite."""
        if self.kind == "student_t":
            return mu < self.param
        if self.kind == "cauchy":
            return mu < 1.0
        return True

    def draw(self, rng: np.random.Generator, shape):
        kind = self.kind
        if kind == "gaussian":
            return rng.standard_normal(shape)
        if kind == "uniform_sym":
            return rng.uniform(-SQRT3, SQRT3, shape)
        if kind == "rademacher":
            return 2.0 * rng.integers(0, 2, shape).astype(float) - 1.0
        if kind == "student_t":
            return rng.standard_t(self.param, shape)
        if kind == "cauchy":
            return rng.standard_cauchy(shape)
        if kind == "constant":
            return np.full(shape, self.param)
        if kind == "zero":
            return np.zeros(shape)
        return np.asarray(self.custom_draw(rng, shape), dtype=float)


def theta(spec: WeightSpec, n_terms: int):
    """``theta_n = sqrt(w(n/N) / A_N)`` for n = 0..N-1."""
    n_terms = _check_n_steps(n_terms)
    return np.sqrt(sample_weights(spec, n_terms) / normalizer(spec, n_terms))


def theta_moments(spec: WeightSpec, n_terms: int):
    """``(sum theta^2, sum theta^4)`` with ``theta^2 = w(n/N) / A_N`` taken exactly as defined."""
    n_terms = _check_n_steps(n_terms, minimum=3)
    sq = sample_weights(spec, n_terms) / normalizer(spec, n_terms)
    return fsum(sq), fsum(sq * sq)


def weight_square_integral(spec: WeightSpec):
    """``int_0^1 w(x)^2 dx`` by adaptive quadrature."""
    value, _ = integrate.quad(lambda x: float(spec(x)) ** 2, 0.0, 1.0, points=[0.5], limit=200,
                              epsabs=0.0, epsrel=1e-12)
    return value


@dataclass(frozen=True, eq=False)
class WeightedSumSampler:
    """Draws of ``sum_n c_n X_n`` with reproducible, chunk-wise independent streams.

    Trials are split into fixed chunks of about ``2^22 / N`` rows; chunk ``i``
    uses a Philox generator seeded by the ``i``-th child of
    ``SeedSequence(seed)``. Results are therefore independent of ``n_jobs``.
    """

    distribution: Distribution
    spec: WeightSpec
    n_terms: int
    seed: int = 0

    def __post_init__(self):
        _check_n_steps(self.n_terms)
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")

    @property
    def theta(self):
        return theta(self.spec, self.n_terms)

    def _chunks(self, trials):
        rows = max(1, CHUNK_ELEMENTS // self.n_terms)
        starts = list(range(0, trials, rows))
        children = np.random.SeedSequence(int(self.seed)).spawn(len(starts))
        return [(s, min(rows, trials - s), child) for s, child in zip(starts, children)]

    def weighted_sums(self, trials: int, coeffs=None, n_jobs: int = 1):
        """``trials`` independent draws of ``sum_n coeffs_n X_n`` (``coeffs`` defaults to theta)."""
        if trials < 1:
            raise ParameterError("at least one trial is required")
        coeffs = self.theta if coeffs is None else np.asarray(coeffs, dtype=float)
        out = np.empty(trials)

        def run(chunk):
            start, rows, child = chunk
            rng = np.random.Generator(np.random.Philox(child))
            x = self.distribution.draw(rng, (rows, self.n_terms))
            out[start:start + rows] = (x * coeffs).sum(axis=1)

        chunks = self._chunks(trials)
        if n_jobs == 1:
            for c in chunks:
                run(c)
        else:
            with ThreadPoolExecutor(max_workers=n_jobs) as pool:
                list(pool.map(run, chunks))
        return out

    def stream(self, length: int):
        """One sequence ``X_0, X_1, ...`` for trajectory experiments."""
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(self.seed))))
        return self.distribution.draw(rng, length)


def dkw_bound(trials: int, alpha: float = 0.05):
    """Dvoretzky-Kiefer-Wolfowitz radius: ``P(sup |F_n - F| > eps) <= alpha``."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * trials))


def kolmogorov_to_normal(samples):
    """``sup_x |F_emp(x) - Phi(x)|`` of a sample."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    cdf = special.ndtr(x)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


@dataclass(frozen=True)
class CLTResult:
    n_terms: int
    distance: float
    dkw_bound: float
    trials: int
    seed: int
    outside_hypothesis: bool

    def to_csv_row(self):
        return [self.n_terms, repr(self.distance), repr(self.dkw_bound), self.trials, self.seed]


def clt_results_csv(results):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["N", "distance", "dkw_bound", "trials", "seed"])
    for r in results:
        writer.writerow(r.to_csv_row())
    return buf.getvalue()


def weighted_clt_distance(sampler: WeightedSumSampler, trials: int, n_jobs: int = 1,
                          alpha: float = 0.05) -> CLTResult:
    """Empirical Kolmogorov distance of ``sum theta_n X_n / sd(X)`` to the standard normal.

    The attached ``dkw_bound`` is the sampling-noise radius at level ``alpha``.
    """
    if trials < MIN_TRIALS:
        raise TooNoisyError(f"{trials} trials give a DKW radius of {dkw_bound(trials, alpha):.3g}; "
                            f"at least {MIN_TRIALS} are required")
    dist = sampler.distribution
    var = dist.variance
    if not (math.isfinite(var) and var > 0):
        raise ParameterError(f"{dist.kind} has no finite positive variance")
    outside = not dist.log_concave_unconditional
    if outside:
        warnings.warn(f"{dist.kind} inputs are not log-concave and unconditional", OutsideHypothesisWarning,
                      stacklevel=2)
    sums = sampler.weighted_sums(trials, n_jobs=n_jobs) / math.sqrt(var)
    return CLTResult(sampler.n_terms, kolmogorov_to_normal(sums), dkw_bound(trials, alpha), trials,
                     int(sampler.seed), outside)


def rademacher_exact_distance(spec: WeightSpec, n_terms: int):
    """Exact Kolmogorov distance of ``sum theta_n eps_n`` (Rademacher signs) to the normal.

    Enumerates all ``2^N`` sign patterns, so ``N`` is limited to 22.
    """
    if n_terms > MAX_ENUMERATION_TERMS:
        raise ParameterError(f"exact enumeration is limited to N <= {MAX_ENUMERATION_TERMS}")
    th = theta(spec, n_terms)
    signs = 1.0 - 2.0 * ((np.arange(2**n_terms)[:, None] >> np.arange(n_terms)) & 1)
    atoms, counts = np.unique(np.round(signs @ th, 14), return_counts=True)
    cdf_right = np.cumsum(counts) / 2**n_terms
    cdf_left = cdf_right - counts / 2**n_terms
    phi = special.ndtr(atoms)
    return float(max(np.max(np.abs(cdf_right - phi)), np.max(np.abs(cdf_left - phi))))


def characteristic_distance(distribution: Distribution, spec: WeightSpec, n_terms: int,
                            t_max=60.0, n_t=60001, x_max=6.0, n_x=1201):
    """Deterministic Kolmogorov distance of ``sum theta_n X_n`` to the normal by Fourier inversion.

    For symmetric laws ``F(x) - Phi(x) = (1/pi) int_0^inf sin(tx) (phi(t) - e^{-t^2/2}) / t dt``,
    with ``phi(t) = prod_n phi_X(theta_n t)``. Supports ``gaussian`` and ``uniform_sym``.
    """
    if distribution.kind not in ("gaussian", "uniform_sym"):
        raise ParameterError("characteristic inversion is implemented for gaussian and uniform_sym")
    th = theta(spec, n_terms)
    th = th[th > 0]
    t = np.linspace(0.0, t_max, n_t)
    if distribution.kind == "gaussian":
        return 0.0
    log_phi = np.zeros_like(t)
    for c in th:
        log_phi += np.log(np.abs(np.sinc(SQRT3 * c * t / np.pi)) + 1e-300)
    sign = np.ones_like(t)
    for c in th:
        sign *= np.sign(np.sinc(SQRT3 * c * t / np.pi))
    phi = sign * np.exp(log_phi)
    diff = np.empty_like(t)
    diff[1:] = (phi[1:] - np.exp(-0.5 * t[1:] ** 2)) / t[1:]
    diff[0] = 0.0
    worst = 0.0
    for xs in np.array_split(np.linspace(0.0, x_max, n_x), max(1, n_x // 32)):
        gap = integrate.simpson(np.sin(np.outer(xs, t)) * diff, x=t, axis=1) / np.pi
        worst = max(worst, float(np.max(np.abs(gap))))
    return worst


@dataclass(frozen=True, eq=False)
class SLLNTrajectory:
    n_grid: np.ndarray
    sigma: float
    scaled: np.ndarray
    log_scaled: np.ndarray


def slln_sigma(mu):
    """Normalizing exponent of the weighted Marcinkiewicz-Zygmund law."""
    if not mu > 0:
        raise ParameterError(f"moment exponent must be positive, got {mu}")
    return 1.0 / mu + (0.5 if mu >= 2 else 1.0)


def weighted_slln_trajectory(sampler: WeightedSumSampler, mu: float, n_grid) -> SLLNTrajectory:
    """``N^-sigma sum sqrt(w(n/N)) X_n`` and ``(N log N)^-1/2 sum sqrt(w(n/N)) X_n`` along one stream.

    The same sequence ``X_0, X_1, ...`` (from the sampler's seed) is reused for
    every N, so the values trace a single realization.
    """
    sigma = slln_sigma(mu)
    dist = sampler.distribution
    if not dist.has_moment(mu):
        warnings.warn(f"{dist.kind} has no finite moment of order {mu}", OutsideHypothesisWarning,
                      stacklevel=2)
    if dist.mean != 0.0:
        raise ParameterError("the strong laws need centred inputs")
    grid = check_grid(n_grid)
    xs = sampler.stream(int(grid[-1]))
    raw = np.array([fsum(np.sqrt(sample_weights(sampler.spec, int(n))) * xs[:n]) for n in grid])
    nf = grid.astype(float)
    return SLLNTrajectory(grid, sigma, raw / nf ** sigma, raw / np.sqrt(nf * np.log(nf)))


def weighted_lln_check(sampler: WeightedSumSampler, epsilon: float, trials: int, n_jobs: int = 1):
    """Empirical ``P(|A_N^-1 sum w X - A_N^-1 sum w E X| < epsilon)`` over ``trials`` draws."""
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    dist = sampler.distribution
    if dist.kind == "cauchy" or not dist.has_moment(1.0):
        warnings.warn(f"{dist.kind} has no mean; the law of large numbers does not apply",
                      OutsideHypothesisWarning, stacklevel=2)
    n = sampler.n_terms
    coeffs = sample_weights(sampler.spec, n) / normalizer(sampler.spec, n)
    sums = sampler.weighted_sums(trials, coeffs=coeffs, n_jobs=n_jobs)
    centre = (np.full((1, n), dist.mean) * coeffs).sum(axis=1)[0]
    return float(np.mean(np.abs(sums - centre) < epsilon))
