"""Convergence-model fitting, regular/chaotic classification and the C1..C4 bound."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Tuple

import numpy as np

from ._numerics import fsum, fsum_columns
from .averaging import PRECISION_FLOOR, ErrorCurve, _samples, check_grid, log_grid
from .dynamics import TrigPoly
from .exceptions import DivergingBoundError, ParameterError
from .weights import WeightKind, WeightSpec, derivative_l1_norm, normalizer, sample_weights

ZETA_GRID = np.round(np.arange(5, 101) / 100.0, 2)
MIN_POINTS = 5
R2_THRESHOLD = 0.9
CHAOS_BAND = (0.3, 0.7)
REGULAR_MIN_M = 1.5


@dataclass(frozen=True)
class RateFit:
    """Winning convergence model for an error curve.

    ``model`` is ``"exponential"`` (log err = log C - c N^zeta),
    ``"polynomial"`` (log err = log C - m log N), ``"nlogn"``
    (log err = log C - c N / log N) or ``"inconclusive"``.
    """

    model: str
    r_squared: float = 0.0
    c: float = math.nan
    zeta: float = math.nan
    m: float = math.nan
    log_prefactor: float = math.nan
    n_range_used: Tuple[int, int] = (0, 0)
    floor_truncated: bool = False
    reason: str = ""
    candidates: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def zeta_or_m(self):
        return self.m if self.model == "polynomial" else self.zeta

    def predict(self, n):
        n = np.asarray(n, dtype=float)
        if self.model == "exponential":
            return np.exp(self.log_prefactor - self.c * n ** self.zeta)
        if self.model == "polynomial":
            return np.exp(self.log_prefactor - self.m * np.log(n))
        if self.model == "nlogn":
            return np.exp(self.log_prefactor - self.c * n / np.log(n))
        raise ValueError("an inconclusive fit has no prediction")

    def to_json(self):
        def num(x):
            return None if x is None or (isinstance(x, float) and math.isnan(x)) else x

        payload = {"model": self.model, "c": num(self.c), "zeta_or_m": num(self.zeta_or_m),
                   "r2": self.r_squared, "floor_truncated": self.floor_truncated}
        return json.dumps(payload, sort_keys=True)


def _linfit(x, y):
    """Least squares ``y = a + b x``; returns (a, b, r^2)."""
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0.0:
        return ym, 0.0, 0.0
    b = np.sum((x - xm) * (y - ym)) / sxx
    a = ym - b * xm
    ss_tot = np.sum((y - ym) ** 2)
    if ss_tot == 0.0:
        return a, b, 0.0
    r2 = 1.0 - np.sum((y - a - b * x) ** 2) / ss_tot
    return a, b, float(max(0.0, r2))


def _usable(n, err, flags, trim_transient):
    """Indices fitted: before the first floor point, from the largest error onward."""
    stop = np.nonzero(flags | (err <= 0))[0]
    end = stop[0] if stop.size else n.size
    idx = np.arange(end)
    if trim_transient and idx.size:
        idx = idx[int(np.argmax(err[idx])):]
    return idx, bool(stop.size)


def fit_rate(curve, errors=None, floor_flag=None, *, trim_transient=True, include_nlogn=False,
             min_points=MIN_POINTS, models=("exponential", "polynomial")):
    """Fit exponential and polynomial decay models to an error curve.

    Accepts an :class:`ErrorCurve` or ``(n_grid, errors[, floor_flag])``.
    Points at or after the first floor-flagged entry are discarded, and with
    ``trim_transient`` so is the pre-asymptotic rise before the largest error.
    The exponential exponent is scanned over 0.05, 0.06, ..., 1.00.
    ``models`` restricts the candidates; ``include_nlogn`` adds the
    ``N / log N`` model used for the double-exponential weight.
    """
    if isinstance(curve, ErrorCurve):
        n, err, flags = curve.n_grid, curve.errors, curve.floor_flag
    else:
        n = np.asarray(curve)
        err = np.asarray(errors, dtype=float)
        flags = err < PRECISION_FLOOR if floor_flag is None else np.asarray(floor_flag, dtype=bool)
    n = np.asarray(n, dtype=float)
    err = np.asarray(err, dtype=float)
    idx, truncated = _usable(n, err, np.asarray(flags, dtype=bool), trim_transient)
    if idx.size < min_points:
        return RateFit("inconclusive", floor_truncated=truncated,
                       reason=f"{idx.size} usable points, {min_points} required")
    nn, y = n[idx], np.log(err[idx])
    span = (int(nn[0]), int(nn[-1]))
    candidates = {}

    best_exp = None
    for zeta in ZETA_GRID if "exponential" in models else ():
        a, b, r2 = _linfit(nn ** zeta, y)
        if b < 0 and (best_exp is None or r2 > best_exp[3]):
            best_exp = (float(zeta), a, -b, r2)
    if best_exp is not None:
        candidates["exponential"] = best_exp[3]
    a, b, r2_poly = _linfit(np.log(nn), y)
    poly = (a, -b, r2_poly) if b < 0 and "polynomial" in models else None
    if poly is not None:
        candidates["polynomial"] = r2_poly
    nlogn = None
    if include_nlogn:
        a2, b2, r2_nl = _linfit(nn / np.log(nn), y)
        if b2 < 0:
            nlogn = (a2, -b2, r2_nl)
            candidates["nlogn"] = r2_nl

    if not candidates or max(candidates.values()) < R2_THRESHOLD:
        return RateFit("inconclusive", r_squared=max(candidates.values(), default=0.0),
                       n_range_used=span, floor_truncated=truncated,
                       reason="no model reaches r^2 >= 0.9", candidates=candidates)
    winner = max(candidates, key=candidates.get)
    if winner == "exponential":
        zeta, a, c, r2 = best_exp
        return RateFit("exponential", r2, c=c, zeta=zeta, log_prefactor=a, n_range_used=span,
                       floor_truncated=truncated, candidates=candidates)
    if winner == "polynomial":
        a, m, r2 = poly
        return RateFit("polynomial", r2, m=m, log_prefactor=a, n_range_used=span,
                       floor_truncated=truncated, candidates=candidates)
    a, c, r2 = nlogn
    return RateFit("nlogn", r2, c=c, log_prefactor=a, n_range_used=span,
                   floor_truncated=truncated, candidates=candidates)


def theoretical_zeta(spec: WeightSpec):
    """Exponent ``(1 + 1/min(p, q))^-1`` of the trig-polynomial and periodic rates."""
    return 1.0 / (1.0 + 1.0 / spec.min_pq)


# -- classification -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OrbitClass:
    label: str
    evidence: RateFit
    proxy: ErrorCurve


def self_difference_curve(signal, spec: WeightSpec, n_grid, n_offsets=8):
    """Reference-free error proxy ``|WB_2N - WB_N|``.

    At each N the difference is maximized over ``n_offsets`` starting indices
    ``j N / n_offsets`` (the sup over initial phases), then replaced by its
    tail supremum over the grid. Both steps suppress the isolated dips of
    oscillating or random proxies without changing their decay order.
    """
    grid = check_grid(n_grid)
    samples = _samples(signal, 3 * int(grid[-1]))
    diffs = []
    for n in grid:
        n = int(n)
        w_short, w_long = sample_weights(spec, n), sample_weights(spec, 2 * n)
        a_short, a_long = normalizer(spec, n), normalizer(spec, 2 * n)
        worst = 0.0
        for j in range(n_offsets):
            start = j * n // n_offsets
            long_avg = fsum_columns(w_long[:, None] * samples[start:start + 2 * n]) / a_long
            short_avg = fsum_columns(w_short[:, None] * samples[start:start + n]) / a_short
            worst = max(worst, float(np.max(np.abs(long_avg - short_avg))))
        diffs.append(worst)
    diffs = np.array(diffs)
    envelope = np.maximum.accumulate(diffs[::-1])[::-1]
    return ErrorCurve(grid, envelope, np.zeros(1), envelope < PRECISION_FLOOR)


def terminal_slope(fit: RateFit):
    """``-d log(err) / d log N`` of the fitted model at the last fitted N."""
    n_end = float(fit.n_range_used[1])
    if fit.model == "exponential":
        return fit.c * fit.zeta * n_end ** fit.zeta
    if fit.model == "polynomial":
        return fit.m
    if fit.model == "nlogn":
        return fit.c * n_end * (math.log(n_end) - 1.0) / math.log(n_end) ** 2
    return math.nan


def classify_orbit(signal, spec: WeightSpec, n_grid=None) -> OrbitClass:
    """Label a signal ``regular``, ``chaotic`` or ``indeterminate`` from its decay signature.

    Regular: the proxy starts at the precision floor, or an exponential model
    wins with a terminal log-log slope of at least 1.5. An exponential winner
    flatter than that cannot be told apart from a power law over the measured
    range, so the power-law fit decides: exponent in [0.3, 0.7] is chaotic,
    at least 1.5 is regular.
    """
    if n_grid is None:
        n_grid = log_grid(16, 1 << 14, per_octave=4)
    proxy = self_difference_curve(signal, spec, n_grid)
    fit = fit_rate(proxy)
    if proxy.floor_flag[0]:
        return OrbitClass("regular", fit, proxy)
    if fit.model == "inconclusive" and fit.floor_truncated and fit.n_range_used == (0, 0):
        # reached the floor before enough points accumulated
        return OrbitClass("regular", fit, proxy)
    if fit.model in ("exponential", "nlogn") and terminal_slope(fit) >= REGULAR_MIN_M:
        return OrbitClass("regular", fit, proxy)
    power = fit_rate(proxy, models=("polynomial",))
    if power.model == "polynomial":
        if CHAOS_BAND[0] <= power.m <= CHAOS_BAND[1]:
            return OrbitClass("chaotic", power, proxy)
        if power.m >= REGULAR_MIN_M:
            return OrbitClass("regular", power, proxy)
    return OrbitClass("indeterminate", fit, proxy)


# -- theoretical bound -------------------------------------------------------------

@dataclass(frozen=True)
class BoundCoefficients:
    c1: float
    c2: float
    c3: float
    c4: float
    order: int

    @property
    def coefficient(self):
        return self.c1 * self.c2 * self.c3 * self.c4

    def bound(self, n):
        return self.coefficient * np.asarray(n, dtype=float) ** -self.order


@lru_cache(maxsize=None)
def _sup_n_over_a(spec: WeightSpec, n_max=10**4):
    # a sup estimate: pairwise summation is accurate enough and far cheaper than exact sums
    return max(n / float(np.sum(sample_weights(spec, n))) for n in range(2, n_max + 1))


def _decay_norms(fourier_decay):
    if isinstance(fourier_decay, TrigPoly):
        return {tuple(int(v) for v in k): float(np.max(np.abs(c)))
                for k, c in zip(fourier_decay.freqs, fourier_decay.coeffs)}
    out = {}
    for k, v in fourier_decay.items():
        out[tuple(int(x) for x in np.atleast_1d(k))] = float(v)
    return out


def bound_coefficients(spec: WeightSpec, m: int, gamma: float, tau: float,
                       fourier_decay) -> BoundCoefficients:
    """The four factors of the ``C1 C2 C3 C4 N^-m`` upper bound.

    ``fourier_decay`` maps frequency vectors to ``||f^(k)||_inf`` (or is a
    :class:`TrigPoly`); C4 is summed over its nonzero frequencies with
    ``Delta(x) = x^tau``.
    """
    if isinstance(m, bool) or int(m) != m or m < 2:
        raise ParameterError(f"the bound needs an integer order m >= 2, got {m!r}")
    m = int(m)
    if not (gamma > 0 and np.isfinite(gamma)):
        raise ParameterError(f"gamma must be positive, got {gamma!r}")
    if not np.isfinite(tau):
        raise ParameterError("tau must be finite")
    if spec.kind is WeightKind.UNIFORM:
        raise DivergingBoundError(
            "uniform weights are discontinuous at the endpoints: C2 = ||D^m w||_L1 is infinite "
            "for m >= 2 (the m = 1 jump total is 2), so the bound's premises fail")
    norms = _decay_norms(fourier_decay)
    terms = []
    for k, v in norms.items():
        if not any(k):
            continue
        if not np.isfinite(v):
            raise DivergingBoundError(f"infinite Fourier norm at k={k}")
        terms.append(v * float(sum(abs(x) for x in k)) ** (tau * m))
    c4 = fsum(terms)
    if not np.isfinite(c4):
        raise DivergingBoundError("C4 diverges under the given decay")
    c1 = _sup_n_over_a(spec)
    c2 = derivative_l1_norm(spec, m)
    c3 = (2.0 * math.pi * gamma) ** -m
    return BoundCoefficients(c1, c2, c3, c4, m)


def theoretical_bound(spec: WeightSpec, m: int, gamma: float, tau: float, fourier_decay) -> float:
    """Coefficient ``C1 C2 C3 C4`` multiplying ``N^-m``."""
    return bound_coefficients(spec, m, gamma, tau, fourier_decay).coefficient
