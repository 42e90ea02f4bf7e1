"""Trigonometric interpolation of periodic data and its weighted-average convergence."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._numerics import fsum
from .averaging import ErrorCurve, error_curve
from .dynamics import PeriodicTable
from .exceptions import InputDomainError, ParameterError
from .ratefit import RateFit, fit_rate, theoretical_zeta
from .weights import WeightSpec, _check_n_steps, normalizer, sample_weights

DEFAULT_PERIODS = 64


class ResonantModeWarning(UserWarning):
    """A zero frequency was passed where a nonzero mode is expected."""


def unit_root(r, period):
    """``(cos, sin)`` of ``2 pi r / period`` for integer ``r``.

    Reduced mod ``period`` in integers, folded so that conjugate residues give
    exactly negated sines, and exact at the quarter and half turns.
    """
    r = np.mod(np.asarray(r, dtype=np.int64), period)
    flip = 2 * r > period
    folded = np.where(flip, period - r, r)
    angle = 2.0 * np.pi * folded / period
    c, s = np.cos(angle), np.sin(angle)
    c = np.where(4 * folded == period, 0.0, c)
    s = np.where(4 * folded == period, 1.0, s)
    c = np.where(2 * folded == period, -1.0, c)
    s = np.where((2 * folded == period) | (folded == 0), 0.0, s)
    c = np.where(folded == 0, 1.0, c)
    return c, np.where(flip, -s, s)


def half_order(period):
    """Highest harmonic ``M_T``: ``T/2`` for even ``T``, ``(T-1)/2`` for odd."""
    return period // 2


def interpolation_basis(period):
    """Columns ``V_0, V_1, ..., V_{T-1}`` sampled at ``n = 0..T-1``.

    ``V_0`` is constant, ``V_{2l-1}`` is ``cos(2 pi l n / T)`` and ``V_{2l}`` is
    ``sin(2 pi l n / T)``. For even ``T`` the last column is the alternating
    cosine of order ``T/2``, whose sine partner vanishes on the grid.
    """
    if period < 1:
        raise InputDomainError("period must be at least 1")
    n = np.arange(period)
    basis = np.empty((period, period))
    basis[:, 0] = 1.0
    for l in range(1, half_order(period) + 1):
        c, s = unit_root(l * n, period)
        basis[:, 2 * l - 1] = c
        if 2 * l < period:
            basis[:, 2 * l] = s
    return basis


@dataclass(frozen=True)
class TrigInterp:
    """``f(n) = a0 + sum_k a_k cos(2 pi k n / T) + b_k sin(2 pi k n / T)``."""

    period: int
    a0: float
    a: tuple
    b: tuple

    def evaluate(self, n):
        n = np.asarray(n, dtype=float)
        out = np.full(n.shape, self.a0)
        for k, ak in enumerate(self.a, start=1):
            out = out + ak * np.cos(2.0 * np.pi * k * n / self.period)
        for k, bk in enumerate(self.b, start=1):
            out = out + bk * np.sin(2.0 * np.pi * k * n / self.period)
        return out

    def to_json(self):
        return json.dumps({"T": self.period, "a0": self.a0, "a": list(self.a), "b": list(self.b)},
                          sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(int(data["T"]), float(data["a0"]), tuple(data["a"]), tuple(data["b"]))


def trig_interpolate(values) -> TrigInterp:
    """Interpolating trigonometric polynomial of one period of data.

    Each coefficient is the projection ``V_j . f / V_j . V_j`` onto the
    orthogonal basis, so ``a0`` is exactly the rounded mean of the data.
    The higher projections act on the centred data, which is the same
    quantity in exact arithmetic.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise InputDomainError("periodic data must be one-dimensional")
    if values.size == 0:
        raise InputDomainError("periodic data is empty")
    if not np.all(np.isfinite(values)):
        raise InputDomainError("periodic data must be finite")
    period = values.size
    basis = interpolation_basis(period)
    a0 = fsum(values) / period
    # the mean is removed before projecting, so rounding in the sampled basis cannot leak it
    centred = values - a0
    coeffs = [a0] + [fsum(basis[:, j] * centred) / fsum(basis[:, j] ** 2) for j in range(1, period)]
    m = half_order(period)
    a = tuple(coeffs[2 * l - 1] for l in range(1, m + 1))
    b = tuple(coeffs[2 * l] for l in range(1, m + 1) if 2 * l < period)
    return TrigInterp(period, coeffs[0], a, b)


@dataclass(frozen=True, eq=False)
class PeriodicErrorResult:
    curve: ErrorCurve
    fit: RateFit
    zeta_theory: float
    interp: TrigInterp



def periodic_weighted_error(values, spec: WeightSpec, n_grid=None, precision="standard") -> PeriodicErrorResult:
    """Weighted-average error of periodic data against its interpolation mean ``a0``.

    The default grid is the first 64 multiples of ``T``. Off multiples the
    symmetric weight can cancel a mode exactly (odd N for ``T = 2``), which
    hides the decay the fit is meant to measure.
    """
    interp = trig_interpolate(values)
    if n_grid is None:
        n_grid = interp.period * np.arange(max(1, 2 // interp.period), DEFAULT_PERIODS + 1)
    table = PeriodicTable(np.asarray(values, dtype=float))
    curve = error_curve(table, spec, n_grid, reference=interp.a0, precision=precision)
    return PeriodicErrorResult(curve, fit_rate(curve), theoretical_zeta(spec), interp)


def mode_sum_smallness(k_over_t, spec: WeightSpec, n_steps: int) -> float:
    """``|(1/A_N) sum_{n<N} w(n/N) exp(2 pi i k n / T)|`` for a rational ``k/T``.

    Phases are reduced mod 1 in exact integer arithmetic. ``k = 0`` returns 1
    with a :class:`ResonantModeWarning`.
    """
    ratio = Fraction(k_over_t)
    if abs(ratio) > Fraction(1, 2):
        raise ParameterError(f"|k/T| must not exceed 1/2, got {ratio}")
    n_steps = _check_n_steps(n_steps)
    if ratio == 0:
        warnings.warn("k = 0 is the resonant mode; its kernel is 1", ResonantModeWarning, stacklevel=2)
        return 1.0
    k, period = ratio.numerator, ratio.denominator
    n = np.arange(n_steps, dtype=np.int64)
    c, s = unit_root((n * k) % period, period)
    w = sample_weights(spec, n_steps)
    return math.hypot(fsum(w * c), fsum(w * s)) / normalizer(spec, n_steps)
