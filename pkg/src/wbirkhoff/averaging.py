"""Weighted and plain Birkhoff averages, error curves and the Toeplitz counterexample."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._numerics import exact_products_sum_columns, fsum_columns
from .dynamics import FlowSampler, SignalSource
from .exceptions import BudgetError, InputDomainError, ParameterError, SignalTooShortError
from .weights import WeightSpec, _check_n_steps, eval_weight, normalizer, sample_weights

PRECISION_FLOOR = 1e-14
MAX_FLOW_SAMPLES = 10**8


def _samples(signal, n_steps):
    """First ``n_steps`` samples of a signal source or array, as an ``(N, m)`` array."""
    if isinstance(signal, SignalSource):
        vals = signal.samples(n_steps)
    else:
        vals = np.asarray(signal)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape[0] < n_steps:
            raise SignalTooShortError(f"signal supplies {vals.shape[0]} samples, {n_steps} requested")
        vals = vals[:n_steps]
    if not np.all(np.isfinite(vals)):
        raise InputDomainError("signal contains non-finite samples")
    return vals


def _check_precision(precision):
    if precision not in ("standard", "extended"):
        raise ParameterError(f"precision must be 'standard' or 'extended', got {precision!r}")


def weighted_sum(weights, values, precision="standard"):
    """Column sums of ``weights * values``; exactly rounded in fixed order."""
    _check_precision(precision)
    if precision == "extended":
        return exact_products_sum_columns(weights, values)
    return fsum_columns(np.asarray(weights)[:, None] * values)


def weighted_average(signal, spec: WeightSpec, n_steps: int, precision="standard"):
    """``(1/A_N) sum_{n<N} w(n/N) f_n`` for each output component.

    ``precision="extended"`` keeps every product ``w * f`` error-free before
    the exactly rounded summation.
    """
    n_steps = _check_n_steps(n_steps)
    vals = _samples(signal, n_steps)
    weights = sample_weights(spec, n_steps)
    return weighted_sum(weights, vals, precision) / normalizer(spec, n_steps)


def unweighted_average(signal, n_steps: int):
    """Plain mean ``(1/N) sum_{n<N} f_n``."""
    n_steps = _check_n_steps(n_steps, minimum=1)
    return fsum_columns(_samples(signal, n_steps)) / n_steps


@dataclass(frozen=True)
class ContinuousAverage:
    value: np.ndarray
    quadrature_error: float
    n_samples: int


def weighted_average_continuous(flow: FlowSampler, spec: WeightSpec, horizon: float, step: float):
    """``(1/T) int_0^T w(s/T) f(s) ds`` by the composite midpoint rule.

    The step is adjusted to ``T / round(T / step)``. The attached
    ``quadrature_error`` is the difference from the same rule at twice the
    step, reported separately from any convergence claim.
    """
    if not (np.isfinite(horizon) and horizon > 0):
        raise ParameterError(f"horizon must be positive, got {horizon!r}")
    if not (np.isfinite(step) and step > 0):
        raise ParameterError(f"step must be positive, got {step!r}")
    if horizon / step > MAX_FLOW_SAMPLES:
        raise BudgetError(f"horizon/step = {horizon / step:.3g} exceeds {MAX_FLOW_SAMPLES:.0e} samples")
    n_cells = max(2, int(round(horizon / step)))

    def midpoint(cells):
        chunk = 1 << 20
        parts = []
        for start in range(0, cells, chunk):
            j = np.arange(start, min(start + chunk, cells))
            u = (j + 0.5) / cells
            vals = flow.at(u * horizon)
            parts.append(np.asarray(eval_weight(spec, u))[:, None] * vals)
        cols = np.concatenate(parts, axis=0)
        return fsum_columns(cols) / cells

    value = midpoint(n_cells)
    coarse = midpoint(n_cells // 2)
    return ContinuousAverage(value, float(np.max(np.abs(value - coarse))), n_cells)


@dataclass(frozen=True, eq=False)
class ErrorCurve:
    """Per-N sup-norm distance of the weighted average to a reference."""

    n_grid: np.ndarray
    errors: np.ndarray
    reference: np.ndarray
    floor_flag: np.ndarray

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["N", "error", "floor_flag"])
        for n, e, f in zip(self.n_grid, self.errors, self.floor_flag):
            writer.writerow([int(n), repr(float(e)), int(bool(f))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, reference=None):
        rows = list(csv.DictReader(io.StringIO(text)))
        n = np.array([int(r["N"]) for r in rows])
        e = np.array([float(r["error"]) for r in rows])
        flags = np.array([bool(int(r["floor_flag"])) for r in rows])
        ref = np.zeros(1) if reference is None else np.atleast_1d(reference)
        return cls(n, e, ref, flags)


def check_grid(n_grid, minimum=2):
    grid = np.asarray(n_grid)
    if grid.size == 0:
        raise ParameterError("N grid is empty")
    if grid.ndim != 1 or not np.all(np.mod(grid, 1) == 0):
        raise ParameterError("N grid must be a 1-D integer array")
    grid = grid.astype(np.int64)
    if np.any(np.diff(grid) <= 0):
        raise ParameterError("N grid must be strictly increasing")
    if grid[0] < minimum:
        raise ParameterError(f"N grid entries must be at least {minimum}")
    return grid


def log_grid(lo, hi, per_octave=1):
    """Integers spaced geometrically from ``lo`` to ``hi`` (both kept)."""
    count = int(round(per_octave * math.log2(hi / lo))) + 1
    return np.unique(np.round(np.geomspace(lo, hi, count)).astype(np.int64))


def error_curve(signal, spec: WeightSpec, n_grid, reference=None, precision="standard", n_jobs=1,
                floor=None):
    """Weighted-average error at each N of ``n_grid``.

    Each N is recomputed from scratch (A_N changes with N), costing
    ``O(sum(n_grid))``. ``reference`` defaults to the signal's known mean.
    Errors below ``floor`` (default ``1e-14 * max(1, |reference|)``) are
    flagged as rounding-dominated but kept as computed.
    """
    grid = check_grid(n_grid)
    if reference is None:
        reference = getattr(signal, "reference", None)
        if reference is None:
            raise ParameterError("a reference value is required for this signal")
    reference = np.atleast_1d(np.asarray(reference))
    samples = _samples(signal, int(grid[-1]))

    def one(n):
        avg = weighted_average(samples, spec, int(n), precision)
        return float(np.max(np.abs(avg - reference)))

    if n_jobs == 1:
        errors = [one(n) for n in grid]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            errors = list(pool.map(one, grid))
    errors = np.array(errors)
    if floor is None:
        floor = PRECISION_FLOOR * max(1.0, float(np.max(np.abs(reference))))
    return ErrorCurve(grid, errors, reference, errors < floor)


def toeplitz_sequence(n_steps):
    """``a_n = n b_n - (n-1) b_{n-1}`` with ``b_n = 1`` exactly at n = 10, 100, ..."""
    a = np.zeros(n_steps)
    spike = 10
    while spike < n_steps:
        a[spike] += spike
        if spike + 1 < n_steps:
            a[spike + 1] -= spike
        spike *= 10
    return a


def toeplitz_counterexample(n_steps: int, spec: WeightSpec | None = None):
    """Return ``(weighted, unweighted)`` averages of :func:`toeplitz_sequence` at N.

    The plain mean equals ``b_{N-1} (N-1)/N``: about 1 right after a spike and 0
    elsewhere, while the weighted mean tends to 0.
    """
    n_steps = _check_n_steps(n_steps, minimum=10)
    spec = WeightSpec.bump(1.0, 1.0) if spec is None else spec
    a = toeplitz_sequence(n_steps)
    weighted = float(weighted_average(a, spec, n_steps)[0])
    unweighted = float(unweighted_average(a, n_steps)[0])
    return weighted, unweighted
