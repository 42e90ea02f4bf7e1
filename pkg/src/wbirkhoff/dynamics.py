"""Torus translations, trigonometric-polynomial observables and signal sources."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ._numerics import frac_product
from .exceptions import InputDomainError, ParameterError, ShapeError, SignalTooShortError

GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0
BENCHMARK_RHO = math.fmod(1.0 / (2.0 * math.pi), 1.0)


@dataclass(frozen=True)
class Rotation:
    """Rotation vector on the d-torus, components reduced into [0, 1).

    ``nonres_meta`` optionally carries the ``(gamma, tau)`` pair estimated by a
    small-divisor scan.
    """

    components: Tuple[float, ...]
    nonres_meta: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        comps = np.atleast_1d(np.asarray(self.components, dtype=float))
        if comps.ndim != 1 or comps.size == 0:
            raise ShapeError("rotation needs a non-empty vector of components")
        if not np.all(np.isfinite(comps)):
            raise InputDomainError("rotation components must be finite")
        comps = comps - np.floor(comps)
        comps = np.where(comps >= 1.0, 0.0, comps)
        object.__setattr__(self, "components", tuple(float(c) for c in comps))

    @property
    def dimension(self):
        return len(self.components)

    @property
    def vector(self):
        return np.array(self.components)

    def with_meta(self, gamma, tau):
        return Rotation(self.components, (float(gamma), float(tau)))


def _as_point(theta, d):
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape[-1] != d:
        raise ShapeError(f"point of dimension {theta.shape[-1]} does not match rotation dimension {d}")
    if not np.all(np.isfinite(theta)):
        raise InputDomainError("torus point must be finite")
    return theta


def translate(theta, rho: Rotation, n):
    """``theta + n * rho mod 1`` with ``n * rho`` formed in double-double.

    ``n`` may be a scalar (result shape ``(d,)``) or an integer array (result
    shape ``(len(n), d)``).
    """
    theta = _as_point(theta, rho.dimension)
    n_arr = np.asarray(n)
    if n_arr.size and (np.any(n_arr < 0) or not np.all(np.mod(n_arr, 1) == 0)):
        raise ParameterError("translation count must be a non-negative integer")
    steps = np.atleast_1d(n_arr).astype(float)
    shift = np.stack([frac_product(steps, r) for r in rho.components], axis=-1)
    out = theta + shift
    out = out - np.floor(out)
    out = np.where(out >= 1.0, 0.0, out)
    return out[0] if n_arr.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class TrigPoly:
    """Finite trigonometric polynomial ``sum_k c_k exp(2 pi i <k, x>)`` on T^d.

    ``freqs`` is an ``(n_terms, d)`` integer array and ``coeffs`` an
    ``(n_terms, m)`` complex array; ``m`` is the number of output components.
    """

    freqs: np.ndarray
    coeffs: np.ndarray
    real: bool = True

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=np.int64)
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if freqs.ndim == 1:
            freqs = freqs[:, None]
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        if freqs.shape[0] != coeffs.shape[0]:
            raise ShapeError("one coefficient row per frequency is required")
        if not np.all(np.isfinite(coeffs)):
            raise InputDomainError("trigonometric coefficients must be finite")
        # merge repeated frequencies
        uniq, inverse = np.unique(freqs, axis=0, return_inverse=True)
        merged = np.zeros((uniq.shape[0], coeffs.shape[1]), dtype=complex)
        np.add.at(merged, inverse.ravel(), coeffs)
        object.__setattr__(self, "freqs", uniq)
        object.__setattr__(self, "coeffs", merged)
        if self.real:
            lookup = {tuple(k): c for k, c in zip(uniq, merged)}
            scale = max(1.0, float(np.max(np.abs(merged)))) if merged.size else 1.0
            for k, c in lookup.items():
                partner = lookup.get(tuple(-np.asarray(k)), np.zeros_like(c))
                if np.max(np.abs(partner - np.conj(c))) > 1e-12 * scale:
                    raise InputDomainError(f"real polynomial violates c(-k) = conj(c(k)) at k={k}")

    @classmethod
    def from_dict(cls, terms: Dict[Tuple[int, ...], complex], real=True):
        keys = [tuple(np.atleast_1d(k)) for k in terms]
        return cls(np.array(keys), np.array([np.atleast_1d(v) for v in terms.values()]), real)

    @property
    def dimension(self):
        return self.freqs.shape[1]

    @property
    def value_dim(self):
        return self.coeffs.shape[1]

    @property
    def max_l1_order(self):
        return int(np.max(np.abs(self.freqs).sum(axis=1))) if self.freqs.size else 0

    def coefficient(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        hit = np.nonzero(np.all(self.freqs == k, axis=1))[0]
        if hit.size == 0:
            return np.zeros(self.value_dim, dtype=complex)
        return self.coeffs[hit[0]].copy()

    def __call__(self, theta):
        return eval_observable(self, theta)

    # -- serialization -----------------------------------------------------
    def to_json(self):
        terms = []
        for k, c in zip(self.freqs, self.coeffs):
            entry = {"k": [int(v) for v in k]}
            if self.value_dim == 1:
                entry.update(re=float(c[0].real), im=float(c[0].imag))
            else:
                entry.update(re=[float(v.real) for v in c], im=[float(v.imag) for v in c])
            terms.append(entry)
        return json.dumps(terms, indent=1)

    @classmethod
    def from_json(cls, text, real=True):
        terms = json.loads(text)
        if not terms:
            raise InputDomainError("empty trigonometric polynomial")
        freqs = [t["k"] for t in terms]
        coeffs = [np.atleast_1d(t["re"]) + 1j * np.atleast_1d(t.get("im", 0.0)) for t in terms]
        return cls(np.array(freqs), np.array(coeffs), real)


def _phases(freqs, theta):
    """``<k, theta> mod 1`` for every point (rows of theta) and frequency."""
    acc = np.zeros((theta.shape[0], freqs.shape[0]))
    for j in range(freqs.shape[1]):
        acc += theta[:, j:j + 1] * freqs[:, j].astype(float)[None, :]
    return acc - np.floor(acc)


def eval_observable(f: TrigPoly, theta):
    """Value of ``f`` at one point (shape ``(m,)``) or many points (``(P, m)``)."""
    pts = _as_point(theta, f.dimension)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    basis = np.exp(2j * np.pi * _phases(f.freqs, pts))
    vals = basis @ f.coeffs
    if f.real:
        scale = max(1.0, float(np.abs(f.coeffs).sum()))
        if np.max(np.abs(vals.imag), initial=0.0) > 1e-12 * scale:
            raise InputDomainError("real-flagged observable produced an imaginary residue")
        vals = vals.real
    return vals[0] if single else vals


def true_average(f: TrigPoly):
    """Spatial mean of ``f``: its zero-frequency coefficient."""
    c0 = f.coefficient(np.zeros(f.dimension, dtype=np.int64))
    return c0.real if f.real else c0


def benchmark_observable():
    """``f(x) = sin(2 pi x) + cos(10 pi x)`` on the circle."""
    return TrigPoly.from_dict({(1,): -0.5j, (-1,): 0.5j, (5,): 0.5, (-5,): 0.5})


# -- signal sources -------------------------------------------------------------

class SignalSource:
    """Reproducible producer of the sequence ``f_n``, n = 0, 1, ...

    Subclasses implement :meth:`samples`, returning an ``(N, m)`` array.
    """

    max_length: Optional[int] = None
    value_dim: int = 1

    def samples(self, n_steps: int) -> np.ndarray:
        raise NotImplementedError

    def _check_length(self, n_steps):
        if n_steps < 0:
            raise ParameterError("sample count must be non-negative")
        if self.max_length is not None and n_steps > self.max_length:
            raise SignalTooShortError(f"signal supplies {self.max_length} samples, {n_steps} requested")

    def __getitem__(self, n):
        return self.samples(n + 1)[n]

    @property
    def reference(self):
        """Known exact mean of the signal, or None."""
        return None


@dataclass(frozen=True, eq=False)
class OrbitObservable(SignalSource):
    poly: TrigPoly
    rotation: Rotation
    theta0: Tuple[float, ...] = ()
    max_length: Optional[int] = None

    def __post_init__(self):
        if self.poly.dimension != self.rotation.dimension:
            raise ShapeError("observable and rotation dimensions differ")
        theta0 = self.theta0 if len(self.theta0) else (0.0,) * self.rotation.dimension
        theta0 = _as_point(theta0, self.rotation.dimension)
        object.__setattr__(self, "theta0", tuple(float(t) for t in theta0))

    @property
    def value_dim(self):
        return self.poly.value_dim

    def points(self, n_steps):
        self._check_length(n_steps)
        return translate(self.theta0, self.rotation, np.arange(n_steps))

    def samples(self, n_steps):
        vals = eval_observable(self.poly, self.points(n_steps))
        return vals.reshape(n_steps, self.value_dim)

    @property
    def reference(self):
        return true_average(self.poly)


@dataclass(frozen=True, eq=False)
class PeriodicTable(SignalSource):
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape[0] < 1:
            raise InputDomainError("periodic table must hold at least one value")
        if not np.all(np.isfinite(vals)):
            raise InputDomainError("periodic table values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def period(self):
        return self.values.shape[0]

    @property
    def value_dim(self):
        return self.values.shape[1]

    def samples(self, n_steps):
        self._check_length(n_steps)
        return self.values[np.arange(n_steps) % self.period]

    @property
    def reference(self):
        return self.values.mean(axis=0)


@dataclass(frozen=True, eq=False)
class Recorded(SignalSource):
    data: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.data)
        if not np.iscomplexobj(vals):
            vals = vals.astype(float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape[0] == 0:
            raise InputDomainError("recorded signal is empty")
        if not np.all(np.isfinite(vals)):
            raise InputDomainError("recorded samples must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "data", vals)

    @property
    def max_length(self):
        return self.data.shape[0]

    @property
    def value_dim(self):
        return self.data.shape[1]

    def samples(self, n_steps):
        self._check_length(n_steps)
        return self.data[:n_steps]


@dataclass(frozen=True, eq=False)
class FlowSampler(SignalSource):
    """Continuous-time observable ``t -> f(t)`` sampled at ``t = n * step``."""

    func: Callable[[np.ndarray], np.ndarray]
    step: float = 1e-3
    value_dim: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.step) and self.step > 0):
            raise ParameterError(f"flow step must be positive, got {self.step!r}")

    def at(self, t):
        vals = np.asarray(self.func(np.asarray(t, dtype=float)))
        vals = vals.reshape(np.size(t), self.value_dim)
        if not np.all(np.isfinite(vals)):
            raise InputDomainError("flow produced non-finite samples")
        return vals

    def samples(self, n_steps):
        self._check_length(n_steps)
        return self.at(np.arange(n_steps) * self.step)


def make_signal(kind: str, **params) -> SignalSource:
    """Build a signal source by name: ``orbit``, ``periodic``, ``recorded``, ``flow``, ``const``."""
    if kind == "orbit":
        rotation = params["rotation"]
        if not isinstance(rotation, Rotation):
            rotation = Rotation(np.atleast_1d(rotation))
        return OrbitObservable(params["poly"], rotation, tuple(np.atleast_1d(params.get("theta0", ()))))
    if kind == "periodic":
        return PeriodicTable(params["values"])
    if kind == "recorded":
        return Recorded(params["samples"])
    if kind == "flow":
        return FlowSampler(params["func"], params.get("step", 1e-3), params.get("value_dim", 1))
    if kind == "const":
        return PeriodicTable([params["value"]])
    raise ParameterError(f"unknown signal kind {kind!r}")


def benchmark_signal():
    """The two-frequency benchmark orbit: ``sin 2 pi x + cos 10 pi x`` along rho = frac(1/2pi), theta0 = 0."""
    return OrbitObservable(benchmark_observable(), Rotation((BENCHMARK_RHO,)), (0.0,))


def read_csv_samples(path):
    """Load one sample row per line (header optional) into a 2-D float array."""
    text = Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise InputDomainError(f"{path} holds no samples")
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        rows = rows[1:]
    try:
        data = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise InputDomainError(f"non-numeric sample in {path}") from exc
    if data.size == 0:
        raise InputDomainError(f"{path} holds no samples")
    return data
