"""Fourier coefficients of a torus parameterization from orbit data."""
from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._numerics import frac_product, fsum_columns
from .averaging import weighted_average
from .dynamics import Rotation, _as_point, translate
from .exceptions import InputDomainError, ParameterError, ShapeError
from .weights import WeightSpec, normalizer, sample_weights

KAPPA = 0.5
HOLDOUT_STRIDE = 97


@dataclass(frozen=True, eq=False)
class FourierRequest:
    """Orbit ``p_n = K(theta0 + n rho)`` (n = 0..N-1) and the modes to extract."""

    orbit: np.ndarray
    rho: Rotation
    theta0: Sequence[float]
    spec: WeightSpec
    modes: Sequence = ()
    precision: str = "standard"

    def __post_init__(self):
        orbit = np.asarray(self.orbit)
        if not np.iscomplexobj(orbit):
            orbit = orbit.astype(float)
        if orbit.ndim == 1:
            orbit = orbit[:, None]
        if orbit.ndim != 2 or orbit.shape[0] < 2:
            raise ShapeError("orbit must hold at least two points")
        if not np.all(np.isfinite(orbit)):
            raise InputDomainError("orbit contains non-finite points")
        object.__setattr__(self, "orbit", orbit)
        object.__setattr__(self, "theta0", tuple(_as_point(self.theta0, self.rho.dimension).tolist()))
        object.__setattr__(self, "modes", tuple(_as_mode(s, self.rho.dimension) for s in self.modes))

    @property
    def n_steps(self):
        return self.orbit.shape[0]

    @property
    def dimension(self):
        return self.rho.dimension


def _as_mode(s, d):
    s = np.atleast_1d(np.asarray(s))
    if s.shape != (d,):
        raise ShapeError(f"mode {s.tolist()} does not match rotation dimension {d}")
    if not np.all(np.mod(s, 1) == 0):
        raise ParameterError(f"mode {s.tolist()} must be integer")
    return tuple(int(v) for v in s)


def _frac_inner(mode, point):
    """``<mode, point> mod 1``, each product in double-double."""
    acc = 0.0
    for k, x in zip(mode, point):
        acc += float(frac_product(np.array([float(k)]), x)[0])
    return acc - math.floor(acc)


def _orbit_phases(mode, rho: Rotation, n_steps):
    """``n <mode, rho> mod 1`` for n < N."""
    n = np.arange(n_steps, dtype=float)
    acc = np.zeros(n_steps)
    for k, r in zip(mode, rho.components):
        if k:
            acc += frac_product(n * k, r)
    return acc - np.floor(acc)


def weighted_fourier_coeff(req: FourierRequest, s):
    """``exp(-2 pi i <s, theta0>) (1/A_N) sum_n w(n/N) p_n exp(-2 pi i n <s, rho>)``.

    The zero mode is computed by :func:`weighted_average` itself.
    """
    mode = _as_mode(s, req.dimension)
    if not any(mode):
        return weighted_average(req.orbit, req.spec, req.n_steps, req.precision).astype(complex)
    w = sample_weights(req.spec, req.n_steps)
    return _mode_coeff(req, mode, w, normalizer(req.spec, req.n_steps))


def _mode_coeff(req, mode, w, a_n):
    """Nonzero-mode estimate with the weights and ``A_N`` supplied by the caller."""
    kernel = np.exp(-2j * np.pi * _orbit_phases(mode, req.rho, req.n_steps))
    total = fsum_columns((w * kernel)[:, None] * req.orbit) / a_n
    return np.exp(-2j * np.pi * _frac_inner(mode, req.theta0)) * total


def admissible_zeta_bound(d: int, spec: WeightSpec) -> Fraction:
    """Exclusive upper limit ``1 / (d + 1 + 1/min(p, q))`` as an exact rational."""
    if d < 1:
        raise ParameterError(f"dimension must be at least 1, got {d}")
    m = spec.min_pq
    inverse = Fraction(0) if math.isinf(m) else 1 / Fraction(m)
    return 1 / (d + 1 + inverse)


def effective_order_budget(n_steps: int, d: int, spec: WeightSpec, zeta, mode="finite", eta=2.0):
    """Mode-norm budget ``N^zeta`` (``mode="finite"``) or ``(log N)^zeta`` (``"truncated"``).

    Admissibility is decided in exact rational arithmetic on the given
    ``zeta``: finite needs ``0 < zeta < 1/(d + 1 + 1/min(p, q))``, truncated
    needs ``2 <= zeta < 1 + eta``.
    """
    if n_steps < 2:
        raise ParameterError(f"N must be at least 2, got {n_steps}")
    z = Fraction(zeta)
    if mode == "finite":
        upper = admissible_zeta_bound(d, spec)
        if not 0 < z < upper:
            raise ParameterError(f"zeta={zeta} outside the admissible interval (0, {upper}) "
                                 f"= (0, {float(upper):.6g})")
        return float(n_steps) ** float(z)
    if mode == "truncated":
        e = Fraction(eta)
        if not 2 <= z < 1 + e:
            raise ParameterError(f"zeta={zeta} outside the admissible interval [2, {1 + e})")
        return math.log(n_steps) ** float(z)
    raise ParameterError(f"mode must be 'finite' or 'truncated', got {mode!r}")


def mode_norm(s, mode="finite", eta=2.0):
    """``||s||_1``, or the weighted ``|s|_eta = sum_j j^eta |s_j|`` on the truncated torus."""
    s = np.abs(np.atleast_1d(np.asarray(s, dtype=float)))
    if mode == "finite":
        return float(s.sum())
    return float(np.sum(np.arange(1, s.size + 1, dtype=float) ** eta * s))


def default_zeta(d: int, spec: WeightSpec) -> Fraction:
    """Nine tenths of the admissible limit."""
    return Fraction(9, 10) * admissible_zeta_bound(d, spec)


def modes_up_to(d: int, max_l1_order: int):
    """All ``s`` in Z^d with ``||s||_1 <= max_l1_order``, ordered by norm then lexicographically."""
    if max_l1_order < 0:
        raise ParameterError("maximal mode order must be non-negative")
    rng = range(-max_l1_order, max_l1_order + 1)
    found = [s for s in itertools.product(rng, repeat=d) if sum(map(abs, s)) <= max_l1_order]
    return sorted(found, key=lambda s: (sum(map(abs, s)), s))


@dataclass(frozen=True, eq=False)
class FourierResult:
    """Per-mode estimates with effective-order flags.

    ``symmetry_defect[i]`` is ``|K(-s) - conj K(s)|_inf`` when ``-s`` is also
    present (NaN otherwise); for real data it is the reported tolerance.
    ``residual`` is the sup reconstruction error at every 97th orbit index.
    """

    modes: np.ndarray
    coeffs: np.ndarray
    effective: np.ndarray
    n_steps: int
    budget: float
    residual: float = math.nan
    symmetry_defect: np.ndarray = field(default=None)

    def coefficient(self, s):
        s = tuple(int(v) for v in np.atleast_1d(s))
        for row, c in zip(self.modes, self.coeffs):
            if tuple(row) == s:
                return c
        raise KeyError(s)

    def to_csv(self):
        d, dim = self.modes.shape[1], self.coeffs.shape[1]
        header = [f"s{j + 1}" for j in range(d)]
        for j in range(dim):
            header += [f"re{j + 1}", f"im{j + 1}"]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header + ["effective_flag"])
        for s, c, eff in zip(self.modes, self.coeffs, self.effective):
            row = [int(v) for v in s]
            for v in c:
                row += [repr(float(v.real)), repr(float(v.imag))]
            writer.writerow(row + [int(bool(eff))])
        return buf.getvalue()


def fourier_spectrum(req: FourierRequest, max_l1_order: int, zeta=None, kappa=KAPPA,
                     n_jobs=1) -> FourierResult:
    """Every mode with ``||s||_1 <= max_l1_order``, flagged beyond-effective at ``||s||_1 >= kappa N^zeta``.

    Raw estimates are returned for all modes; the flag only annotates trust.
    """
    d = req.dimension
    zeta = default_zeta(d, req.spec) if zeta is None else zeta
    budget = effective_order_budget(req.n_steps, d, req.spec, zeta)
    modes = modes_up_to(d, max_l1_order)
    # weights and A_N are shared by every mode; their exact sums dominate the cost
    w = sample_weights(req.spec, req.n_steps)
    a_n = normalizer(req.spec, req.n_steps)

    def one(s):
        return weighted_fourier_coeff(req, s) if not any(s) else _mode_coeff(req, s, w, a_n)

    if n_jobs == 1:
        coeffs = [one(s) for s in modes]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            coeffs = list(pool.map(one, modes))
    coeffs = np.array(coeffs)
    effective = np.array([mode_norm(s) < kappa * budget for s in modes])
    index = {s: i for i, s in enumerate(modes)}
    defect = np.full(len(modes), np.nan)
    for i, s in enumerate(modes):
        j = index.get(tuple(-v for v in s))
        if j is not None:
            defect[i] = float(np.max(np.abs(coeffs[j] - np.conj(coeffs[i]))))
    residual = _holdout_residual(req, np.array(modes), coeffs)
    return FourierResult(np.array(modes, dtype=np.int64).reshape(len(modes), d), coeffs, effective,
                         req.n_steps, budget, residual, defect)


def _holdout_residual(req: FourierRequest, modes, coeffs):
    """Sup error of the truncated series against the orbit at every 97th index."""
    idx = np.arange(0, req.n_steps, HOLDOUT_STRIDE)
    theta = np.atleast_2d(translate(req.theta0, req.rho, idx))
    phases = theta @ modes.T.astype(float)
    recon = np.exp(2j * np.pi * (phases - np.floor(phases))) @ coeffs
    target = req.orbit[idx]
    if not np.iscomplexobj(target):
        recon = recon.real
    return float(np.max(np.abs(recon - target)))


def orbit_from_poly(poly, rho: Rotation, theta0, n_steps):
    """Sample a :class:`TrigPoly` along the orbit of ``theta0``; used to build synthetic requests."""
    theta = np.atleast_2d(translate(theta0, rho, np.arange(n_steps)))
    phases = theta @ poly.freqs.T.astype(float)
    vals = np.exp(2j * np.pi * (phases - np.floor(phases))) @ poly.coeffs
    return vals.real if poly.real else vals
