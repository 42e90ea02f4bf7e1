"""Continued fractions, rotations with prescribed arithmetic and small-divisor scans."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple

import numpy as np

from .dynamics import Rotation
from .exceptions import BudgetError, InputDomainError, ParameterError

MAX_DEPTH = 40
MAX_K_1D = 10**4
MAX_L1_MULTI = 30
MAX_SCAN_VECTORS = 2_000_000
MAX_PRODUCT_DIM = 8


def continued_fraction(x, depth: int = MAX_DEPTH) -> Tuple[List[int], bool]:
    """Partial quotients ``a_1, ..., a_depth`` of ``x`` in (0, 1).

    The expansion runs on the exact rational value of ``x``. It stops early,
    with ``exact_flag`` set, once a convergent rounds to ``x`` itself: past
    that point the input cannot be told apart from a rational.
    """
    if not 1 <= depth <= MAX_DEPTH:
        raise ParameterError(f"depth must lie in [1, {MAX_DEPTH}], got {depth}")
    value = Fraction(x)
    if not 0 < value < 1:
        raise InputDomainError(f"x must lie in (0, 1), got {x}")
    target = float(value)
    quotients = []
    rest = value
    p_prev, q_prev, p, q = 1, 0, 0, 1
    while len(quotients) < depth:
        inv = 1 / rest
        a = math.floor(inv)
        quotients.append(a)
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
        rest = inv - a
        if rest == 0 or p / q == target:
            return quotients, True
    return quotients, False


def convergents(quotients) -> List[Tuple[int, int]]:
    """``(p_j, q_j)`` of ``[0; a_1, a_2, ...]``."""
    out = []
    p_prev, q_prev, p, q = 1, 0, 0, 1
    for a in quotients:
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
        out.append((p, q))
    return out


def rotation_from_quotients(quotients) -> Tuple[Rotation, bool]:
    """The number ``[0; a_1, a_2, ...]`` as a rotation, and a truncation flag.

    Convergents are exact integers. The flag is set when later quotients move
    the convergent by less than half an ulp, so that part of the expansion is
    lost in the double result.
    """
    quotients = [int(a) for a in quotients]
    if not quotients:
        raise ParameterError("at least one quotient is required")
    if any(a < 1 for a in quotients):
        raise ParameterError("partial quotients must be positive integers")
    conv = convergents(quotients)
    p, q = conv[-1]
    value = p / q
    truncated = False
    for (p0, q0), (p1, q1) in zip(conv, conv[1:]):
        # consecutive convergents differ by exactly 1/(q0 q1)
        if 1.0 / (q0 * q1) < 0.5 * math.ulp(value):
            truncated = True
            break
    return Rotation((value,)), truncated


@dataclass(frozen=True, eq=False)
class SmallDivisorScan:
    """Divisors ``min_n |<k, rho> - n|`` over a half lattice, with a fitted ``(gamma, tau)``.

    ``gamma`` is the largest double with ``divisor >= gamma ||k||_1^-tau`` on every row.
    """

    k_max: int
    ks: np.ndarray
    divisors: np.ndarray
    gamma: float
    tau: float
    resonant: bool
    record_index: np.ndarray

    @property
    def norms(self):
        return np.abs(self.ks).sum(axis=1)

    @property
    def records(self):
        return self.ks[self.record_index], self.divisors[self.record_index]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"k{j + 1}" for j in range(self.ks.shape[1])] + ["divisor"])
        for k, dv in zip(self.ks, self.divisors):
            writer.writerow([int(v) for v in k] + [repr(float(dv))])
        return buf.getvalue()

    def to_json(self):
        def num(x):
            return None if math.isnan(x) else x

        return json.dumps({"gamma": num(self.gamma), "tau": num(self.tau),
                           "resonant_flag": self.resonant}, sort_keys=True)


def _l1_sphere(d, r):
    """Integer vectors of dimension ``d`` with ``||k||_1 = r``."""
    if d == 1:
        return [(r,), (-r,)] if r else [(0,)]
    out = []
    for head in range(-r, r + 1):
        for tail in _l1_sphere(d - 1, r - abs(head)):
            out.append((head,) + tail)
    return out


def _l1_ball_size(d, r):
    """Number of integer points with ``||k||_1 <= r`` (Delannoy-type count)."""
    return sum(math.comb(d, i) * math.comb(r, i) * 2**i for i in range(min(d, r) + 1))


def half_lattice(d, l1_max):
    """Nonzero ``k`` with ``||k||_1 <= l1_max`` and first nonzero entry positive, by norm."""
    out = []
    for r in range(1, l1_max + 1):
        shell = [k for k in _l1_sphere(d, r) if next(v for v in k if v) > 0]
        out.extend(sorted(shell))
    return out


def _dyadic(rho: Rotation):
    """Components as ``M_j / 2^E`` with a common exponent."""
    fracs = [Fraction(c) for c in rho.components]
    denom = max(f.denominator for f in fracs)
    return [f.numerator * (denom // f.denominator) for f in fracs], denom


def small_divisor_scan(rho: Rotation, k_max: int) -> SmallDivisorScan:
    """Exhaustive scan of ``min_n |<k, rho> - n|`` for nonzero ``k`` up to the budget.

    ``k_max`` bounds ``k`` for d = 1 (at most 10^4) and ``||k||_1`` for d >= 2
    (at most 30); only one of ``k``, ``-k`` is scanned. Divisors are exact
    distances from the double-valued rotation, rounded once. A divisor no
    larger than the representation error ``sum_j |k_j| ulp(rho_j) / 2`` is
    indistinguishable from an exact resonance: it is recorded as 0, the scan
    stops and is marked resonant. ``tau`` is the least-squares slope
    of ``-log divisor`` against ``log ||k||_1`` over record minima.
    """
    d = rho.dimension
    if k_max < 1:
        raise ParameterError("k_max must be at least 1")
    if d == 1:
        if k_max > MAX_K_1D:
            raise BudgetError(f"k_max={k_max} exceeds the one-dimensional budget {MAX_K_1D}")
        ks = [(k,) for k in range(1, k_max + 1)]
    else:
        if k_max > MAX_L1_MULTI:
            raise BudgetError(f"||k||_1 <= {k_max} exceeds the budget {MAX_L1_MULTI} for d >= 2")
        if _l1_ball_size(d, k_max) // 2 > MAX_SCAN_VECTORS:
            raise BudgetError(f"{_l1_ball_size(d, k_max) // 2} lattice vectors exceed {MAX_SCAN_VECTORS}")
        ks = half_lattice(d, k_max)

    nums, denom = _dyadic(rho)
    half_ulps = [Fraction(math.ulp(c)) / 2 if c else Fraction(0) for c in rho.components]
    divisors = []
    resonant = False
    for k in ks:
        r = sum(kj * mj for kj, mj in zip(k, nums)) % denom
        dist = Fraction(min(r, denom - r), denom)
        if dist <= sum(abs(kj) * u for kj, u in zip(k, half_ulps)):
            divisors.append(0.0)
            resonant = True
            break
        divisors.append(float(dist))
    ks = np.array(ks[:len(divisors)], dtype=np.int64).reshape(len(divisors), d)
    divisors = np.array(divisors)
    norms = np.abs(ks).sum(axis=1).astype(float)

    best = np.minimum.accumulate(divisors)
    is_record = np.concatenate([[True], divisors[1:] < best[:-1]])
    record_index = np.nonzero(is_record)[0]
    if resonant:
        return SmallDivisorScan(k_max, ks, divisors, 0.0, math.nan, True, record_index)

    tau = math.nan
    if record_index.size >= 2:
        x = np.log(norms[record_index])
        y = np.log(divisors[record_index])
        if np.ptp(x) > 0:
            tau = float(-np.polyfit(x, y, 1)[0])
    gamma = certify_gamma(divisors, norms, 0.0 if math.isnan(tau) else tau)
    return SmallDivisorScan(k_max, ks, divisors, gamma, tau, False, record_index)


def certify_gamma(divisors, norms, tau):
    """Largest double ``gamma`` with ``divisors >= gamma * norms**-tau`` elementwise in floating point."""
    bound = norms ** -float(tau)
    gamma = float(np.min(divisors / bound))
    while np.any(divisors < gamma * bound):
        gamma = math.nextafter(gamma, 0.0)
    return gamma


def product_condition_scan(rho: Rotation, l1_max: int, tau: float):
    """Tightest ``gamma`` in ``|<k, rho> - n| >= gamma prod_j (1 + j^tau |k_j|^tau)^-1`` on a truncated lattice.

    Only the first ``d <= 8`` coordinates are scanned; no statement about the
    infinite product follows from it.
    """
    d = rho.dimension
    if d > MAX_PRODUCT_DIM:
        raise BudgetError(f"product condition is scanned for d <= {MAX_PRODUCT_DIM}, got {d}")
    if not tau > 1:
        raise ParameterError(f"tau must exceed 1, got {tau}")
    scan = small_divisor_scan(rho, l1_max)
    if scan.resonant:
        return 0.0
    j = np.arange(1, d + 1, dtype=float)
    weights = np.prod(1.0 + (j * np.abs(scan.ks)) ** tau, axis=1)
    return float(np.min(scan.divisors * weights))
