"""Error-free transformations and exactly rounded sums.

Sums go through :func:`math.fsum`, which returns the correctly rounded value
of the exact sum, so the result is independent of traversal order.
"""
import math

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1


def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    """Dekker product: ``hi + lo == a * b`` exactly (barring overflow)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = a * b
    ah, al = split(a)
    bh, bl = split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def frac_product(n, x):
    """Fractional part of ``n * x`` with the product formed in double-double.

    ``n`` is an integer array (exact in binary64 below 2**53), ``x`` a float.
    """
    hi, lo = two_prod(np.asarray(n, dtype=float), x)
    r = hi - np.floor(hi)
    r = r + lo
    r = r - np.floor(r)
    # r can round up to exactly 1.0
    return np.where(r >= 1.0, 0.0, r)


def fsum(values):
    """Correctly rounded sum of a 1-D real array."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def fsum_columns(values):
    """Column-wise :func:`fsum` of a 2-D array; complex arrays sum re and im apart."""
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[:, None]
    if np.iscomplexobj(values):
        return np.array([complex(math.fsum(col.real.tolist()), math.fsum(col.imag.tolist())) for col in values.T])
    return np.array([math.fsum(col.tolist()) for col in values.T])


def exact_products_sum_columns(weights, values):
    """Column sums of ``weights[:, None] * values`` with each product kept error-free.

    Used by the extended precision mode: the only rounding left is the final
    one in :func:`math.fsum`.
    """
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[:, None]
    w = np.asarray(weights, dtype=float)[:, None]

    def _col_sums(part):
        hi, lo = two_prod(np.broadcast_to(w, part.shape), part)
        return np.array([math.fsum(np.concatenate([h, l]).tolist()) for h, l in zip(hi.T, lo.T)])

    if np.iscomplexobj(values):
        return _col_sums(values.real) + 1j * _col_sums(values.imag)
    return _col_sums(values.astype(float))
