"""scikit-learn style wrappers around the averaging, interpolation and fitting routines."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .averaging import weighted_average
from .dynamics import Rotation
from .fourier import FourierRequest, fourier_spectrum
from .periodic import trig_interpolate
from .ratefit import classify_orbit, fit_rate
from .validation import check_positive_int, check_samples, check_series, check_weight
from .weights import normalizer


class WeightedBirkhoffAverage(TransformerMixin, BaseEstimator):
    """Weighted time average of a sampled signal.

    ``fit`` stores the average of the first ``n_steps`` rows (all rows when
    ``None``) in ``mean_``; ``transform`` subtracts it.
    """

    def __init__(self, weight="bump:p=1,q=1", n_steps=None, precision="standard"):
        self.weight = weight
        self.n_steps = n_steps
        self.precision = precision

    def fit(self, X, y=None):
        X = check_samples(X)
        spec = check_weight(self.weight)
        n = X.shape[0] if self.n_steps is None else check_positive_int(self.n_steps, "n_steps", 2)
        self.mean_ = weighted_average(X, spec, n, self.precision)
        self.normalizer_ = normalizer(spec, n)
        self.n_steps_ = n
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_samples(X, min_samples=1)
        return X - self.mean_


class TrigInterpolator(RegressorMixin, BaseEstimator):
    """Trigonometric interpolant of one period of data.

    ``fit(X)`` takes the period's values ``f(0), ..., f(T-1)``; ``predict(n)``
    evaluates the interpolant at (possibly non-integer) times.
    """

    def fit(self, X, y=None):
        values = check_series(X)
        self.interp_ = trig_interpolate(values)
        self.period_ = self.interp_.period
        self.mean_ = self.interp_.a0
        return self

    def predict(self, X):
        check_is_fitted(self, "interp_")
        return self.interp_.evaluate(check_series(X))


class WeightedFourierEstimator(BaseEstimator):
    """Fourier coefficients of ``K`` from an orbit ``K(theta0 + n rho)``.

    After ``fit``: ``modes_`` (M, d), ``coef_`` (M, D) complex, ``effective_``
    flags, ``budget_`` and the hold-out ``residual_``.
    """

    def __init__(self, rho=0.6180339887498949, theta0=0.0, weight="bump:p=1,q=1", max_order=5,
                 zeta=None, kappa=0.5):
        self.rho = rho
        self.theta0 = theta0
        self.weight = weight
        self.max_order = max_order
        self.zeta = zeta
        self.kappa = kappa

    def fit(self, X, y=None):
        X = check_samples(X, allow_complex=True)
        rho = self.rho if isinstance(self.rho, Rotation) else Rotation(np.atleast_1d(self.rho))
        theta0 = np.broadcast_to(np.atleast_1d(np.asarray(self.theta0, dtype=float)), (rho.dimension,))
        req = FourierRequest(X, rho, theta0, check_weight(self.weight))
        result = fourier_spectrum(req, check_positive_int(self.max_order, "max_order", 0), self.zeta,
                                  self.kappa)
        self.result_ = result
        self.modes_ = result.modes
        self.coef_ = result.coeffs
        self.effective_ = result.effective
        self.budget_ = result.budget
        self.residual_ = result.residual
        self.complex_output_ = np.iscomplexobj(X)
        return self

    def predict(self, X):
        """Truncated Fourier series at torus points ``X`` of shape (P, d)."""
        check_is_fitted(self, "coef_")
        theta = np.asarray(X, dtype=float).reshape(-1, self.modes_.shape[1])
        phases = theta @ self.modes_.T.astype(float)
        values = np.exp(2j * np.pi * (phases - np.floor(phases))) @ self.coef_
        return values if self.complex_output_ else values.real


class ConvergenceRateEstimator(RegressorMixin, BaseEstimator):
    """Fits exponential / polynomial decay to ``(N, error)`` pairs.

    ``fit(X, y)`` takes the N grid as ``X`` and the errors as ``y``.
    """

    def __init__(self, trim_transient=True, include_nlogn=False):
        self.trim_transient = trim_transient
        self.include_nlogn = include_nlogn

    def fit(self, X, y):
        n = check_series(X)
        err = check_series(y)
        if n.shape != err.shape:
            raise ValueError("N grid and errors differ in length")
        fit = fit_rate(n, err, trim_transient=self.trim_transient, include_nlogn=self.include_nlogn)
        self.fit_ = fit
        self.model_ = fit.model
        self.r2_ = fit.r_squared
        self.zeta_ = fit.zeta
        self.m_ = fit.m
        self.c_ = fit.c
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        return self.fit_.predict(check_series(X))


class OrbitClassifier(BaseEstimator):
    """Regular / chaotic / indeterminate verdict from the self-difference decay of a signal."""

    def __init__(self, weight="bump:p=1,q=1", n_grid=None):
        self.weight = weight
        self.n_grid = n_grid

    def fit(self, X, y=None):
        X = check_samples(X)
        verdict = classify_orbit(X, check_weight(self.weight), self.n_grid)
        self.label_ = verdict.label
        self.evidence_ = verdict.evidence
        self.proxy_ = verdict.proxy
        return self

    def predict(self, signals):
        """One label per signal in ``signals`` (a sequence of sample arrays)."""
        spec = check_weight(self.weight)
        return np.array([classify_orbit(check_samples(s), spec, self.n_grid).label for s in signals])
