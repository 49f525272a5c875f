"""Reduced-form vector autoregression: OLS fit, BIC and lag selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_observations
from .exceptions import DataError, EstimationError, RankDeficiencyError

__all__ = ["VarModel", "fit_var", "fit_var_design", "bic", "select_lag", "lag_matrix", "VAR"]


@dataclass(frozen=True, eq=False)
class VarModel:
    """Fitted VAR(L) with intercept.

    ``M[l - 1]`` maps ``y[t - l]`` to ``y[t]``. ``residuals`` has shape
    (N, T_eff), one column per effective observation.
    """

    L: int
    intercept: np.ndarray
    M: np.ndarray
    residuals: np.ndarray
    names: tuple
    loglik_proxy: float
    n_params: int

    @property
    def n_obs(self) -> int:
        return self.residuals.shape[1]

    @property
    def sigma(self) -> np.ndarray:
        e = self.residuals
        return e @ e.T / e.shape[1]


def lag_matrix(Y: np.ndarray, L: int, start: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Regression targets and design for a VAR(L) on ``Y`` (T, N).

    Rows ``start..T-1`` form the sample (``start`` defaults to ``L``). The
    design is ``[1, y[t-1], ..., y[t-L]]``.
    """
    T, N = Y.shape
    start = L if start is None else start
    if start < L:
        raise ValueError("start must be at least L")
    rows = T - start
    X = np.empty((rows, 1 + N * L))
    X[:, 0] = 1.0
    for l in range(1, L + 1):
        X[:, 1 + (l - 1) * N: 1 + l * N] = Y[start - l: T - l]
    return Y[start:], X


def _design_names(names, L):
    return ["const"] + [f"{n}.L{l}" for l in range(1, L + 1) for n in names]


def _ols(X: np.ndarray, Yt: np.ndarray, colnames) -> np.ndarray:
    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag.max() * max(X.shape) * np.finfo(float).eps if diag.size else 0.0
    rank = int(np.sum(diag > tol))
    if diag.size == 0 or rank < X.shape[1]:
        bad = [colnames[i] for i in sorted(piv[rank:])]
        raise RankDeficiencyError(f"regressors are collinear; offending columns: {bad}", bad)
    coef = scipy.linalg.solve_triangular(R, Q.T @ Yt)
    out = np.empty_like(coef)
    out[piv] = coef
    return out


def fit_var(data, L: int, start: int | None = None, names=None) -> VarModel:
    """Equation-by-equation OLS fit of a VAR(L) with intercept.

    ``data`` is a :class:`~factorcausal.panel.ReturnPanel` or an array of
    shape (n_samples, n_features).
    """
    Y, names = as_observations(data, names)
    if L < 1:
        raise DataError("lag order must be at least 1")
    T, N = Y.shape
    start = L if start is None else start
    if T - start <= N * L + 1:
        raise DataError(f"{T - start} observations cannot identify a VAR({L}) in {N} variables")
    Yt, X = lag_matrix(Y, L, start)
    return fit_var_design(Yt, X, L, names)


def fit_var_design(Yt: np.ndarray, X: np.ndarray, L: int, names) -> VarModel:
    """VAR fit from a prepared target block and lag design (see :func:`lag_matrix`).

    Rows need not be consecutive, which lets resampling schemes reuse it.
    """
    N = Yt.shape[1]
    B = _ols(X, Yt, _design_names(names, L))
    resid = Yt - X @ B
    M = np.stack([B[1 + (l - 1) * N: 1 + l * N].T for l in range(1, L + 1)])
    sigma = resid.T @ resid / resid.shape[0]
    sign, logdet = np.linalg.slogdet(sigma)
    return VarModel(
        L=L,
        intercept=B[0].copy(),
        M=M,
        residuals=np.ascontiguousarray(resid.T),
        names=tuple(names),
        loglik_proxy=float(logdet) if sign > 0 else float("-inf"),
        n_params=N * (N * L + 1),
    )


def bic(model: VarModel, T_effective: int | None = None) -> float:
    """Schwarz criterion ``T log det(Sigma) + k log T`` with the MLE covariance."""
    T_eff = model.n_obs if T_effective is None else T_effective
    sign, logdet = np.linalg.slogdet(model.sigma)
    if sign <= 0 or not np.isfinite(logdet):
        raise EstimationError("residual covariance is singular")
    return float(T_eff * logdet + model.n_params * np.log(T_eff))


def select_lag(data, L_max: int = 5, names=None) -> int:
    """Lag order in ``1..L_max`` minimising BIC on a common sample.

    Every candidate is fitted on observations ``L_max..T-1`` so the scores
    are comparable.
    """
    if L_max < 1:
        raise DataError("L_max must be at least 1")
    if L_max == 1:
        return 1
    Y, names = as_observations(data, names)
    scores = [bic(fit_var(Y, L, start=L_max, names=names)) for L in range(1, L_max + 1)]
    return int(np.argmin(scores)) + 1


class VAR(BaseEstimator):
    """Vector autoregression estimator.

    Parameters
    ----------
    lags : int or None, default=None
        Fixed lag order. When None the order is chosen by BIC over
        ``1..max_lag``.
    max_lag : int, default=5
        Largest order considered by BIC.

    Attributes
    ----------
    lags_ : int
    coefs_ : ndarray of shape (lags_, n_features, n_features)
    intercept_ : ndarray of shape (n_features,)
    resid_ : ndarray of shape (n_samples - lags_, n_features)
    bic_ : float
    """

    def __init__(self, lags=None, max_lag=5):
        self.lags = lags
        self.max_lag = max_lag

    def fit(self, X, y=None):
        Y, names = as_observations(X)
        L = self.lags if self.lags is not None else select_lag(Y, self.max_lag, names)
        self.model_ = fit_var(Y, L, names=names)
        self.lags_ = L
        self.coefs_ = self.model_.M
        self.intercept_ = self.model_.intercept
        self.resid_ = self.model_.residuals.T
        self.bic_ = bic(self.model_)
        self.n_features_in_ = Y.shape[1]
        return self

    def predict(self, X):
        """One-step-ahead fitted values for rows ``lags_..`` of ``X``."""
        check_is_fitted(self, "model_")
        Y, _ = as_observations(X)
        if Y.shape[1] != self.n_features_in_:
            raise DataError(f"expected {self.n_features_in_} features, got {Y.shape[1]}")
        out = np.tile(self.intercept_, (Y.shape[0] - self.lags_, 1))
        for l in range(1, self.lags_ + 1):
            out += Y[self.lags_ - l: Y.shape[0] - l] @ self.coefs_[l - 1].T
        return out
