"""DirectLiNGAM causal ordering and VAR-LiNGAM estimation.

The independence measure is the pairwise likelihood-ratio contrast built on a
maximum-entropy approximation of differential entropy. For a candidate
exogenous variable ``i`` its total dependence is

    T(i) = sum_j min(0, [H(x_j) + H(r_i|j)] - [H(x_i) + H(r_j|i)])**2

over the other remaining variables ``j``, with every argument standardised.
``T(i)`` is zero when ``i`` looks exogenous relative to every ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_observations
from .exceptions import DataError, EstimationError, RankDeficiencyError
from .var import VarModel, fit_var, select_lag

__all__ = [
    "ENTROPY_K1",
    "ENTROPY_K2",
    "ENTROPY_GAMMA",
    "GAUSSIAN_ENTROPY",
    "ResidualPanel",
    "CausalModel",
    "entropy_approx",
    "pairwise_residual",
    "dependence_scores",
    "causal_order",
    "ordering_score",
    "estimate_w0",
    "var_lingam",
    "causal_model_from_var",
    "is_acyclic_under",
    "DirectLiNGAM",
    "VARLiNGAM",
]

ENTROPY_K1 = 79.047
ENTROPY_K2 = 7.4129
ENTROPY_GAMMA = 0.37457
GAUSSIAN_ENTROPY = 0.5 * (1.0 + np.log(2.0 * np.pi))

_LOG2 = np.log(2.0)


def _entropy(u: np.ndarray) -> np.ndarray:
    """Entropy approximation of each column of ``u`` (samples along axis 0)."""
    m = u.shape[0]
    flat = u.reshape(m, -1)
    ones = np.full(m, 1.0 / m)
    if max(flat.max(), -flat.min()) < 700.0:
        logcosh = np.cosh(flat)
        np.log(logcosh, out=logcosh)
    else:
        logcosh = np.logaddexp(flat, -flat) - _LOG2
    a = ones @ logcosh - ENTROPY_GAMMA
    g = np.multiply(flat, flat, out=logcosh)
    g *= -0.5
    np.exp(g, out=g)
    g *= flat
    b = ones @ g
    return (GAUSSIAN_ENTROPY - ENTROPY_K1 * a * a - ENTROPY_K2 * b * b).reshape(u.shape[1:])


def entropy_approx(u) -> float:
    """Maximum-entropy approximation of the differential entropy of ``u``.

    ``u`` must be (approximately) centred with unit variance; the
    approximation equals the Gaussian entropy when both correction
    moments vanish and is smaller otherwise.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size < 50:
        raise DataError("entropy_approx needs a 1-d sample of at least 50 values")
    if not np.all(np.isfinite(u)):
        raise DataError("entropy_approx input contains non-finite values")
    var = u.var()
    if not 0.99 <= var <= 1.01:
        raise DataError(f"entropy_approx expects unit variance, got {var:.4f}")
    return float(_entropy(u))


def pairwise_residual(z_j, z_i) -> np.ndarray:
    """Residual of regressing ``z_j`` on ``z_i`` by least squares."""
    z_j = np.asarray(z_j, dtype=float)
    z_i = np.asarray(z_i, dtype=float)
    zi_c = z_i - z_i.mean()
    var = zi_c @ zi_c / z_i.size
    if var <= 0:
        raise EstimationError("regressor has zero variance")
    cov = zi_c @ (z_j - z_j.mean()) / z_i.size
    return z_j - (cov / var) * z_i


@dataclass(frozen=True, eq=False)
class ResidualPanel:
    """Reduced-form residuals, shape (N, m)."""

    values: np.ndarray
    names: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != len(self.names):
            raise DataError("residual values must be (N, m) with one name per row")
        object.__setattr__(self, "values", v - v.mean(axis=1, keepdims=True))
        object.__setattr__(self, "names", tuple(self.names))

    def to_array(self) -> np.ndarray:
        return np.ascontiguousarray(self.values.T)


def _as_residuals(res) -> np.ndarray:
    if isinstance(res, ResidualPanel):
        return res.to_array()
    Z = np.asarray(res, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.ndim != 2 or not np.all(np.isfinite(Z)):
        raise DataError("residuals must be a finite (n_samples, n_features) array")
    return Z


def _standardize(Z: np.ndarray) -> np.ndarray:
    w = np.full(Z.shape[0], 1.0 / Z.shape[0])
    mu = w @ Z
    Zc = Z - mu
    sd = np.sqrt(w @ (Zc * Zc))
    if np.any(sd <= 1e-12 * np.maximum(np.abs(mu), 1.0)):
        raise EstimationError("degenerate residuals: zero variance")
    Zc /= sd
    return Zc


def dependence_scores(S: np.ndarray) -> np.ndarray:
    """Total dependence ``T(i)`` of each column of standardised ``S``."""
    m, k = S.shape
    if k == 1:
        return np.zeros(1)
    rho = np.clip(S.T @ S / m, -1.0, 1.0)
    ii, jj = np.nonzero(~np.eye(k, dtype=bool))
    resid_sd = np.sqrt(1.0 - rho[ii, jj] ** 2)
    if np.any(resid_sd < 1e-8):
        raise EstimationError("degenerate residuals: perfectly collinear pair")
    # columns: the k variables themselves, then the standardised residual of
    # i regressed on j for every ordered pair, all as one linear map of S
    A = np.zeros((k, k + ii.size))
    A[np.arange(k), np.arange(k)] = 1.0
    cols = k + np.arange(ii.size)
    A[ii, cols] = 1.0 / resid_sd
    A[jj, cols] = -rho[ii, jj] / resid_sd
    H_all = _entropy(S @ A)
    H, Hr = H_all[:k], np.zeros((k, k))
    Hr[ii, jj] = H_all[k:]
    diff = (H[None, :] + Hr) - (H[:, None] + Hr.T)
    contrib = np.minimum(diff, 0.0) ** 2
    np.fill_diagonal(contrib, 0.0)
    return contrib.sum(axis=1)


def causal_order(res) -> list[int]:
    """Greedy DirectLiNGAM ordering of residual columns (0-based indices).

    ``res`` is a :class:`ResidualPanel` or an (n_samples, n_features)
    array. At each step the remaining variable with the smallest total
    dependence is appended; the others are replaced by their standardised
    residuals on it. Ties go to the lowest index.
    """
    Z = _as_residuals(res)
    remaining = list(range(Z.shape[1]))
    S = _standardize(Z)
    order = []
    while len(remaining) > 1:
        scores = dependence_scores(S)
        pick = int(np.argmin(scores))
        order.append(remaining[pick])
        s_i = S[:, pick]
        rest = np.delete(S, pick, axis=1)
        rest = rest - np.outer(s_i, s_i @ rest / s_i.size)
        S = _standardize(rest)
        del remaining[pick]
    order.extend(remaining)
    return order


def ordering_score(res, order) -> float:
    """Total dependence accumulated when variables are extracted in ``order``."""
    Z = _as_residuals(res)
    remaining = list(range(Z.shape[1]))
    S = _standardize(Z)
    total = 0.0
    for v in order[:-1]:
        pick = remaining.index(v)
        total += float(dependence_scores(S)[pick])
        s_i = S[:, pick]
        rest = np.delete(S, pick, axis=1)
        S = _standardize(rest - np.outer(s_i, s_i @ rest / s_i.size))
        del remaining[pick]
    return total


def estimate_w0(res, order) -> np.ndarray:
    """Instantaneous-effect matrix by OLS of each variable on its predecessors.

    ``W0[i, j]`` is the effect of ``j`` on ``i``; entries for
    non-predecessors are exactly zero.
    """
    Z = _as_residuals(res)
    N = Z.shape[1]
    order = [int(o) for o in order]
    if sorted(order) != list(range(N)):
        raise DataError(f"{order} is not a permutation of 0..{N - 1}")
    Zc = Z - Z.mean(axis=0)
    W0 = np.zeros((N, N))
    for p in range(1, N):
        target, preds = order[p], order[:p]
        X = Zc[:, preds]
        coef, _, rank, _ = np.linalg.lstsq(X, Zc[:, target], rcond=None)
        if rank < len(preds):
            raise RankDeficiencyError(f"predecessors of variable {target} are collinear", preds)
        W0[target, preds] = coef
    return W0


def is_acyclic_under(W0, order) -> bool:
    """True when ``W0`` permuted by ``order`` is strictly lower triangular."""
    P = np.asarray(W0)[np.ix_(order, order)]
    return bool(np.all(np.triu(P) == 0))


@dataclass(frozen=True, eq=False)
class CausalModel:
    """Structural VAR estimate: ``y_t = W0 y_t + sum_l W[l-1] y_{t-l} + e_t``."""

    L: int
    W0: np.ndarray
    W: np.ndarray
    order: tuple
    names: tuple
    var: VarModel | None = None

    @property
    def adjacency_matrices(self) -> np.ndarray:
        return np.concatenate([self.W0[None], self.W])

    def coefficients(self) -> np.ndarray:
        """All structural coefficients flattened as ``[W0, W1, ..., WL]``."""
        return self.adjacency_matrices.ravel()


def var_lingam(data, L: int | None = None, L_max: int = 5, names=None) -> CausalModel:
    """Fit a VAR, order its residuals, and compose the lagged structural matrices.

    With ``L=None`` the lag order is chosen by BIC over ``1..L_max``.
    """
    Y, names = as_observations(data, names)
    if L is None:
        L = select_lag(Y, L_max, names)
    return causal_model_from_var(fit_var(Y, L, names=names))


def causal_model_from_var(vm: VarModel) -> CausalModel:
    """LiNGAM stage on the residuals of a fitted VAR; ``W[l] = (I - W0) M[l]``."""
    Z = vm.residuals.T
    order = causal_order(Z)
    W0 = estimate_w0(Z, order)
    I_minus = np.eye(len(vm.names)) - W0
    W = np.stack([I_minus @ vm.M[l] for l in range(vm.L)])
    return CausalModel(L=vm.L, W0=W0, W=W, order=tuple(order), names=vm.names, var=vm)


class DirectLiNGAM(BaseEstimator):
    """DirectLiNGAM on i.i.d. observations.

    Attributes
    ----------
    causal_order_ : list of int
    adjacency_matrix_ : ndarray of shape (n_features, n_features)
        ``adjacency_matrix_[i, j]`` is the direct effect of ``j`` on ``i``.
    """

    def fit(self, X, y=None):
        Z, _ = as_observations(X)
        self.causal_order_ = causal_order(Z)
        self.adjacency_matrix_ = estimate_w0(Z, self.causal_order_)
        self.n_features_in_ = Z.shape[1]
        return self


class VARLiNGAM(BaseEstimator):
    """VAR-LiNGAM for a multivariate time series.

    Parameters
    ----------
    lags : int or None, default=None
        Fixed VAR order; None selects it by BIC.
    max_lag : int, default=5

    Attributes
    ----------
    lags_ : int
    causal_order_ : list of int
    adjacency_matrices_ : ndarray of shape (lags_ + 1, n_features, n_features)
        ``[W0, W1, ..., WL]``.
    var_coefs_ : ndarray of shape (lags_, n_features, n_features)
    residuals_ : ndarray of shape (n_samples - lags_, n_features)
    model_ : CausalModel
    """

    def __init__(self, lags=None, max_lag=5):
        self.lags = lags
        self.max_lag = max_lag

    def fit(self, X, y=None):
        Y, names = as_observations(X)
        self.model_ = var_lingam(Y, self.lags, self.max_lag, names)
        self.lags_ = self.model_.L
        self.causal_order_ = list(self.model_.order)
        self.adjacency_matrices_ = self.model_.adjacency_matrices
        self.var_coefs_ = self.model_.var.M
        self.residuals_ = self.model_.var.residuals.T
        self.n_features_in_ = Y.shape[1]
        return self

    def predict(self, X):
        """One-step-ahead reduced-form predictions (see :meth:`VAR.predict`)."""
        check_is_fitted(self, "model_")
        Y, _ = as_observations(X)
        vm = self.model_.var
        out = np.tile(vm.intercept, (Y.shape[0] - vm.L, 1))
        for l in range(1, vm.L + 1):
            out += Y[vm.L - l: Y.shape[0] - l] @ vm.M[l - 1].T
        return out
