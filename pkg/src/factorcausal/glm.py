"""Poisson log-linear regression fitted by iteratively reweighted least squares."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.stats import norm
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import ConvergenceError, DataError, EstimationError, RankDeficiencyError

__all__ = [
    "GlmFit",
    "fit_poisson",
    "poisson_loglik",
    "poisson_deviance",
    "DensityRegression",
    "regress_density",
    "PoissonGLM",
]


@dataclass(frozen=True, eq=False)
class GlmFit:
    """Poisson GLM estimate; the first coefficient is the intercept."""

    coef: np.ndarray
    std_err: np.ndarray
    p_value: np.ndarray
    deviance: float
    n_iter: int
    converged: bool
    names: tuple
    n_obs: int
    dispersion: float

    @property
    def multiplicative_effect(self) -> np.ndarray:
        """``exp(coef)``: change factor of the expected count per unit covariate."""
        return np.exp(self.coef)

    def predict(self, X) -> np.ndarray:
        return np.exp(np.asarray(X, dtype=float) @ self.coef)

    def rows(self):
        for name, b, se, p, e in zip(self.names, self.coef, self.std_err, self.p_value,
                                     self.multiplicative_effect):
            yield name, float(b), float(se), float(p), float(e)


def poisson_deviance(y, mu) -> float:
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(y > 0, y * np.log(y / mu), 0.0)
    return float(2.0 * np.sum(term - (y - mu)))


def poisson_loglik(beta, y, X) -> float:
    """Log-likelihood without the ``log y!`` constant."""
    eta = np.asarray(X, dtype=float) @ np.asarray(beta, dtype=float)
    return float(np.sum(np.asarray(y) * eta - np.exp(eta)))


def _check_counts(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise DataError("response must be one-dimensional")
    if not np.all(np.isfinite(y)) or np.any(y < 0) or np.any(y != np.round(y)):
        raise DataError("response must hold non-negative integer counts")
    return y


def fit_poisson(y, X, tol: float = 1e-10, max_iter: int = 100, names=None) -> GlmFit:
    """Maximum-likelihood Poisson regression with log link.

    ``X`` must contain the intercept column. Iterates weighted least-squares
    steps (halving any step that increases the deviance) until the relative
    deviance change and the largest coefficient change both fall below
    ``tol``.
    """
    y = _check_counts(y)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DataError("X must be 2-d with one row per response")
    n, p = X.shape
    if n <= p:
        raise DataError(f"{n} observations cannot identify {p} coefficients")
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(p))
    _, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > d.max() * max(n, p) * np.finfo(float).eps))
    if rank < p:
        bad = [names[i] for i in sorted(piv[rank:])]
        raise RankDeficiencyError(f"design is rank deficient; offending columns: {bad}", bad)
    if np.all(y == 0):
        raise EstimationError("all counts are zero: the intercept diverges")

    beta = np.zeros(p)
    ones = np.flatnonzero(np.all(X == 1.0, axis=0))
    if ones.size:
        beta[ones[0]] = np.log(y.mean() + 0.5)
    else:
        beta = np.linalg.lstsq(X, np.log(y + 0.5), rcond=None)[0]

    def _mu(b):
        eta = X @ b
        if np.any(eta > 700):
            raise EstimationError("linear predictor overflow: likely separation")
        return np.exp(eta)

    mu = _mu(beta)
    dev = poisson_deviance(y, mu)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if mu.min() < 1e-300:
            raise EstimationError("IRLS weights underflowed: likely separation")
        sw = np.sqrt(mu)
        z = X @ beta + (y - mu) / mu
        new = np.linalg.lstsq(X * sw[:, None], z * sw, rcond=None)[0]
        step = new - beta
        for _ in range(30):
            cand = beta + step
            mu_c = _mu(cand)
            dev_c = poisson_deviance(y, mu_c)
            if np.isfinite(dev_c) and dev_c <= dev + 1e-12 * (abs(dev) + 1):
                break
            step = step / 2
        change = np.max(np.abs(cand - beta)) / (1.0 + np.max(np.abs(cand)))
        rel_dev = abs(dev - dev_c) / (abs(dev_c) + 0.1)
        beta, mu, dev = cand, mu_c, dev_c
        if rel_dev < tol and change < tol ** 0.5:
            converged = True
            break
    if not converged:
        if mu.min() < 1e-12 * y.mean():
            raise EstimationError("fitted means collapse towards zero: the data are separated")
        raise ConvergenceError(f"IRLS did not converge in {max_iter} iterations")

    info = X.T @ (X * mu[:, None])
    cov = np.linalg.inv(info)
    se = np.sqrt(np.diag(cov))
    zstat = beta / se
    pval = 2.0 * norm.sf(np.abs(zstat))
    dispersion = float(np.sum((y - mu) ** 2 / mu) / (n - p))
    return GlmFit(beta, se, pval, max(dev, 0.0), it, converged, names, n, dispersion)


@dataclass(frozen=True, eq=False)
class DensityRegression:
    """Per relation type Poisson fits of network edge counts."""

    fits: dict
    n_dropped: int

    def table(self) -> list[tuple]:
        return [(rel, *row) for rel, fit in self.fits.items() for row in fit.rows()]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["relation", "variable", "coef", "std_err", "p_value", "exp_coef"])
            for rel, name, b, se, p, e in self.table():
                w.writerow([rel, name, repr(b), repr(se), repr(p), repr(e)])

    def to_text(self, title: str = "") -> str:
        lines = [title] if title else []
        w = max([len("relation")] + [len(r) for r in self.fits]) + 2
        lines.append(f"{'relation':<{w}}{'variable':<12}{'coef':>12}{'std.err':>12}{'p-value':>10}{'exp(coef)':>12}")
        for rel, name, b, se, p, e in self.table():
            lines.append(f"{rel:<{w}}{name:<12}{b:>12.4g}{se:>12.3g}{p:>10.3f}{e:>12.4f}")
        return "\n".join(lines)


def regress_density(counts: dict, time_days, f_zscore=None, bc_zscore=None,
                    tol: float = 1e-10, max_iter: int = 100) -> DensityRegression:
    """Regress each count series in ``counts`` on time and the z-score indicators.

    ``counts`` maps a relation label (e.g. ``overall``) to per-window counts.
    Windows where any supplied covariate is undefined are dropped.
    """
    cols = [("time", np.asarray(time_days, dtype=float))]
    if f_zscore is not None:
        cols.append(("f-zscore", np.asarray(f_zscore, dtype=float)))
    if bc_zscore is not None:
        cols.append(("bc-zscore", np.asarray(bc_zscore, dtype=float)))
    n = cols[0][1].size
    if any(c.size != n for _, c in cols) or any(np.asarray(v).size != n for v in counts.values()):
        raise DataError("counts and covariates must have equal length")
    ok = np.all([np.isfinite(c) for _, c in cols], axis=0)
    X = np.column_stack([np.ones(int(ok.sum()))] + [c[ok] for _, c in cols])
    names = ("intercept",) + tuple(nm for nm, _ in cols)
    fits = {rel: fit_poisson(np.asarray(y, dtype=float)[ok], X, tol, max_iter, names)
            for rel, y in counts.items()}
    return DensityRegression(fits, int(n - ok.sum()))


class PoissonGLM(RegressorMixin, BaseEstimator):
    """Poisson log-linear regressor.

    Parameters
    ----------
    fit_intercept : bool, default=True
    tol : float, default=1e-10
    max_iter : int, default=100

    Attributes
    ----------
    coef_, intercept_, bse_, pvalues_, deviance_, fit_
    """

    def __init__(self, fit_intercept=True, tol=1e-10, max_iter=100):
        self.fit_intercept = fit_intercept
        self.tol = tol
        self.max_iter = max_iter

    def _design(self, X):
        return np.column_stack([np.ones(X.shape[0]), X]) if self.fit_intercept else X

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        names = (("intercept",) if self.fit_intercept else ()) + tuple(f"x{i}" for i in range(X.shape[1]))
        self.fit_ = fit_poisson(y, self._design(X), self.tol, self.max_iter, names)
        coef = self.fit_.coef
        self.intercept_ = coef[0] if self.fit_intercept else 0.0
        self.coef_ = coef[1:] if self.fit_intercept else coef
        self.bse_ = self.fit_.std_err
        self.pvalues_ = self.fit_.p_value
        self.deviance_ = self.fit_.deviance
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        X = check_array(X, dtype=float)
        return self.fit_.predict(self._design(X))
