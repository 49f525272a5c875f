"""Ground-truth SVAR simulation and brute-force oracles for the estimators."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .exceptions import DataError, EstimationError
from .panel import ReturnPanel

__all__ = [
    "SvarSpec",
    "GroundTruth",
    "generate",
    "random_spec",
    "recovery_metrics",
    "RecoveryMetrics",
    "brute_force_order",
    "dependence_along",
    "synthetic_indicators",
]

NOISE_KINDS = ("laplace", "uniform", "student_t", "gaussian")
BURN_IN = 500


@dataclass(frozen=True, eq=False)
class SvarSpec:
    """``y_t = W0 y_t + sum_l W[l-1] y_{t-l} + e_t`` with independent noise.

    ``noise`` is one of ``laplace``, ``uniform``, ``student_t`` (with
    ``df``) or ``gaussian``; each is scaled to unit variance and then
    multiplied by ``scale`` per variable. Generators are PCG64 seeded
    with ``seed``.
    """

    W0: np.ndarray
    W: np.ndarray
    T: int
    noise: str = "laplace"
    scale: np.ndarray | float = 1.0
    df: float = 5.0
    seed: int = 0
    names: tuple | None = None

    def __post_init__(self):
        W0 = np.atleast_2d(np.asarray(self.W0, dtype=float))
        W = np.asarray(self.W, dtype=float)
        if W.ndim == 2:
            W = W[None]
        N = W0.shape[0]
        if W0.shape != (N, N) or W.shape[1:] != (N, N):
            raise DataError("W0 and W must be square and of equal size")
        if self.noise not in NOISE_KINDS:
            raise DataError(f"noise must be one of {NOISE_KINDS}")
        if self.noise == "student_t" and self.df <= 2:
            raise DataError("student_t noise needs df > 2 for finite variance")
        object.__setattr__(self, "W0", W0)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "scale", np.broadcast_to(np.asarray(self.scale, float), (N,)).copy())
        if self.names is None:
            object.__setattr__(self, "names", tuple(f"f{i}" for i in range(N)))

    @property
    def N(self) -> int:
        return self.W0.shape[0]

    @property
    def L(self) -> int:
        return self.W.shape[0]

    def reduced_form(self) -> np.ndarray:
        """Reduced-form VAR matrices ``(I - W0)^-1 W[l]``."""
        A = np.linalg.inv(np.eye(self.N) - self.W0)
        return np.stack([A @ Wl for Wl in self.W])

    def spectral_radius(self) -> float:
        M = self.reduced_form()
        N, L = self.N, self.L
        C = np.zeros((N * L, N * L))
        C[:N] = np.hstack(list(M))
        C[N:, :-N] = np.eye(N * (L - 1))
        return float(np.max(np.abs(np.linalg.eigvals(C))))


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """True structural matrices; ``adjacency[l][i, j] != 0`` means ``j -> i`` at lag ``l``."""

    W0: np.ndarray
    W: np.ndarray
    names: tuple
    order: tuple

    @property
    def adjacency(self) -> np.ndarray:
        return np.concatenate([self.W0[None], self.W])


def _topological_order(W0: np.ndarray) -> tuple:
    N = W0.shape[0]
    parents = [set(np.nonzero(W0[i])[0]) for i in range(N)]
    order, placed = [], set()
    while len(order) < N:
        ready = [i for i in range(N) if i not in placed and parents[i] <= placed]
        if not ready:
            raise DataError("W0 contains a cycle")
        order.append(ready[0])
        placed.add(ready[0])
    return tuple(order)


def _noise(rng, kind, size, df):
    if kind == "laplace":
        return rng.laplace(0.0, 1.0 / math.sqrt(2.0), size)
    if kind == "uniform":
        return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size)
    if kind == "student_t":
        return rng.standard_t(df, size) / math.sqrt(df / (df - 2.0))
    return rng.standard_normal(size)


def generate(spec: SvarSpec, burn_in: int = BURN_IN, start_date: str = "2000-01-03"):
    """Simulate ``spec`` and return ``(panel, truth)``.

    Dates are consecutive business days from ``start_date``. Raises
    :class:`DataError` for cyclic ``W0`` or a non-stationary system.
    """
    order = _topological_order(spec.W0)
    if np.any(np.diag(spec.W0) != 0):
        raise DataError("W0 must have a zero diagonal")
    I_minus = np.eye(spec.N) - spec.W0
    if abs(np.linalg.det(I_minus)) < 1e-12:
        raise EstimationError("I - W0 is singular")
    if spec.spectral_radius() >= 1:
        raise DataError(f"non-stationary specification (spectral radius {spec.spectral_radius():.3f})")
    A = np.linalg.inv(I_minus)
    M = spec.reduced_form()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n = burn_in + spec.T
    shocks = (_noise(rng, spec.noise, (n, spec.N), spec.df) * spec.scale) @ A.T
    Y = np.zeros((n + spec.L, spec.N))
    for t in range(n):
        acc = shocks[t].copy()
        for l in range(spec.L):
            acc += M[l] @ Y[spec.L + t - 1 - l]
        Y[spec.L + t] = acc
    Y = Y[spec.L + burn_in:]
    dates = pd.bdate_range(start_date, periods=spec.T).values.astype("datetime64[D]")
    panel = ReturnPanel(dates, spec.names, Y.T)
    return panel, GroundTruth(spec.W0.copy(), spec.W.copy(), spec.names, order)


def random_spec(N: int = 5, L: int = 1, T: int = 5000, density: float = 0.3, seed: int = 0,
                noise: str = "laplace", coef_range=(0.3, 0.6), max_radius: float = 0.9,
                max_tries: int = 1000) -> SvarSpec:
    """Random sparse DAG + lag structure with signed coefficients.

    Each of the ``N(N-1)/2`` instantaneous pairs (under a random causal
    order) and each of the ``L * N * N`` lagged entries is present with
    probability ``density``. Magnitudes are uniform on ``coef_range``.
    Draws are repeated until the implied VAR has spectral radius below
    ``max_radius``.
    """
    rng = np.random.default_rng(seed)
    lo, hi = coef_range
    for _ in range(max_tries):
        perm = rng.permutation(N)
        W0 = np.zeros((N, N))
        for a in range(N):
            for b in range(a):
                if rng.random() < density:
                    W0[perm[a], perm[b]] = rng.choice([-1, 1]) * rng.uniform(lo, hi)
        W = (rng.random((L, N, N)) < density) * rng.choice([-1, 1], (L, N, N)) * rng.uniform(lo, hi, (L, N, N))
        spec = SvarSpec(W0, W, T, noise, 1.0, seed=seed)
        if spec.spectral_radius() < max_radius:
            return spec
    raise DataError("could not draw a stationary specification")


# ---------------------------------------------------------------- recovery


@dataclass(frozen=True)
class RecoveryMetrics:
    precision: float
    recall: float
    shd: int
    true_positives: int
    false_positives: int
    false_negatives: int


def _estimated_adjacency(estimated, N, L):
    """Boolean (L+1, N, N) support of an estimate."""
    from .lingam import CausalModel
    from .netinfer import FactorNetwork

    if isinstance(estimated, FactorNetwork):
        idx = {n: i for i, n in enumerate(estimated.names)}
        A = np.zeros((max(L, estimated.L) + 1, N, N), bool)
        for e in estimated.edges:
            if e.significant:
                A[e.lag, idx[e.dst], idx[e.src]] = True
        return A
    if isinstance(estimated, CausalModel):
        return estimated.adjacency_matrices != 0
    return np.asarray(estimated) != 0


def recovery_metrics(estimated, truth) -> RecoveryMetrics:
    """Compare estimated support with the true adjacency.

    ``estimated`` is a FactorNetwork (significant edges), a CausalModel or
    an (L+1, N, N) array; ``truth`` a GroundTruth or an (L+1, N, N) array.
    SHD counts missing plus extra edges, with an instantaneous edge found in
    the reverse direction counted once.
    """
    T_adj = truth.adjacency if isinstance(truth, GroundTruth) else np.asarray(truth)
    T_adj = T_adj != 0
    N, L = T_adj.shape[1], T_adj.shape[0] - 1
    E = _estimated_adjacency(estimated, N, L)
    if E.shape[1:] != T_adj.shape[1:]:
        raise DataError("estimate and truth differ in dimension")
    if E.shape[0] != T_adj.shape[0]:
        depth = max(E.shape[0], T_adj.shape[0])
        E = np.concatenate([E, np.zeros((depth - E.shape[0], N, N), bool)])
        T_adj = np.concatenate([T_adj, np.zeros((depth - T_adj.shape[0], N, N), bool)])
    tp = int(np.sum(E & T_adj))
    fp = int(np.sum(E & ~T_adj))
    fn = int(np.sum(~E & T_adj))
    reversed_ = int(np.sum(E[0] & ~T_adj[0] & T_adj[0].T & ~E[0].T))
    shd = fp + fn - reversed_
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return RecoveryMetrics(precision, recall, shd, tp, fp, fn)


# ---------------------------------------------------------------- brute-force ordering


_K1, _K2, _GAMMA = 79.047, 7.4129, 0.37457


def _h(u):
    return ((1 + math.log(2 * math.pi)) / 2
            - _K1 * (np.mean(np.log(np.cosh(u))) - _GAMMA) ** 2
            - _K2 * np.mean(u * np.exp(-u ** 2 / 2)) ** 2)


def _std(x):
    return (x - x.mean()) / x.std()


def _resid(a, b):
    return a - np.cov(a, b, bias=True)[0, 1] / np.var(b) * b


def _total_dependence(cols: dict, i) -> float:
    total = 0.0
    xi = _std(cols[i])
    for j, xj in cols.items():
        if j == i:
            continue
        xj = _std(xj)
        ri, rj = _resid(xi, xj), _resid(xj, xi)
        d = (_h(xj) + _h(ri / ri.std())) - (_h(xi) + _h(rj / rj.std()))
        total += min(0.0, d) ** 2
    return total


def dependence_along(res, order) -> float:
    """Summed total dependence when extracting variables in ``order``.

    Written pair by pair, independently of the vectorised routine in
    :mod:`factorcausal.lingam`.
    """
    Z = np.asarray(res.to_array() if hasattr(res, "to_array") else res, dtype=float)
    cols = {j: Z[:, j].copy() for j in range(Z.shape[1])}
    total = 0.0
    for v in order[:-1]:
        total += _total_dependence(cols, v)
        xv = cols.pop(v)
        for j in cols:
            cols[j] = _std(_resid(cols[j], xv))
    return total


def brute_force_order(res) -> list[int]:
    """Ordering minimising :func:`dependence_along` over all permutations (N <= 6)."""
    Z = np.asarray(res.to_array() if hasattr(res, "to_array") else res, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    N = Z.shape[1]
    if N > 6:
        raise DataError("brute_force_order enumerates N! orderings; N must be at most 6")
    best, best_score = None, math.inf
    for perm in itertools.permutations(range(N)):
        s = dependence_along(Z, perm)
        if s < best_score:
            best, best_score = list(perm), s
    return best


# ---------------------------------------------------------------- indicators


def synthetic_indicators(dates, seed: int = 0, vix_level: float = 18.0, spread_level: float = -1.5):
    """Toy VIX open/close and 3M/10Y yield series on ``dates``.

    The VIX is a mean-reverting log level with Laplace intraday moves; the
    yields follow AR(1) processes. Useful only to exercise the pipeline.
    Returns ``(vix_frame, yields_frame)`` as DataFrames with a ``date`` column.
    """
    dates = np.asarray(dates, dtype="datetime64[D]")
    n = dates.size
    rng = np.random.Generator(np.random.PCG64(seed))
    logv = np.empty(n)
    logv[0] = math.log(vix_level)
    shocks = rng.laplace(0.0, 0.04, n)
    for t in range(1, n):
        logv[t] = logv[t - 1] + 0.02 * (math.log(vix_level) - logv[t - 1]) + shocks[t]
    close = np.exp(logv)
    open_ = close * np.exp(-rng.laplace(0.0, 0.03, n))
    ten = np.empty(n)
    ten[0] = 3.0
    sp = np.empty(n)
    sp[0] = spread_level
    e1, e2 = rng.normal(0, 0.04, n), rng.normal(0, 0.03, n)
    for t in range(1, n):
        ten[t] = ten[t - 1] + 0.002 * (3.0 - ten[t - 1]) + e1[t]
        sp[t] = sp[t - 1] + 0.004 * (spread_level - sp[t - 1]) + e2[t]
    day = pd.DatetimeIndex(dates).strftime("%Y-%m-%d")
    vix = pd.DataFrame({"date": day, "open": np.round(open_, 4), "close": np.round(close, 4)})
    yields = pd.DataFrame({"date": day, "3M": np.round(ten + sp, 4), "10Y": np.round(ten, 4)})
    return vix, yields
