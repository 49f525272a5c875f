"""Resampling-validated causal and correlation networks for one window."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator

from ._validation import as_observations
from .exceptions import DataError, EstimationError
from .lingam import causal_model_from_var, is_acyclic_under
from .panel import WindowSpec
from .var import fit_var_design, lag_matrix, select_lag

__all__ = [
    "Edge",
    "EdgeSignificance",
    "FactorNetwork",
    "CoefficientLayout",
    "causal_layout",
    "correlation_layout",
    "resample_significance",
    "causal_network",
    "correlation_network",
    "FactorNetworkEstimator",
    "network_to_json",
    "network_from_json",
    "write_edge_csv",
    "default_workers",
]

RESAMPLING_METHODS = ("bootstrap", "block", "permutation")
WORKERS_ENV = "FACTORCAUSAL_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------- layouts


@dataclass(frozen=True)
class CoefficientLayout:
    """Maps a flat coefficient vector to network edges.

    Entry ``c`` describes an edge from ``src[c]`` at lag ``lag[c]`` into
    ``dst[c]`` (factor indices).
    """

    src: np.ndarray
    dst: np.ndarray
    lag: np.ndarray

    def __len__(self):
        return self.src.size


def causal_layout(N: int, L: int) -> CoefficientLayout:
    """Off-diagonal ``W0`` entries, then every entry of ``W1..WL`` (row-major)."""
    dst, src = np.nonzero(~np.eye(N, dtype=bool))
    lag = [np.zeros(dst.size, int)]
    d_all, s_all = [dst], [src]
    gi, gj = np.indices((N, N))
    for l in range(1, L + 1):
        d_all.append(gi.ravel())
        s_all.append(gj.ravel())
        lag.append(np.full(N * N, l))
    return CoefficientLayout(np.concatenate(s_all), np.concatenate(d_all), np.concatenate(lag))


def correlation_layout(N: int, include_self_lag: bool = True) -> CoefficientLayout:
    """Unordered lag-0 pairs (i < j), then lag-1 ordered pairs."""
    a, b = np.triu_indices(N, 1)
    gi, gj = np.indices((N, N))
    di, sj = gi.ravel(), gj.ravel()
    if not include_self_lag:
        keep = di != sj
        di, sj = di[keep], sj[keep]
    return CoefficientLayout(
        src=np.concatenate([a, sj]),
        dst=np.concatenate([b, di]),
        lag=np.concatenate([np.zeros(a.size, int), np.ones(di.size, int)]),
    )


# ---------------------------------------------------------------- estimators on a lag design


def _causal_coefs(Yt, X, L, names, layout):
    cm = causal_model_from_var(fit_var_design(Yt, X, L, names))
    A = cm.adjacency_matrices
    return A[layout.lag, layout.dst, layout.src], cm


def _corr_coefs(Yt, X, layout):
    N = Yt.shape[1]
    block = np.hstack([Yt, X[:, 1:1 + N]])
    C = np.corrcoef(block, rowvar=False)
    if not np.all(np.isfinite(C)):
        raise EstimationError("zero-variance column in correlation estimate")
    # lag 0: corr(y_t^src, y_t^dst); lag 1: corr(y_t^dst, y_{t-1}^src)
    return np.where(layout.lag == 0, C[layout.src, layout.dst], C[layout.dst, N + layout.src])


# ---------------------------------------------------------------- significance


@dataclass(frozen=True, eq=False)
class EdgeSignificance:
    """Point estimates, resampling bounds and keep flags per coefficient.

    For ``bootstrap`` and ``block`` the bounds are percentile limits of the
    resampled estimates and a coefficient is kept when they exclude zero.
    For ``permutation`` the bounds are null-distribution limits and a
    coefficient is kept when its point estimate falls outside them.
    """

    estimate: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    keep: np.ndarray
    alpha: float
    method: str
    draws: np.ndarray = field(repr=False)
    n_failed: int = 0

    def at_alpha(self, alpha: float) -> "EdgeSignificance":
        """Re-threshold the same draws at another level."""
        return _summarise(self.estimate, self.draws, alpha, self.method, self.n_failed)


def _summarise(estimate, draws, alpha, method, n_failed) -> EdgeSignificance:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    lower, upper = np.nanquantile(draws, [alpha / 2, 1 - alpha / 2], axis=0, method="linear")
    if method == "permutation":
        keep = (estimate < lower) | (estimate > upper)
    else:
        keep = (lower > 0) | (upper < 0)
    return EdgeSignificance(estimate, lower, upper, keep, alpha, method, draws, n_failed)


def _replicate_rng(seed: int, b: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(b)]))


def _draw_rows(rng, n, method, block_length):
    if method == "bootstrap":
        return rng.integers(0, n, size=n)
    if method == "block":
        blen = max(1, min(block_length, n))
        n_blocks = -(-n // blen)
        starts = rng.integers(0, n - blen + 1, size=n_blocks)
        return (starts[:, None] + np.arange(blen)).ravel()[:n]
    raise ValueError(method)


def _run_chunk(replicates, Y, L, seed, method, block_length, coef_fn):
    Yt, X = lag_matrix(Y, L)
    rows = []
    for b in replicates:
        rng = _replicate_rng(seed, b)
        try:
            if method == "permutation":
                Yp = np.column_stack([rng.permutation(Y[:, i]) for i in range(Y.shape[1])])
                rows.append(coef_fn(*lag_matrix(Yp, L)))
            else:
                idx = _draw_rows(rng, Yt.shape[0], method, block_length)
                rows.append(coef_fn(Yt[idx], X[idx]))
        except (EstimationError, DataError, np.linalg.LinAlgError):
            rows.append(None)
    return rows


def resample_significance(data, estimator: str = "causal", B: int = 5000, alpha: float = 0.05,
                          seed: int = 0, L: int | None = 1, L_max: int = 5,
                          method: str = "bootstrap", block_length: int = 20,
                          include_self_lag: bool = True, n_jobs: int | None = None,
                          max_failure_rate: float = 0.10, names=None):
    """Resampling bounds for every coefficient of a causal or correlation estimate.

    Each replicate draws ``T - L`` rows with replacement from the lag-embedded
    sample ``(y_t, y_{t-1}, ..., y_{t-L})`` and re-estimates all coefficients.
    Replicate ``b`` uses its own generator seeded by ``(seed, b)``, so the
    result does not depend on ``n_jobs``.

    Returns ``(significance, layout, point)`` where ``point`` is the fitted
    :class:`~factorcausal.lingam.CausalModel` (causal) or None.
    """
    Y, names = as_observations(data, names)
    if B < 1:
        raise ValueError("B must be at least 1")
    if method not in RESAMPLING_METHODS:
        raise ValueError(f"method must be one of {RESAMPLING_METHODS}")
    N = Y.shape[1]
    if estimator == "causal":
        if L is None:
            L = select_lag(Y, L_max, names)
        layout = causal_layout(N, L)

        def coef_fn(Yt, X):
            return _causal_coefs(Yt, X, L, names, layout)[0]
    elif estimator == "correlation":
        L = 1
        layout = correlation_layout(N, include_self_lag)

        def coef_fn(Yt, X):
            return _corr_coefs(Yt, X, layout)
    else:
        raise ValueError(f"unknown estimator {estimator!r}")

    Yt, X = lag_matrix(Y, L)
    if Yt.shape[0] <= N * L + 1:
        raise DataError(f"{Yt.shape[0]} observations are too few for this estimate")
    point = None
    if estimator == "causal":
        estimate, point = _causal_coefs(Yt, X, L, names, layout)
    else:
        estimate = coef_fn(Yt, X)

    n_jobs = default_workers() if n_jobs is None else n_jobs
    replicates = np.arange(B)
    if n_jobs > 1:
        chunks = np.array_split(replicates, n_jobs * 4)
        parts = Parallel(n_jobs=n_jobs)(
            delayed(_run_chunk)(c, Y, L, seed, method, block_length, coef_fn) for c in chunks if c.size
        )
        rows = [r for part in parts for r in part]
    else:
        rows = _run_chunk(replicates, Y, L, seed, method, block_length, coef_fn)

    n_failed = sum(r is None for r in rows)
    if n_failed > max_failure_rate * B:
        raise EstimationError(
            f"{n_failed} of {B} resamples failed to estimate ({estimator}, {method}); "
            "the window is probably too short or degenerate"
        )
    draws = np.array([np.full(len(layout), np.nan) if r is None else r for r in rows])
    sig = _summarise(estimate, draws, alpha, method, n_failed)
    return sig, layout, point


# ---------------------------------------------------------------- networks


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    lag: int
    weight: float
    significant: bool
    lower: float = float("nan")
    upper: float = float("nan")


@dataclass(frozen=True, eq=False)
class FactorNetwork:
    """Signed weighted directed graph over (factor, lag layer) nodes."""

    kind: str
    names: tuple
    L: int
    alpha: float
    edges: tuple
    window: WindowSpec | None = None
    order: tuple | None = None
    meta: dict = field(default_factory=dict)

    @property
    def nodes(self) -> list[str]:
        layers = [f"t-{l}" for l in range(self.L, 0, -1)] + ["t"]
        return [f"{n}@{layer}" for layer in layers for n in self.names]

    def significant_edges(self) -> list[Edge]:
        return [e for e in self.edges if e.significant]

    def adjacency(self, lag: int, significant_only: bool = True) -> np.ndarray:
        """``A[i, j]`` is the weight of the edge ``j -> i`` at ``lag``."""
        idx = {n: i for i, n in enumerate(self.names)}
        A = np.zeros((len(self.names),) * 2)
        for e in self.edges:
            if e.lag == lag and (e.significant or not significant_only):
                A[idx[e.dst], idx[e.src]] = e.weight
                if self.kind == "correlation" and lag == 0:
                    A[idx[e.src], idx[e.dst]] = e.weight
        return A


def _build_network(kind, names, L, sig, layout, window, order=None, meta=None):
    edges = tuple(
        Edge(names[s], names[d], int(l), float(w), bool(k), float(lo), float(hi))
        for s, d, l, w, k, lo, hi in zip(layout.src, layout.dst, layout.lag, sig.estimate,
                                         sig.keep, sig.lower, sig.upper)
    )
    meta = dict(meta or {})
    meta.update(method=sig.method, n_resamples=int(sig.draws.shape[0]), n_failed=sig.n_failed)
    return FactorNetwork(kind, tuple(names), int(L), float(sig.alpha), edges, window, order, meta)


def causal_network(data, L: int | None = 1, B: int = 5000, alpha: float = 0.05, seed: int = 0,
                   window: WindowSpec | None = None, L_max: int = 5, method: str = "bootstrap",
                   block_length: int = 20, n_jobs: int | None = None, names=None) -> FactorNetwork:
    """VAR-LiNGAM point estimate with resampling-based keep flags.

    An instantaneous coefficient that the point model fixes at zero (the
    target precedes the source in the causal order) is never flagged, so
    the significant instantaneous subgraph inherits the point model's
    acyclicity.
    """
    Y, names = as_observations(data, names)
    sig, layout, cm = resample_significance(Y, "causal", B, alpha, seed, L, L_max, method,
                                            block_length, n_jobs=n_jobs, names=names)
    structural_zero = (layout.lag == 0) & (sig.estimate == 0)
    sig = EdgeSignificance(sig.estimate, sig.lower, sig.upper, sig.keep & ~structural_zero,
                           sig.alpha, sig.method, sig.draws, sig.n_failed)
    if not is_acyclic_under(cm.W0, cm.order):
        raise EstimationError("instantaneous effects are not acyclic under the causal order")
    return _build_network("causal", names, cm.L, sig, layout, window, tuple(int(o) for o in cm.order),
                          {"n_obs": int(Y.shape[0])})


def correlation_network(data, B: int = 5000, alpha: float = 0.05, seed: int = 0,
                        window: WindowSpec | None = None, method: str = "bootstrap",
                        block_length: int = 20, include_self_lag: bool = True,
                        n_jobs: int | None = None, names=None) -> FactorNetwork:
    """Pearson correlations at lag 0 (unordered pairs) and lag 1 (ordered pairs)."""
    Y, names = as_observations(data, names)
    sig, layout, _ = resample_significance(Y, "correlation", B, alpha, seed, 1, 1, method,
                                           block_length, include_self_lag, n_jobs, names=names)
    return _build_network("correlation", names, 1, sig, layout, window, None,
                          {"n_obs": int(Y.shape[0]), "include_self_lag": include_self_lag})


class FactorNetworkEstimator(BaseEstimator):
    """Estimator wrapper producing a :class:`FactorNetwork` from a panel.

    Parameters
    ----------
    kind : {"causal", "correlation"}
    lags : int or None, default=1
        VAR order for causal networks; None selects it by BIC.
    max_lag : int, default=5
    n_resamples : int, default=5000
    alpha : float, default=0.05
    method : {"bootstrap", "block", "permutation"}, default="bootstrap"
    block_length : int, default=20
    include_self_lag : bool, default=True
    random_state : int, default=0
    n_jobs : int or None, default=None
        Worker count; None reads ``FACTORCAUSAL_WORKERS`` (default 1).

    Attributes
    ----------
    network_ : FactorNetwork
    """

    def __init__(self, kind="causal", lags=1, max_lag=5, n_resamples=5000, alpha=0.05,
                 method="bootstrap", block_length=20, include_self_lag=True, random_state=0,
                 n_jobs=None):
        self.kind = kind
        self.lags = lags
        self.max_lag = max_lag
        self.n_resamples = n_resamples
        self.alpha = alpha
        self.method = method
        self.block_length = block_length
        self.include_self_lag = include_self_lag
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None, window: WindowSpec | None = None):
        Y, names = as_observations(X)
        if self.kind == "causal":
            self.network_ = causal_network(Y, self.lags, self.n_resamples, self.alpha,
                                           self.random_state, window, self.max_lag, self.method,
                                           self.block_length, self.n_jobs, names)
        elif self.kind == "correlation":
            self.network_ = correlation_network(Y, self.n_resamples, self.alpha, self.random_state,
                                                window, self.method, self.block_length,
                                                self.include_self_lag, self.n_jobs, names)
        else:
            raise ValueError(f"unknown kind {self.kind!r}")
        self.n_features_in_ = Y.shape[1]
        return self


# ---------------------------------------------------------------- serialisation


def _num(x: float):
    return None if not np.isfinite(x) else float(x)


def network_to_json(net: FactorNetwork) -> str:
    doc = {
        "window": net.window.to_dict() if net.window else None,
        "kind": net.kind,
        "alpha": net.alpha,
        "L": net.L,
        "names": list(net.names),
        "order": list(net.order) if net.order is not None else None,
        "nodes": net.nodes,
        "edges": [
            {"src": e.src, "dst": e.dst, "lag": e.lag, "weight": e.weight,
             "significant": e.significant, "lower": _num(e.lower), "upper": _num(e.upper)}
            for e in net.edges
        ],
        "meta": net.meta,
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def network_from_json(text: str) -> FactorNetwork:
    import datetime as dt

    doc = json.loads(text)
    w = doc.get("window")
    window = None
    if w:
        window = WindowSpec(w["index"], dt.date.fromisoformat(w["start_date"]),
                            dt.date.fromisoformat(w["end_date"]), w["length_months"], w["step_months"])
    nan = float("nan")
    edges = tuple(
        Edge(e["src"], e["dst"], int(e["lag"]), float(e["weight"]), bool(e["significant"]),
             nan if e.get("lower") is None else e["lower"], nan if e.get("upper") is None else e["upper"])
        for e in doc["edges"]
    )
    order = tuple(doc["order"]) if doc.get("order") is not None else None
    return FactorNetwork(doc["kind"], tuple(doc["names"]), int(doc["L"]), float(doc["alpha"]),
                         edges, window, order, doc.get("meta", {}))


def write_edge_csv(networks, path, only_significant: bool = False) -> None:
    """Flat edge list across networks, one row per edge."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window", "start_date", "end_date", "kind", "src", "dst", "lag",
                    "weight", "significant"])
        for net in networks:
            wi = net.window
            for e in net.edges:
                if only_significant and not e.significant:
                    continue
                w.writerow([wi.index if wi else "", wi.start_date if wi else "", wi.end_date if wi else "",
                            net.kind, e.src, e.dst, e.lag, repr(e.weight), int(e.significant)])
