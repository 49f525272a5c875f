"""End-to-end sliding-window analysis: ingestion, networks, analytics, regression."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import platform
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, DataError, EstimationError, FactorCausalError
from .glm import DensityRegression, regress_density
from .graph import edge_counts, edge_set, is_dag, jaccard, out_degree, rolling_mean
from .netinfer import causal_network, correlation_network, network_from_json, network_to_json, write_edge_csv
from .panel import (IndicatorSeries, ReturnPanel, WindowSpec, align, load_indicator, load_panel,
                    load_spread, make_windows, slice_panel)
from .stats import ccf, indicator_zscores, summary_stats
from .var import select_lag

log = logging.getLogger(__name__)

__all__ = ["RunConfig", "load_config", "run_pipeline", "load_inputs", "WindowResult"]

KINDS = ("causal", "correlation")


@dataclass(frozen=True)
class RunConfig:
    factors: str
    output_dir: str = "out"
    vix: str | None = None
    yields: str | None = None
    scale: float = 1.0
    date_column: str = "date"
    factor_columns: tuple | None = None
    vix_open_column: str = "open"
    vix_close_column: str = "close"
    yields_short_column: str = "3M"
    yields_long_column: str | None = "10Y"
    window_months: int = 18
    step_months: int = 3
    month_start: bool = True
    min_obs: int = 100
    lag: int | None = None
    max_lag: int = 5
    resamples: int = 5000
    alpha: float = 0.05
    seed: int = 0
    method: str = "bootstrap"
    block_length: int = 20
    include_self_lag: bool = True
    history_years: float = 10.0
    min_history: int = 4
    tail_quantile: float = 0.95
    quantile_method: str = "linear"
    bc_transform: str = "level"
    market_factor: str = "Mkt-RF"
    rolling_window: int = 4
    time_anchor: str = "end"
    ccf_max_lag: int = 10

    def __post_init__(self):
        if self.resamples < 1:
            raise ConfigError("resamples must be at least 1")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.method not in ("bootstrap", "block", "permutation"):
            raise ConfigError(f"unknown resampling method {self.method!r}")
        if self.time_anchor not in ("start", "end"):
            raise ConfigError("time_anchor must be 'start' or 'end'")
        if self.bc_transform not in ("level", "diff"):
            raise ConfigError("bc_transform must be 'level' or 'diff'")
        if self.factor_columns is not None:
            object.__setattr__(self, "factor_columns", tuple(self.factor_columns))

    def validate_paths(self) -> None:
        for key in ("factors", "vix", "yields"):
            p = getattr(self, key)
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{key} file not found: {p}")

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if d["factor_columns"] is not None:
            d["factor_columns"] = list(d["factor_columns"])
        return d

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


def load_config(path, **overrides) -> RunConfig:
    """Read a TOML run configuration.

    Keys may sit at top level or inside one level of tables
    (``[data]``, ``[windows]`` ...); relative paths resolve against the
    config file's directory.
    """
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    flat = {}
    for k, v in raw.items():
        if isinstance(v, dict):
            flat.update(v)
        else:
            flat[k] = v
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(flat) - fields
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("factors", "vix", "yields", "output_dir"):
        if flat.get(key) and not Path(flat[key]).is_absolute():
            flat[key] = str(path.parent / flat[key])
    if flat.get("lag") == 0:
        flat["lag"] = None
    flat.update({k: v for k, v in overrides.items() if v is not None})
    if "factors" not in flat:
        raise ConfigError("config must name a factors file")
    try:
        return RunConfig(**flat)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_inputs(cfg: RunConfig):
    """Load and date-align the factor panel and any indicator files."""
    panel = load_panel(cfg.factors, cfg.date_column, cfg.factor_columns, cfg.scale)
    items = [panel]
    if cfg.vix:
        items.append(load_indicator(cfg.vix, cfg.date_column, cfg.vix_open_column,
                                    cfg.vix_close_column, "VIX"))
    if cfg.yields:
        items.append(load_spread(cfg.yields, cfg.date_column, cfg.yields_short_column,
                                 cfg.yields_long_column, "3M10Y"))
    # indicators keep their own (longer) history for the trailing z-scores;
    # only the factor panel is restricted to the common dates
    aligned = align(items)
    vix = next((it for it in items[1:] if it.name == "VIX"), None)
    spread = next((it for it in items[1:] if it.name == "3M10Y"), None)
    return aligned[0], vix, spread, panel.n_dropped


# ---------------------------------------------------------------- per-window work


@dataclass
class WindowResult:
    window: WindowSpec
    lag: int | None = None
    networks: dict | None = None
    error: str | None = None


def _network_path(out: Path, kind: str, k: int) -> Path:
    return out / "networks" / kind / f"window_{k:03d}.json"


def _process_window(panel: ReturnPanel, w: WindowSpec, cfg: RunConfig, out: Path, digest: str) -> WindowResult:
    paths = {kind: _network_path(out, kind, w.index) for kind in KINDS}
    cached = {}
    for kind, p in paths.items():
        if p.is_file():
            try:
                net = network_from_json(p.read_text())
                if net.meta.get("config_hash") == digest:
                    cached[kind] = net
            except (ValueError, KeyError):
                pass
    if len(cached) == len(KINDS):
        return WindowResult(w, cached["causal"].L, cached)
    try:
        sl = slice_panel(panel, w, cfg.min_obs)
        seed = cfg.seed * 100003 + w.index
        lag = cfg.lag if cfg.lag is not None else select_lag(sl, cfg.max_lag)
        nets = dict(cached)
        if "causal" not in nets:
            nets["causal"] = causal_network(sl, lag, cfg.resamples, cfg.alpha, seed, w, cfg.max_lag,
                                            cfg.method, cfg.block_length, n_jobs=1)
        if "correlation" not in nets:
            nets["correlation"] = correlation_network(sl, cfg.resamples, cfg.alpha, seed, w, cfg.method,
                                                      cfg.block_length, cfg.include_self_lag, n_jobs=1)
    except (EstimationError, DataError) as exc:
        return WindowResult(w, error=f"{type(exc).__name__}: {exc}")
    for kind, net in nets.items():
        if kind in cached:
            continue
        net.meta["config_hash"] = digest
        net.meta["selected_lag"] = lag
        paths[kind].parent.mkdir(parents=True, exist_ok=True)
        paths[kind].write_text(network_to_json(net))
    return WindowResult(w, lag, nets)


# ---------------------------------------------------------------- outputs


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return "" if not np.isfinite(x) else repr(float(x))
    return str(x)


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _time_days(windows, anchor: str) -> np.ndarray:
    origin = windows[0].start_date
    return np.array([((w.end_date if anchor == "end" else w.start_date) - origin).days
                     for w in windows], dtype=float)


def _zscores(cfg, windows, vix, spread):
    out = {}
    if vix is not None:
        out["fear"] = indicator_zscores(vix, windows, "fear", cfg.history_years, cfg.min_history,
                                        cfg.tail_quantile, quantile_method=cfg.quantile_method)
    if spread is not None:
        out["business_cycle"] = indicator_zscores(spread, windows, "business_cycle", cfg.history_years,
                                                  cfg.min_history, cfg.tail_quantile, cfg.bc_transform,
                                                  cfg.quantile_method)
    return out


def _write_descriptives(panel: ReturnPanel, cfg: RunConfig, out: Path) -> None:
    rows = []
    for i, name in enumerate(panel.names):
        s = summary_stats(panel.values[i], quantile_method=cfg.quantile_method)
        rows.append([name, *s.as_dict().values()])
    fields = [f.name for f in dataclasses.fields(summary_stats(np.array([0.01, -0.01])))]
    _write_rows(out / "summary_stats.csv", ["factor", *fields], rows)
    rows = []
    K = cfg.ccf_max_lag
    for i in range(panel.n_factors):
        for j in range(i + 1, panel.n_factors):
            try:
                c = ccf(panel.values[i], panel.values[j], K)
            except (DataError, EstimationError):
                continue
            rows.extend([panel.names[i], panel.names[j], l, c[K + l]] for l in range(-K, K + 1))
    _write_rows(out / "ccf.csv", ["x", "y", "lag", "correlation"], rows)


def _regress(counts: dict, time_days, f, bc, failures: list, label: str) -> DensityRegression | None:
    fits, dropped = {}, 0
    for rel, y in counts.items():
        try:
            res = regress_density({rel: y}, time_days, f, bc)
            fits.update(res.fits)
            dropped = res.n_dropped
        except (EstimationError, DataError) as exc:
            failures.append(f"glm {label}/{rel}: {type(exc).__name__}: {exc}")
    return DensityRegression(fits, dropped) if fits else None


def run_pipeline(cfg: RunConfig, n_jobs: int | None = None, stop_after: str | None = None) -> dict:
    """Run every window for both network kinds and write all outputs.

    Existing per-window network files produced under the same config hash
    are reused, so an interrupted run resumes where it stopped. With
    ``stop_after="networks"`` only the per-window networks are produced.
    Returns the manifest, which is also written to ``manifest.json``.
    """
    from .netinfer import default_workers

    t0 = time.perf_counter()
    timings = {}
    cfg.validate_paths()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    manifest = {
        "config": cfg.as_dict(),
        "config_hash": digest,
        "seed": cfg.seed,
        "versions": _versions(),
        "status": "running",
        "failure": None,
        "warnings": [],
    }

    def _finish(status, failure=None):
        manifest["status"] = status
        manifest["failure"] = failure
        timings["total"] = time.perf_counter() - t0
        manifest["timings_sec"] = {k: round(v, 3) for k, v in timings.items()}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
        return manifest

    try:
        panel, vix, spread, n_dropped = load_inputs(cfg)
        windows = make_windows(panel.dates[0], panel.dates[-1], cfg.window_months, cfg.step_months,
                               cfg.month_start)
    except FactorCausalError as exc:
        return _finish("failed", {"stage": "ingestion", "error": str(exc)})
    manifest["data"] = {"names": list(panel.names), "n_obs": panel.n_obs, "n_dropped": n_dropped,
                        "first_date": str(panel.dates[0]), "last_date": str(panel.dates[-1])}
    manifest["windows"] = [w.to_dict() for w in windows]
    timings["ingestion"] = time.perf_counter() - t0

    try:
        _write_descriptives(panel, cfg, out)
    except FactorCausalError as exc:
        manifest["warnings"].append(f"descriptive statistics: {exc}")

    t1 = time.perf_counter()
    workers = default_workers() if n_jobs is None else n_jobs
    if workers > 1:
        from joblib import Parallel, delayed
        results = Parallel(n_jobs=workers)(delayed(_process_window)(panel, w, cfg, out, digest) for w in windows)
    else:
        results = [_process_window(panel, w, cfg, out, digest) for w in windows]
    timings["networks"] = time.perf_counter() - t1
    manifest["networks"] = [str(_network_path(out, kind, r.window.index).relative_to(out))
                            for r in results if r.networks for kind in KINDS]
    manifest["selected_lags"] = [r.lag for r in results]
    failed = [r for r in results if r.error]
    if failed:
        return _finish("failed", {"stage": "networks", "window": failed[0].window.index,
                                  "error": failed[0].error,
                                  "failed_windows": [r.window.index for r in failed]})
    if stop_after == "networks":
        return _finish("ok")

    t2 = time.perf_counter()
    try:
        zs = _zscores(cfg, windows, vix, spread)
    except FactorCausalError as exc:
        return _finish("failed", {"stage": "indicators", "error": str(exc)})
    fz = zs["fear"].zscore if "fear" in zs else None
    bz = zs["business_cycle"].zscore if "business_cycle" in zs else None
    if zs:
        _write_rows(out / "zscores.csv",
                    ["window", "start_date", "end_date", "fear_es", "f_zscore", "bc_es", "bc_zscore"],
                    [[w.index, w.start_date, w.end_date,
                      zs["fear"].es_value[k] if "fear" in zs else None, fz[k] if fz is not None else None,
                      zs["business_cycle"].es_value[k] if bz is not None else None,
                      bz[k] if bz is not None else None]
                     for k, w in enumerate(windows)])

    market = cfg.market_factor if cfg.market_factor in panel.names else panel.names[0]
    if market != cfg.market_factor:
        manifest["warnings"].append(f"market factor {cfg.market_factor!r} absent; using {market!r}")
    manifest["market_factor"] = market
    tdays = _time_days(windows, cfg.time_anchor)
    analytics = {}
    for kind in KINDS:
        nets = [r.networks[kind] for r in results]
        counts = np.array([edge_counts(n) for n in nets])
        jac = np.full(len(nets), np.nan)
        for k in range(1, len(nets)):
            jac[k] = jaccard(edge_set(nets[k - 1]), edge_set(nets[k]))
        roll = np.full(len(nets), np.nan)
        rm = rolling_mean(jac[1:], cfg.rolling_window)
        roll[cfg.rolling_window:] = rm
        odeg = [out_degree(n, market) for n in nets]
        odeg_d = [out_degree(n, market, distinct=True) for n in nets]
        acyclic = [is_dag(n) for n in nets] if kind == "causal" else [None] * len(nets)
        analytics[kind] = {"counts": counts, "out_degree": np.array(odeg)}
        _write_rows(out / f"analytics_{kind}.csv",
                    ["window", "start_date", "end_date", "time_days", "lag", "total", "instantaneous",
                     "lagged", "jaccard", "jaccard_rolling", "market_out_degree",
                     "market_out_degree_distinct", "acyclic", "f_zscore", "bc_zscore"],
                    [[w.index, w.start_date, w.end_date, int(tdays[k]), results[k].lag, *counts[k],
                      jac[k], roll[k], odeg[k], odeg_d[k], acyclic[k],
                      fz[k] if fz is not None else None, bz[k] if bz is not None else None]
                     for k, w in enumerate(windows)])
        write_edge_csv(nets, out / f"edges_{kind}.csv")
    if not all(is_dag(r.networks["causal"]) for r in results):
        return _finish("failed", {"stage": "analytics", "error": "cyclic instantaneous causal subgraph"})
    timings["analytics"] = time.perf_counter() - t2

    glm_failures = manifest["warnings"]
    tables = {}
    report = []
    for kind in KINDS:
        c = analytics[kind]["counts"]
        reg = _regress({"overall": c[:, 0], "instantaneous": c[:, 1], "lagged": c[:, 2]},
                       tdays, fz, bz, glm_failures, kind)
        if reg is not None:
            name = f"glm_{kind}.csv"
            reg.to_csv(out / name)
            tables[kind] = name
            report.append(reg.to_text(f"Poisson GLM: edge counts in {kind} networks"))
    reg = _regress({"market_out_degree": analytics["causal"]["out_degree"]}, tdays, fz, bz,
                   glm_failures, "market")
    if reg is not None:
        reg.to_csv(out / "glm_market_out_degree.csv")
        tables["market_out_degree"] = "glm_market_out_degree.csv"
        report.append(reg.to_text(f"Poisson GLM: out-degree of {market} in causal networks"))
    report.append("Note: consecutive windows overlap, so counts are serially dependent; the\n"
                  "standard errors above assume independent observations.")
    (out / "glm_report.txt").write_text("\n\n".join(report) + "\n")
    manifest["glm_tables"] = tables
    manifest["analytics"] = [f"analytics_{k}.csv" for k in KINDS] + (["zscores.csv"] if zs else [])
    return _finish("ok")


def _versions() -> dict:
    import numpy
    import scipy
    import sklearn

    from . import __version__

    return {"factorcausal": __version__, "python": platform.python_version(),
            "numpy": numpy.__version__, "scipy": scipy.__version__, "scikit-learn": sklearn.__version__}
