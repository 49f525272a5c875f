"""Command-line entry point: ``factorcausal <command> ...``.

Exit status is 0 on success, 1 for configuration or input errors and 2 for
numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, DataError, EstimationError
from .panel import load_panel

log = logging.getLogger("factorcausal")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def _data_flags(p: argparse.ArgumentParser, factors_required: bool = True) -> None:
    p.add_argument("--factors", required=factors_required, help="factor return file (CSV or TSV)")
    p.add_argument("--vix", help="file with date, open, close columns")
    p.add_argument("--yields", help="file with date, 3M, 10Y columns")
    p.add_argument("--scale", type=float, help="multiply raw values by this (0.01 for percent data)")
    p.add_argument("--date-column", default=None)


def _run_flags(p: argparse.ArgumentParser) -> None:
    _data_flags(p, factors_required=False)
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--out", dest="output_dir", help="output directory")
    p.add_argument("--window-months", type=int)
    p.add_argument("--step-months", type=int)
    p.add_argument("--max-lag", type=int)
    p.add_argument("--lag", type=int, help="fixed VAR lag (default: BIC)")
    p.add_argument("--resamples", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=["bootstrap", "block", "permutation"])
    p.add_argument("--workers", type=int, help="parallel windows (default: $FACTORCAUSAL_WORKERS or 1)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="factorcausal", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    st = sub.add_parser("stats", help="descriptive statistics")
    stsub = st.add_subparsers(dest="what", required=True)
    p = stsub.add_parser("summary", help="per-factor summary table")
    _data_flags(p)
    p.add_argument("--output")
    p = stsub.add_parser("ccf", help="cross-correlation of two factors")
    _data_flags(p)
    p.add_argument("--pair", required=True, help="A,B")
    p.add_argument("--max-lag", type=int, default=10)
    p.add_argument("--output")
    p = stsub.add_parser("indicators", help="per-window ES and z-scores of the indicators")
    _run_flags(p)
    p.add_argument("--output")

    p = sub.add_parser("infer", help="fit VAR-LiNGAM on a whole file")
    _data_flags(p)
    p.add_argument("--lag", type=int)
    p.add_argument("--max-lag", type=int, default=5)
    p.add_argument("--output")

    p = sub.add_parser("networks", help="per-window networks only")
    _run_flags(p)
    p = sub.add_parser("run", help="full pipeline")
    _run_flags(p)

    p = sub.add_parser("regress", help="Poisson GLM on an analytics CSV")
    p.add_argument("analytics", help="analytics_<kind>.csv from a run")
    p.add_argument("--response", default="total,instantaneous,lagged")
    p.add_argument("--anchor", choices=["start", "end"], default=None,
                   help="recompute time from window start or end dates")
    p.add_argument("--output")

    p = sub.add_parser("report", help="summarise an output directory")
    p.add_argument("directory")

    p = sub.add_parser("simulate", help="write a synthetic SVAR panel")
    p.add_argument("--output", required=True)
    p.add_argument("--n-factors", type=int, default=5)
    p.add_argument("--T", type=int, default=2000)
    p.add_argument("--lags", type=int, default=1)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--noise", default="laplace", choices=["laplace", "uniform", "student_t", "gaussian"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start-date", default="2000-01-03")
    p.add_argument("--scale", type=float, default=100.0,
                   help="simulated unit-variance values are divided by this before writing")
    p.add_argument("--indicators", help="directory for synthetic vix.csv and yields.csv")
    p.add_argument("--truth", help="write the true structural matrices as JSON")
    return ap


def _emit(rows, header, output) -> None:
    fh = open(output, "w", newline="") if output else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if output:
            fh.close()


def _config(args):
    from .pipeline import RunConfig, load_config

    over = {
        "factors": args.factors, "vix": args.vix, "yields": args.yields, "scale": args.scale,
        "date_column": args.date_column, "output_dir": args.output_dir,
        "window_months": args.window_months, "step_months": args.step_months,
        "max_lag": args.max_lag, "lag": args.lag, "resamples": args.resamples, "alpha": args.alpha,
        "seed": args.seed, "method": args.method,
    }
    over = {k: v for k, v in over.items() if v is not None}
    if args.config:
        return load_config(args.config, **over)
    if "factors" not in over:
        raise ConfigError("either --config or --factors is required")
    return RunConfig(**over)


def _cmd_stats(args) -> int:
    from .stats import ccf, summary_stats

    if args.what == "indicators":
        from .panel import make_windows
        from .pipeline import _zscores, load_inputs

        cfg = _config(args)
        panel, vix, spread, _ = load_inputs(cfg)
        if vix is None and spread is None:
            raise ConfigError("stats indicators needs --vix and/or --yields")
        windows = make_windows(panel.dates[0], panel.dates[-1], cfg.window_months, cfg.step_months,
                               cfg.month_start)
        zs = _zscores(cfg, windows, vix, spread)
        rows = [[w.index, w.start_date, w.end_date, kind, z.es_value[k], z.zscore[k]]
                for kind, z in zs.items() for k, w in enumerate(windows)]
        _emit(rows, ["window", "start_date", "end_date", "indicator", "es", "zscore"], args.output)
        return EXIT_OK
    panel = load_panel(args.factors, args.date_column or "date", scale=args.scale or 1.0)
    if args.what == "summary":
        rows = []
        header = None
        for i, name in enumerate(panel.names):
            d = summary_stats(panel.values[i]).as_dict()
            header = ["factor", *d]
            rows.append([name, *d.values()])
        _emit(rows, header, args.output)
        return EXIT_OK
    a, _, b = args.pair.partition(",")
    if a not in panel.names or b not in panel.names:
        raise ConfigError(f"--pair must name two of {list(panel.names)}")
    c = ccf(panel.values[panel.names.index(a)], panel.values[panel.names.index(b)], args.max_lag)
    K = args.max_lag
    _emit([[a, b, l, c[K + l]] for l in range(-K, K + 1)], ["x", "y", "lag", "correlation"], args.output)
    return EXIT_OK


def _cmd_infer(args) -> int:
    from .lingam import var_lingam

    panel = load_panel(args.factors, args.date_column or "date", scale=args.scale or 1.0)
    m = var_lingam(panel, L=args.lag, L_max=args.max_lag)
    doc = {"names": list(m.names), "L": m.L, "order": [m.names[i] for i in m.order],
           "W0": m.W0.tolist(), "W": m.W.tolist()}
    text = json.dumps(doc, indent=1)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _cmd_run(args, stop_after=None) -> int:
    from .pipeline import run_pipeline

    cfg = _config(args)
    manifest = run_pipeline(cfg, n_jobs=args.workers, stop_after=stop_after)
    fail = manifest["failure"]
    if fail is None:
        print(f"{len(manifest.get('windows', []))} windows -> {cfg.output_dir}")
        return EXIT_OK
    print(f"failed at {fail['stage']}: {fail['error']}", file=sys.stderr)
    return EXIT_CONFIG if fail["stage"] == "ingestion" else EXIT_NUMERIC


def _read_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DataError(f"{path} holds no rows")
    return {k: [r[k] for r in rows] for k in rows[0]}


def _floats(col) -> np.ndarray:
    return np.array([float(v) if v != "" else np.nan for v in col])


def _cmd_regress(args) -> int:
    import datetime as dt

    from .glm import regress_density

    cols = _read_csv(args.analytics)
    if args.anchor:
        key = "end_date" if args.anchor == "end" else "start_date"
        d = [dt.date.fromisoformat(x) for x in cols[key]]
        origin = dt.date.fromisoformat(cols["start_date"][0])
        t = np.array([(x - origin).days for x in d], dtype=float)
    else:
        t = _floats(cols["time_days"])
    resp = [r.strip() for r in args.response.split(",") if r.strip()]
    missing = [r for r in resp if r not in cols]
    if missing:
        raise ConfigError(f"unknown response columns {missing}")
    f = _floats(cols["f_zscore"]) if "f_zscore" in cols and any(cols["f_zscore"]) else None
    bc = _floats(cols["bc_zscore"]) if "bc_zscore" in cols and any(cols["bc_zscore"]) else None
    reg = regress_density({r: _floats(cols[r]) for r in resp}, t, f, bc)
    if args.output:
        reg.to_csv(args.output)
    print(reg.to_text(f"Poisson GLM on {Path(args.analytics).name}"))
    return EXIT_OK


def _cmd_report(args) -> int:
    d = Path(args.directory)
    mpath = d / "manifest.json"
    if not mpath.is_file():
        raise ConfigError(f"no manifest.json in {d}")
    man = json.loads(mpath.read_text())
    print(f"status: {man['status']}  config hash: {man['config_hash'][:12]}")
    if man.get("failure"):
        print(f"failure: {man['failure']}")
    for kind in ("causal", "correlation"):
        p = d / f"analytics_{kind}.csv"
        if not p.is_file():
            continue
        cols = _read_csv(p)
        tot = _floats(cols["total"])
        jac = _floats(cols["jaccard"])
        deg = _floats(cols["market_out_degree"])
        k = int(np.nanargmax(deg))
        print(f"{kind}: {tot.size} windows, mean edges {np.mean(tot):.2f}, "
              f"mean jaccard {np.nanmean(jac):.3f}, max market out-degree {int(deg[k])} "
              f"in {cols['start_date'][k]}..{cols['end_date'][k]}")
    rep = d / "glm_report.txt"
    if rep.is_file():
        print()
        print(rep.read_text(), end="")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    from .panel import write_panel
    from .synth import generate, random_spec, synthetic_indicators

    spec = random_spec(args.n_factors, args.lags, args.T, args.density, args.seed, args.noise)
    panel, truth = generate(spec, start_date=args.start_date)
    write_panel(panel, args.output, scale=args.scale)
    if args.indicators:
        out = Path(args.indicators)
        out.mkdir(parents=True, exist_ok=True)
        vix, yields = synthetic_indicators(panel.dates, seed=args.seed + 1)
        vix.to_csv(out / "vix.csv", index=False)
        yields.to_csv(out / "yields.csv", index=False)
    if args.truth:
        Path(args.truth).write_text(json.dumps(
            {"names": list(truth.names), "order": list(truth.order), "W0": truth.W0.tolist(),
             "W": truth.W.tolist()}, indent=1) + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {
        "stats": _cmd_stats, "infer": _cmd_infer, "regress": _cmd_regress, "report": _cmd_report,
        "simulate": _cmd_simulate, "run": _cmd_run,
        "networks": lambda a: _cmd_run(a, stop_after="networks"),
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EstimationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
