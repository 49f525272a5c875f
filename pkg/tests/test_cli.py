import json
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from factorcausal.cli import main
from factorcausal.panel import load_panel


@pytest.fixture(scope="module")
def sim(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--output", str(d / "f.csv"), "--T", "1500", "--seed", "2",
                 "--indicators", str(d), "--truth", str(d / "truth.json")]) == 0
    return d


def test_simulate_round_trips_through_loader(sim):
    panel = load_panel(sim / "f.csv")
    assert panel.n_factors == 5 and panel.n_obs == 1500
    assert 0.003 < panel.values.std() < 0.03
    truth = json.loads((sim / "truth.json").read_text())
    assert np.array(truth["W0"]).shape == (5, 5)
    assert (sim / "vix.csv").is_file() and (sim / "yields.csv").is_file()


def test_stats_commands(sim, tmp_path, capsys):
    assert main(["stats", "summary", "--factors", str(sim / "f.csv"),
                 "--output", str(tmp_path / "s.csv")]) == 0
    assert len(pd.read_csv(tmp_path / "s.csv")) == 5
    assert main(["stats", "ccf", "--factors", str(sim / "f.csv"), "--pair", "f0,f1",
                 "--max-lag", "3"]) == 0
    assert capsys.readouterr().out.count("\n") == 1 + 7
    assert main(["stats", "ccf", "--factors", str(sim / "f.csv"), "--pair", "f0,zz"]) == 1
    assert main(["stats", "indicators", "--factors", str(sim / "f.csv"), "--vix", str(sim / "vix.csv"),
                 "--window-months", "12", "--output", str(tmp_path / "z.csv")]) == 0
    assert set(pd.read_csv(tmp_path / "z.csv")["indicator"]) == {"fear"}


def test_infer(sim, tmp_path):
    assert main(["infer", "--factors", str(sim / "f.csv"), "--output", str(tmp_path / "m.json")]) == 0
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["L"] == 1 and len(doc["order"]) == 5


def test_run_report_regress(sim, tmp_path, capsys):
    out = tmp_path / "out"
    args = ["--factors", str(sim / "f.csv"), "--vix", str(sim / "vix.csv"), "--yields",
            str(sim / "yields.csv"), "--out", str(out), "--window-months", "12", "--step-months", "3",
            "--resamples", "20", "--lag", "1"]
    assert main(["networks", *args]) == 0
    assert not (out / "analytics_causal.csv").exists()
    assert main(["run", *args]) == 0
    assert main(["report", str(out)]) == 0
    assert "causal:" in capsys.readouterr().out
    assert main(["regress", str(out / "analytics_causal.csv"), "--response", "total",
                 "--output", str(tmp_path / "g.csv")]) == 0
    assert set(pd.read_csv(tmp_path / "g.csv")["relation"]) == {"total"}
    assert main(["regress", str(out / "analytics_causal.csv"), "--response", "nope"]) == 1


def test_exit_codes(sim, tmp_path):
    assert main(["run", "--factors", str(tmp_path / "missing.csv")]) == 1
    assert main(["run", "--out", str(tmp_path)]) == 1
    assert main(["report", str(tmp_path)]) == 1
    flat = tmp_path / "flat.csv"
    rng = np.random.default_rng(0)
    pd.DataFrame({"date": pd.bdate_range("2001-01-01", periods=300).strftime("%Y-%m-%d"),
                  "a": rng.standard_normal(300), "b": 0.5}).to_csv(flat, index=False)
    assert main(["infer", "--factors", str(flat), "--lag", "1"]) == 2
    assert main(["run", "--factors", str(sim / "f.csv"), "--out", str(tmp_path / "o"),
                 "--window-months", "12", "--resamples", "5", "--lag", "1",
                 "--config", str(tmp_path / "none.toml")]) == 1


def test_console_script_entry(sim):
    r = subprocess.run([sys.executable, "-m", "factorcausal.cli", "stats", "summary", "--factors",
                        str(sim / "f.csv")], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("factor,avg_comp_ret_ann")
