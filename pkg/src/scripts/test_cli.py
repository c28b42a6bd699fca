from __future__ import annotations

import json
import sqlite3

import pandas as pd
import pytest

from src.cli import EXIT_CONFIG, EXIT_OK, main
from src.db.writer import select_sweep_rows
from src.export import design_flags
from src.oracles import run_oracles
from src.schema.scenario import ScenarioConfig


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text("num_users = 5\nsim_time_ms = 100\nsweep_time_ms = 50\n", encoding="utf-8")
    return str(path)


def test_every_oracle_passes():
    failed = [r.name for r in run_oracles() if not r.passed]
    assert failed == []


def test_design_decisions_follow_the_scenario():
    default = design_flags(ScenarioConfig())
    assert default["rsrp"]["averaging"] == "linear_mean_over_window"
    assert default["rsrp"]["window_ms"] == 50
    assert default["harq"]["max_transmissions"] == 4
    changed = design_flags(
        ScenarioConfig(rsrp_window_ms=1, sinr_floor_db=-20.0, max_retransmissions=1, shadow_decorrelation_m=0.0)
    )
    assert changed["rsrp"]["averaging"] == "instantaneous"
    assert changed["sinr_clamp_db"] == [-20.0, 40.0]
    assert changed["harq"]["max_transmissions"] == 2
    assert changed["shadowing"]["correlation"] == "iid"


def test_oracle_command(capsys):
    assert main(["oracle"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "PASS cost231_100m_db" in out


def test_run_writes_outputs(tmp_path, scenario, capsys):
    out = tmp_path / "run"
    code = main([
        "run", "--scenario", scenario, "--algo", "hoa4", "--hom", "3", "--ttt", "2",
        "--speed", "30", "--seed", "7", "--out", str(out), "--dump-ho-events", "--dump-channel-trace",
    ])
    assert code == EXIT_OK
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["algorithm"] == "HOA4"
    assert metrics["speed_kmh"] == 30.0
    assert metrics["seeds"] == [7]
    assert len(metrics["cell_throughput_bps"]) == 7
    results = pd.read_csv(out / "results.csv")
    assert results["seed"].tolist() == [7]
    assert list(pd.read_csv(out / "ho_events.csv").columns) == [
        "time_ms", "ue_id", "source", "target", "algorithm", "hom", "ttt_or_alpha_beta",
    ]
    assert len(pd.read_csv(out / "channel_trace.csv")) == 2 * 5 * 7
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["design_decisions"]["anoh_zero_substitute"] == 0.5
    assert "run HOA4" in capsys.readouterr().out

    conn = sqlite3.connect(out / "provenance.sqlite")
    assert conn.execute("SELECT status FROM invocation").fetchone()[0] == "completed"
    assert conn.execute("SELECT COUNT(*) FROM simulation_run WHERE ok = 1").fetchone()[0] == 1
    conn.close()


def test_run_with_several_seeds_names_traces_by_seed(tmp_path, scenario):
    out = tmp_path / "multi"
    code = main([
        "run", "--scenario", scenario, "--algo", "hoa2", "--hom", "2", "--beta", "0.5",
        "--seed", "1", "--seed", "2", "--out", str(out), "--dump-ho-events",
    ])
    assert code == EXIT_OK
    assert (out / "ho_events_seed1.csv").exists() and (out / "ho_events_seed2.csv").exists()
    assert len(pd.read_csv(out / "results.csv")) == 2


def test_missing_scenario_is_a_configuration_error(tmp_path):
    code = main(["run", "--scenario", str(tmp_path / "nope.cfg"), "--algo", "hoa1", "--hom", "1", "--ttt", "0",
                 "--out", str(tmp_path / "x")])
    assert code == EXIT_CONFIG


def test_missing_policy_parameter_is_a_configuration_error(tmp_path, scenario):
    code = main(["run", "--scenario", scenario, "--algo", "hoa3", "--hom", "1", "--out", str(tmp_path / "x")])
    assert code == EXIT_CONFIG


def test_sweep_command(tmp_path, scenario):
    grid = tmp_path / "grid.cfg"
    grid.write_text(
        "algorithms = HOA1, HOA2\nhom_db_values = 0, 2\nttt_values = 0\nalpha_beta_values = 1\nspeeds_kmh = 3\n",
        encoding="utf-8",
    )
    out = tmp_path / "sweep"
    assert main(["sweep", "--scenario", scenario, "--grid", str(grid), "--seed", "1", "--out", str(out)]) == EXIT_OK
    sweep = pd.read_csv(out / "sweep.csv")
    assert len(sweep) == 4
    optima = json.loads((out / "optima.json").read_text())
    assert sorted(o["algorithm"] for o in optima) == ["HOA1", "HOA2"]
    assert json.loads((out / "failures.json").read_text()) == []
    assert (out / "optimize_ratio_hoa1_3kmh.dat").exists()

    conn = sqlite3.connect(out / "provenance.sqlite")
    conn.row_factory = sqlite3.Row
    assert len(select_sweep_rows(conn)) == 4
    assert conn.execute("SELECT COUNT(*) FROM simulation_run").fetchone()[0] == 4
    conn.close()


def test_compare_command(tmp_path, scenario):
    out = tmp_path / "compare"
    code = main(["compare", "--scenario", scenario, "--speed", "30", "--seed", "1", "--out", str(out)])
    assert code == EXIT_OK
    compare = pd.read_csv(out / "compare.csv")
    assert len(compare) == 8  # four algorithms at 30 km/h plus four sum rows
    assert compare["speed_kmh"].isna().sum() == 4
    improvement = pd.read_csv(out / "improvement.csv")
    assert improvement["other"].tolist() == ["HOA1", "HOA2", "HOA3"]


def test_compare_uses_sweep_optima(tmp_path, scenario):
    optima = tmp_path / "optima.json"
    optima.write_text(json.dumps([
        {"algorithm": "HOA4", "speed_kmh": 3, "hom_db": 1, "ttt_or_factor": 0},
        {"algorithm": "HOA3", "speed_kmh": 3, "hom_db": 1, "ttt_or_factor": 0.5},
    ]), encoding="utf-8")
    out = tmp_path / "cmp"
    code = main(["compare", "--scenario", scenario, "--optima", str(optima), "--seed", "2", "--out", str(out)])
    assert code == EXIT_OK
    assert len(pd.read_csv(out / "compare.csv")) == 4
