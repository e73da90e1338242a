import csv
import json
import subprocess
import sys

import pytest

from wpcn_placement import cli
from wpcn_placement.model import random_scenario
from wpcn_placement.separated import AssociationCyclingError
from wpcn_placement.serialization import METRICS_HEADER, dump_scenario, load_scenario

OUTPUTS = ("placement.json", "metrics.csv", "history.csv", "run.json")


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(dump_scenario(random_scenario(20, seed=3)))
    return path


def read_outputs(out):
    return {name: (out / name).read_bytes() for name in OUTPUTS if (out / name).exists()}


def test_joint_rerun_is_byte_identical(tmp_path):
    scen = tmp_path / "s.json"
    assert cli.run(["gen-scenario", "--k", "60", "--box", "24", "--seed", "7", "--scenario", str(scen)]) == 0
    runs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        args = ["place-joint", "--m", "6", "--n", "6", "--l", "10", "--seed", "7", "--scenario", str(scen)]
        assert cli.run(args + ["--out-dir", str(out)]) == 0
        runs.append(read_outputs(out))
    assert set(runs[0]) == set(OUTPUTS)
    assert runs[0] == runs[1]


def test_seed_from_environment(tmp_path, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    monkeypatch.setenv("WPCN_SEED", "7")
    assert cli.run(["gen-scenario", "--k", "10", "--scenario", str(a)]) == 0
    monkeypatch.delenv("WPCN_SEED")
    assert cli.run(["gen-scenario", "--k", "10", "--seed", "7", "--scenario", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert load_scenario(a) == random_scenario(10, seed=7)


def test_bad_seed_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("WPCN_SEED", "seven")
    assert cli.run(["gen-scenario", "--scenario", str(tmp_path / "s.json")]) == cli.EXIT_PARSE
    assert "WPCN_SEED" in capsys.readouterr().err


def test_malformed_scenario_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "devices": [\n    {"x": 1, "y": 2, "a2": "big"}\n  ]\n}\n')
    assert cli.run(["place-hap", "--m", "1", "--scenario", str(bad), "--out-dir", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert f"{bad}:3: devices[0].a2:" in err
    assert not (tmp_path / "placement.json").exists()


def test_missing_scenario_exit_2(tmp_path):
    assert cli.run(["place-hap", "--m", "1", "--scenario", str(tmp_path / "none.json")]) == 2


def test_min_cost_vacuous(scenario_file, tmp_path):
    out = tmp_path / "out"
    args = ["min-cost", "--mode", "separated", "--gamma", "-1e6", "--scenario", str(scenario_file), "--out-dir", str(out)]
    assert cli.run(args) == 0
    plan = json.loads((out / "run.json").read_text())["result"]["plan"]
    assert (plan["m"], plan["n"], plan["feasible"]) == (1, 1, True)
    assert plan["cost"] == pytest.approx(1.7)


def test_min_cost_negative_gamma_argument(scenario_file, tmp_path):
    out = tmp_path / "out"
    args = ["min-cost", "--mode", "hap", "--gamma", "-1e-4", "--scenario", str(scenario_file), "--out-dir", str(out)]
    assert cli.run(args) == 0
    plan = json.loads((out / "run.json").read_text())["result"]["plan"]
    assert plan["feasible"] and plan["t_star_W"] >= -1e-4


def test_min_cost_infeasible_exit_3(scenario_file, tmp_path, capsys):
    out = tmp_path / "out"
    args = ["min-cost", "--mode", "separated", "--gamma", "1", "--max-m", "2", "--max-n", "2",
            "--l", "1", "--scenario", str(scenario_file), "--out-dir", str(out)]
    assert cli.run(args) == cli.EXIT_INFEASIBLE
    doc = json.loads((out / "run.json").read_text())
    assert doc["result"]["plan"]["feasible"] is False
    assert len(doc["result"]["evaluated"]) == 4
    best = max(p["t_star_W"] for p in doc["result"]["evaluated"])
    assert doc["result"]["plan"]["t_star_W"] == best
    assert (out / "placement.json").exists()
    assert "INFEASIBLE" in capsys.readouterr().out


def test_cycling_guard_exit_4(scenario_file, tmp_path, monkeypatch):
    def cycling(*args, **kwargs):
        raise AssociationCyclingError("assumptions did not settle")

    monkeypatch.setattr(cli, "greedy_hap_placement", cycling)
    assert cli.run(["place-hap", "--m", "2", "--scenario", str(scenario_file), "--out-dir", str(tmp_path)]) == 4


@pytest.mark.parametrize("argv", [
    ["place-en", "--m", "2", "--n", "2"],
    ["place-ap", "--n", "2", "--m", "2"],
    ["place-hap", "--m", "3"],
    ["baseline-cc", "--m", "2", "--n", "3"],
    ["baseline-cc", "--m", "3"],
    ["baseline-ls", "--m", "2", "--steps", "200"],
    ["baseline-ls", "--m", "2", "--n", "2", "--steps", "200", "--sigma3", "4"],
])
def test_placement_commands(argv, scenario_file, tmp_path):
    out = tmp_path / "out"
    assert cli.run(argv + ["--scenario", str(scenario_file), "--out-dir", str(out)]) == 0
    rows = list(csv.reader((out / "metrics.csv").open()))
    assert rows[0] == METRICS_HEADER
    assert len(rows) == 22
    doc = json.loads((out / "run.json").read_text())
    assert doc["command"] == argv[0]
    assert float(rows[-1][7]) == doc["metrics"]["p_r_W"]
    placement = json.loads((out / "placement.json").read_text())
    assert len(placement["en_locations_m"]) == int(argv[2])
    if (out / "history.csv").exists():
        assert (out / "history.csv").read_text().splitlines()[0] == "iter,phase,z_W"


def test_fixed_placement_reused(scenario_file, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    base = ["--scenario", str(scenario_file)]
    assert cli.run(["place-joint", "--m", "2", "--n", "2", "--l", "2", "--out-dir", str(first)] + base) == 0
    fixed = str(first / "placement.json")
    assert cli.run(["place-en", "--m", "2", "--fixed", fixed, "--out-dir", str(second)] + base) == 0
    a = json.loads((first / "placement.json").read_text())
    b = json.loads((second / "placement.json").read_text())
    assert a["ap_locations_m"] == b["ap_locations_m"]


def test_fixed_and_count_conflict(scenario_file, tmp_path):
    args = ["place-en", "--m", "2", "--n", "2", "--fixed", "x.json", "--scenario", str(scenario_file)]
    assert cli.run(args + ["--out-dir", str(tmp_path)]) == 2


def test_validate_writes_table(scenario_file, tmp_path):
    out = tmp_path / "out"
    assert cli.run(["validate", "--blocks", "100000", "--m", "3", "--scenario", str(scenario_file),
                    "--out-dir", str(out)]) == 0
    rows = list(csv.DictReader((out / "validate.csv").open()))
    assert len(rows) == 20
    assert list(rows[0]) == ["device", "lambda_W", "lambda_hat_W", "stderr_W", "z", "within_3sigma"]
    doc = json.loads((out / "run.json").read_text())
    assert doc["result"]["uplink"]["outage_target"] == 0.05
    assert abs(doc["result"]["uplink"]["relative_error"]) < 0.02


def test_run_record_excludes_wall_time():
    rec = cli.RunRecord("place-hap", "abc", 1, wall_time=12.5)
    assert "wall" not in rec.to_json()


def test_module_entry_point(tmp_path):
    scen = tmp_path / "s.json"
    res = subprocess.run([sys.executable, "-m", "wpcn_placement", "gen-scenario", "--k", "5", "--scenario", str(scen)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert load_scenario(scen).k == 5
    bad = subprocess.run([sys.executable, "-m", "wpcn_placement", "place-hap", "--scenario", str(scen)],
                         capture_output=True, text=True)
    assert bad.returncode == 2  # argparse: --m missing
