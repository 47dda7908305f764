import csv
import io
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from ergokit import cli
from ergokit.dissipation import SWEEP_COLUMNS, gibbs_state
from ergokit.states import DensityMatrix, bell_state, save_state

GOLDEN = Path(__file__).parent / "golden" / "sweep_coarse.csv"
HEADER = "c,beta_e,ergotropy,bound_ergotropy,total_ergotropy,mutual_info_over_beta,local_beta"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def bell_file(tmp_path):
    path = tmp_path / "bell.json"
    save_state(bell_state("psi+"), path)
    return path


def test_analyze_bell(capsys, bell_file):
    code, out, _ = run(capsys, "analyze", str(bell_file))
    rep = json.loads(out)
    assert code == 0
    assert rep["ergotropy"]["ergotropy"] == pytest.approx(1.0)
    assert rep["correlations"]["mutual_information"] == pytest.approx(2 * math.log(2))
    assert rep["correlations"]["discord"] == pytest.approx(math.log(2), abs=1e-4)


def test_analyze_thermal_product(capsys, tmp_path):
    path = tmp_path / "g.json"
    save_state(DensityMatrix(gibbs_state(0.7), (2, 2)), path)
    code, out, _ = run(capsys, "analyze", str(path), "--beta", "0.7")
    rep = json.loads(out)
    assert code == 0
    assert rep["ergotropy"]["total_ergotropy"] == pytest.approx(0, abs=1e-8)
    assert rep["correlations"]["mutual_information"] == pytest.approx(0, abs=1e-10)
    assert rep["general_identity"]["residual"] <= 1e-10


def test_analyze_mismatched_marginals_warns(capsys, tmp_path):
    a, b = np.diag([0.8, 0.2]), np.diag([0.6, 0.4])
    path = tmp_path / "m.json"
    save_state(DensityMatrix(np.kron(a, b), (2, 2)), path)
    code, out, _ = run(capsys, "analyze", str(path))
    assert code == 0
    assert json.loads(out)["warnings"]


@pytest.mark.parametrize(
    "content",
    ['{bad', '{"dims": [2], "re": [1, 0, 0, 0.5], "im": [0, 0, 0, 0]}', '{"dims": [2], "re": [1]}'],
)
def test_analyze_invalid_input(capsys, tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    code, _, err = run(capsys, "analyze", str(path))
    assert code == 2
    assert "invalid input" in err


def test_analyze_missing_file(capsys, tmp_path):
    assert run(capsys, "analyze", str(tmp_path / "nope.json"))[0] == 2


def test_sweep_header_and_order(capsys):
    code, out, _ = run(capsys, "sweep", "--beta-e", "10", "1", "--c-grid", "0.5,0,1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == HEADER
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [(float(r["beta_e"]), float(r["c"])) for r in rows] == [
        (10.0, 0.0), (10.0, 0.5), (10.0, 1.0), (1.0, 0.0), (1.0, 0.5), (1.0, 1.0)
    ]


def test_sweep_matches_golden(capsys, monkeypatch):
    monkeypatch.setenv("ERGOKIT_THREADS", "3")
    code, out, _ = run(capsys, "sweep", "--c-grid", "0:1:0.125")
    assert code == 0
    golden = GOLDEN.read_text().splitlines()
    fresh = out.splitlines()
    assert fresh[0] == golden[0] == HEADER
    assert len(fresh) == len(golden)
    for a, b in zip(fresh[1:], golden[1:]):
        for x, y in zip(a.split(","), b.split(",")):
            assert float(x) == pytest.approx(float(y), rel=1e-9, abs=1e-10)


def test_sweep_deterministic_across_thread_counts():
    grid = [k / 40 for k in range(41)]
    assert cli.sweep([1.0], grid, threads=1) == cli.sweep([1.0], grid, threads=8)


def test_sweep_json_and_file(capsys, tmp_path):
    out = tmp_path / "s.json"
    assert run(capsys, "sweep", "--beta-e", "1", "--c-grid", "0:1:0.5", "--format", "json", "--out", str(out))[0] == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 3 and tuple(rows[0]) == SWEEP_COLUMNS
    assert rows[0]["mutual_info_over_beta"] == "inf"


def test_sweep_invalid_grid(capsys):
    assert run(capsys, "sweep", "--c-grid", "0,1.5")[0] == 2


def test_parse_grid():
    grid = cli.parse_grid("0:1:0.005")
    assert len(grid) == 201 and grid[0] == 0.0 and grid[-1] == 1.0 and grid[150] == 0.75


def test_simulate_dark_state(capsys):
    code, out, _ = run(capsys, "simulate", "--initial", "psi-", "--t-final", "10")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and list(rows[0]) == list(cli.SIM_COLUMNS)
    assert max(float(r["trace_distance_to_ss"]) for r in rows) <= 1e-9


def test_simulate_ground_state(capsys):
    code, out, _ = run(capsys, "simulate", "--initial", "gg", "--t-final", "50")
    rows = list(csv.DictReader(io.StringIO(out)))
    dist = [float(r["trace_distance_to_ss"]) for r in rows]
    assert dist[-1] <= 1e-6
    assert max(abs(float(r["c"]) - 1.0) for r in rows) <= 1e-7


def test_simulate_step_too_large(capsys):
    code, _, err = run(capsys, "simulate", "--dt", "1.0")
    assert code == 2
    assert "dt" in err


def test_verify_small(capsys):
    start = time.perf_counter()
    code, out, _ = run(capsys, "verify", "--seed-count", "1")
    assert time.perf_counter() - start < 1.0
    summary = json.loads(out)
    assert code == 0 and summary["passed"]
    assert set(summary["checks"]) == set(cli.VERIFY_CHECKS)


def test_verify_negative_control(capsys, monkeypatch):
    broken = dict(cli.VERIFY_CHECKS)
    broken["broken_identity"] = (lambda seed: 1.0 if seed == 2 else 0.0, 1e-8)
    monkeypatch.setattr(cli, "VERIFY_CHECKS", broken)
    code, out, _ = run(capsys, "verify", "--seed-count", "4")
    summary = json.loads(out)
    assert code == 1
    assert summary["first_failure"] == {"check": "broken_identity", "seed": 2, "residual": 1.0, "tolerance": 1e-8}


def test_power_steady_state(capsys):
    code, out, _ = run(capsys, "power", "--tau", "0.5", "1", "2")
    reports = json.loads(out)
    assert code == 0 and len(reports) == 3
    assert all(r["holds"] for r in reports)
    works = [r["avg_power"] * r["tau"] for r in reports]
    assert max(works) - min(works) <= 1e-12


def test_power_schedule_and_cap(capsys):
    code, out, _ = run(capsys, "power", "--schedule", "sine", "--omega-cap", "100")
    rep = json.loads(out)
    assert code == 0 and rep["omega_cap"] == 100.0


def test_power_thermal_input(capsys, tmp_path):
    path = tmp_path / "g.json"
    save_state(DensityMatrix(gibbs_state(1.0), (2, 2)), path)
    code, _, err = run(capsys, "power", "--state", str(path))
    assert code == 3
    assert "passive" in err
