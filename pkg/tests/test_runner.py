import json
import math
import os
import re

import pytest

from ermakov_lab import runner
from ermakov_lab.errors import ConfigError, IntegrationError
from ermakov_lab.scenario import bundled_scenarios, parse_scenario

FAST = """
name = "fast"
[profile]
kind = "tanh_sweep"
omega_start = 1.0
omega_end = 2.0
t_min = 0.0
t_max = 20.0
duration = 5.0
[integrator]
samples = 201
[quantum]
dim = 32
[checks.wronskian_drift]
[checks.rho_omega_identity]
[checks.g_commutation]
[checks.heisenberg_rate]
"""


def test_run_writes_artifacts(tmp_path):
    rep = runner.run(parse_scenario(FAST), tmp_path)
    assert rep.status == "pass" and rep.exit_code == 0
    csv_path, json_path = tmp_path / "fast.series.csv", tmp_path / "fast.report.json"
    assert [str(csv_path), str(json_path)] == rep.manifest
    lines = csv_path.read_text().splitlines()
    assert len(lines) == 202
    assert lines[0].split(",")[0] == "t"
    # residual is NaN where its stencil leaves the grid
    assert all(re.fullmatch(r"-?\d\.\d{16}e[+-]\d{2,3}|nan", x) for x in lines[1].split(","))
    d = json.loads(json_path.read_text())
    assert d["schema_version"] == runner.REPORT_SCHEMA_VERSION
    assert d["status"] == "pass"
    assert d["tolerances"]["heisenberg_rate"] is None
    assert {c["name"]: c["kind"] for c in d["checks"]}["heisenberg_rate"] == "documented"
    assert d["parameters"]["profile"]["duration"] == 5.0


def test_series_is_deterministic(tmp_path):
    sc = parse_scenario(FAST)
    runner.run(sc, tmp_path / "a")
    runner.run(sc, tmp_path / "b")
    assert (tmp_path / "a/fast.series.csv").read_bytes() == (tmp_path / "b/fast.series.csv").read_bytes()


def test_fmt_round_trips():
    for x in (math.pi, 1e-300, -2.5, 0.1 + 0.2):
        assert float(runner.fmt(x)) == x


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv(runner.OUTPUT_ENV, str(tmp_path / "env"))
    assert runner.output_dir() == tmp_path / "env"
    assert runner.output_dir(tmp_path / "x") == tmp_path / "x"
    monkeypatch.delenv(runner.OUTPUT_ENV)
    assert str(runner.output_dir()) == runner.DEFAULT_OUTPUT_DIR


def test_atomic_write_leaves_no_temporaries(tmp_path):
    p = tmp_path / "sub" / "f.txt"
    runner.atomic_write(p, "one")
    runner.atomic_write(p, "two")
    assert p.read_text() == "two"
    assert os.listdir(p.parent) == ["f.txt"]


def test_gated_failure(tmp_path):
    text = FAST.replace("[checks.wronskian_drift]\n", "[checks.wronskian_drift]\ntol = 1e-30\n")
    rep = runner.run(parse_scenario(text), write=False)
    assert rep.record("wronskian_drift").status == "fail"
    assert rep.exit_code == 1


def test_documented_checks_never_fail():
    sc = parse_scenario(FAST)
    recs, _ = runner.evaluate(sc)
    doc = [r for r in recs if r.kind == "documented"]
    assert doc and all(r.status == "documented" and r.tol is None for r in doc)


def test_integration_error_is_reported(monkeypatch):
    def boom(*a, **k):
        raise IntegrationError("step size underflow", {"t": 3.0})
    monkeypatch.setattr(runner.cl, "integrate_tdho", boom)
    rep = runner.run(parse_scenario(FAST), write=False)
    assert rep.record("integration").status == "fail"
    assert rep.exit_code == 1


def test_parse_grid():
    g = runner.parse_grid(["quantum.dim=32,64", "profile.duration=0.1,10"])
    assert g == {"quantum.dim": [32, 64], "profile.duration": [0.1, 10]}
    for bad in ([], ["quantum.dim="], ["quantum.dim"]):
        with pytest.raises(ConfigError):
            runner.parse_grid(bad)


def test_sweep_validates_before_running(tmp_path, monkeypatch):
    calls = []
    monkeypatch.setattr(runner, "_run_child", lambda a: calls.append(a))
    with pytest.raises(ConfigError):
        runner.sweep(parse_scenario(FAST), {"quantum.dim": [32, 2]}, out_dir=tmp_path)
    assert calls == []


def test_truncation_sweep_decreases(tmp_path):
    sc = parse_scenario(bundled_scenarios()["conjugation-truncation"])
    rep = runner.sweep(sc, {"quantum.dim": [64, 128]}, out_dir=tmp_path)
    a, b = rep.values("conjugation")
    assert b < a
    d = json.loads((tmp_path / "conjugation-truncation.sweep.json").read_text())
    assert d["runs"] == ["conjugation-truncation__dim-64", "conjugation-truncation__dim-128"]
    assert d["worst_case"]["conjugation"] == a


def test_duration_sweep_decreases(tmp_path):
    sc = parse_scenario(bundled_scenarios()["adiabatic-duration"])
    rep = runner.sweep(sc, {"profile.duration": [0.1, 10.0, 200.0]}, write=False)
    v = rep.values("adiabatic_deviation")
    assert v[0] > v[1] > v[2]


def test_phase_matrix_csv(tmp_path):
    text = runner.phase_matrix_csv(4)
    rows = text.splitlines()
    assert rows[0] == "row,col,re,im" and len(rows) == 17
    r01 = rows[2].split(",")
    assert complex(float(r01[2]), float(r01[3])) == -1j * math.sqrt(math.pi) / 2
    p = runner.phase_matrix_dump(4, "pi", tmp_path / "phi.csv")
    first = p.read_bytes()
    runner.phase_matrix_dump(4, "pi", p)
    assert p.read_bytes() == first
