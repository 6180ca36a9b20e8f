import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from nonholo.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def run(tmp_path, doc, *flags):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return main(["run", str(path), "--out", str(tmp_path / "out"), "--quiet", *flags])


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


DISC = {
    "name": "disc",
    "action": "simulate",
    "model": {"name": "disc", "params": {"m": 1, "r": 1, "I": 1, "g": 9.81, "radius": {"R0": 1.0, "eps": 0.2, "T": 6.283185307179586}}},
    "initial_state": {"q": [0.3, 0.0], "v": [0.5]},
    "horizon": 2.0,
    "integrator": {"dt_out": 0.1},
}


def test_disc_simulation_csv(tmp_path):
    assert run(tmp_path, DISC) == 0
    header, rows = read_csv(tmp_path / "out" / "disc.csv")
    assert header == ["t", "phi", "psi", "phidot", "residual_1", "energy"]
    assert len(rows) >= 2.0 / 0.1
    assert all(float(r[4]) == 0.0 for r in rows)
    summary = json.loads((tmp_path / "out" / "disc.summary.json").read_text())
    assert summary["max_residual"] == 0.0 and summary["samples"] == len(rows)


def test_residual_column_is_dynamics_diagnostic(tmp_path):
    import numpy as np

    from nonholo.dynamics import MechState, integrate
    from nonholo.scenario import build_model

    doc = dict(DISC, action="simulate-multiplier", name="mult")
    assert run(tmp_path, doc) == 0
    _, rows = read_csv(tmp_path / "out" / "mult.csv")
    traj = integrate(build_model(doc), MechState([0.3, 0.0], [0.5], 0.0), 2.0, formulation="multiplier", dt_out=0.1)
    assert [float(r[4]) for r in rows] == pytest.approx(traj.residual[:, 0].tolist(), abs=0)
    assert np.max(np.abs(traj.residual)) < 1e-8


def test_fixed_step_output_is_byte_identical(tmp_path):
    assert run(tmp_path, DISC, "--fixed-step", "0.01") == 0
    first = (tmp_path / "out" / "disc.csv").read_bytes()
    assert run(tmp_path, DISC, "--fixed-step", "0.01") == 0
    assert (tmp_path / "out" / "disc.csv").read_bytes() == first


def test_json_format(tmp_path):
    assert run(tmp_path, DISC, "--format", "json") == 0
    series = json.loads((tmp_path / "out" / "disc.json").read_text())
    assert list(series) == ["t", "phi", "psi", "phidot", "residual_1", "energy"]


def test_oscillator_hamiltonize_summary(tmp_path):
    doc = {
        "name": "osc",
        "action": "hamiltonize",
        "model": {"name": "damped_oscillator", "params": {"omega": 1.0, "B0": 0.1}},
        "initial_state": {"q": [1.0], "v": [0.0]},
        "horizon": 10,
    }
    assert run(tmp_path, doc) == 0
    s = json.loads((tmp_path / "out" / "osc.summary.json").read_text())
    assert s["N0"] == 1.0 and s["B0"] == 0.1
    assert s["closed_form_max_deviation"] <= 1e-8
    assert s["equivalence_max_deviation"] <= 1e-6


@pytest.mark.parametrize("a, verdict", [("2 + sin(t)", "nonholonomic"), ("3", "holonomic"), ("2 + x^2", "holonomic")])
def test_contact_verdicts(tmp_path, a, verdict):
    doc = {
        "name": "contact",
        "action": "contact-test",
        "model": {"name": "custom", "params": {"coordinates": ["x", "y"], "base": 1, "metric": [[1, 0], [0, 1]]}},
        "contact": {"a": a, "b": 0, "random_probes": 5},
    }
    assert run(tmp_path, doc) == 0
    assert json.loads((tmp_path / "out" / "contact.summary.json").read_text())["verdict"] == verdict


def test_validation_errors_exit_2_with_path(tmp_path, capsys):
    bad = json.loads(json.dumps(DISC))
    bad["model"]["params"]["m"] = -1
    assert run(tmp_path, bad) == 2
    assert "model/params/m" in capsys.readouterr().err
    assert run(tmp_path, {"action": "fly", "model": {"name": "disc"}}) == 2
    bad_state = dict(DISC, initial_state={"q": [0.0], "v": [0.0]})
    assert run(tmp_path, bad_state) == 2
    assert main(["run", str(tmp_path / "missing.json")]) == 2


def test_numerical_failure_exits_3(tmp_path):
    doc = {
        "name": "singular",
        "action": "simulate",
        "model": {"name": "custom", "params": {"coordinates": ["x"], "base": 1, "metric": [["x"]]}},
        "initial_state": {"q": [0.0], "v": [1.0]},
        "horizon": 1.0,
    }
    assert run(tmp_path, doc) == 3


def test_not_chaplygin_is_a_validation_error(tmp_path):
    doc = dict(DISC, action="reduce", model={"name": "disc", "params": {"c": 0.3}})
    assert run(tmp_path, doc) == 2


def test_custom_model_matches_builtin(tmp_path):
    doc = {
        "name": "knife",
        "action": "simulate",
        "model": {"name": "custom", "params": {
            "coordinates": ["x", "y", "z"], "base": 2,
            "metric": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
            "potential": "0.5*(x^2 + y^2)",
            "constraint": {"coeff": [["y", 0]]}}},
        "initial_state": {"q": [1.0, 0.0, 0.0], "v": [0.0, 0.5]},
        "horizon": 3.0,
    }
    assert run(tmp_path, doc) == 0
    header, rows = read_csv(tmp_path / "out" / "knife.csv")
    assert header == ["t", "x", "y", "z", "xdot", "ydot", "residual_1", "energy"]
    energies = [float(r[-1]) for r in rows]
    assert max(energies) - min(energies) < 1e-8


def test_plot_flag_writes_png(tmp_path):
    assert run(tmp_path, DISC, "--plot") == 0
    png = tmp_path / "out" / "disc.png"
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.stem)
def test_bundled_scenarios_run(tmp_path, path):
    assert main(["run", str(path), "--out", str(tmp_path), "--quiet"]) == 0


def test_directory_batch_and_module_entry(tmp_path):
    for name in ("a", "b"):
        (tmp_path / f"{name}.json").write_text(json.dumps(dict(DISC, name=name, horizon=0.5)))
    assert main(["run", str(tmp_path), "--out", str(tmp_path / "out"), "--quiet", "--jobs", "2"]) == 0
    assert (tmp_path / "out" / "a.csv").exists() and (tmp_path / "out" / "b.csv").exists()
    proc = subprocess.run(
        [sys.executable, "-m", "nonholo", "run", str(tmp_path / "a.json"), "--out", str(tmp_path / "o2")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["scenario"] == "a"
