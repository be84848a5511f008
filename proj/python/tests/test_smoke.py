import json
import math
from pathlib import Path

import numpy as np
import pytest

import flexstage

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def small_config(**overrides):
    doc = json.loads((CONFIGS / "case1.json").read_text())
    doc["mesh"]["resolution"] = 8
    doc["frequency_grid"]["points"] = 120
    for path, value in overrides.items():
        section, key = path.split(".")
        doc[section][key] = value
    return flexstage.parse_config(json.dumps(doc))


def test_load_config():
    cfg = flexstage.load_config(str(CONFIGS / "case2.json"))
    assert cfg.name == "case2"
    assert cfg.has_sweep
    assert set(cfg.init) == {"base_thickness", "rib_height", "rib_width", "rib_spacing_x", "rib_spacing_y"}


def test_config_errors_map_to_exceptions():
    doc = json.loads((CONFIGS / "case1.json").read_text())
    doc["stage"]["colour"] = "red"
    with pytest.raises(flexstage.ConfigError, match="unknown key 'colour'"):
        flexstage.parse_config(json.dumps(doc))
    assert issubclass(flexstage.ConfigError, flexstage.FlexstageError)


def test_analyze_returns_three_rigid_modes():
    out = flexstage.analyze(small_config(), modes=4)
    assert out["rigid_count"] == 3
    f = np.asarray(out["frequencies_hz"])
    assert f.shape == (7,)
    assert np.all(f[:3] == 0.0)
    assert np.all(np.diff(f[3:]) >= 0.0)
    assert out["mass_kg"] > 0.0


def test_modal_grammian_closed_form():
    g = flexstage.modal_grammian(np.array([1.0]), 0.01, 2.0 * math.pi * 50.0)
    assert g == pytest.approx(1.0 / (4.0 * 0.01 * 2.0 * math.pi * 50.0))


def test_tune_gain_on_double_integrator():
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    b = np.array([[0.0], [1.0]])
    c = np.array([[2.0, 0.0]])
    d = np.zeros((1, 1))
    r = flexstage.tune_gain(a, b, c, d, 50.0)
    assert r["feasible"]
    assert r["bandwidth_hz"] == pytest.approx(50.0, rel=1e-6)
    assert r["max_sensitivity"] <= 2.0


def test_evaluate_design_writes_report(tmp_path):
    params = {"base_thickness": 1e-3, "rib_height": 0.0198, "rib_width": 1e-3,
              "rib_spacing_x": 0.0798, "rib_spacing_y": 0.0757}
    rep = flexstage.evaluate_design(small_config(), params, str(tmp_path))
    assert set(rep["channels"]) == {"z", "theta_x", "theta_y", "q4"}
    assert rep["closed_loop_stable"]
    assert (tmp_path / "report.json").exists()
    rows = flexstage.compare_reports(str(tmp_path / "report.json"), str(tmp_path / "report.json"))
    assert rows[0]["metric"] == "stage_weight_kg"
    assert all(r["proposed"] == r["baseline"] for r in rows)


def test_infeasible_geometry_raises():
    cfg = small_config(**{"constraints.omega_high_hz": 20000.0, "optimizer.max_evaluations": 20})
    with pytest.raises(flexstage.InfeasibleError, match="geometry"):
        flexstage.run_pipeline(cfg)
