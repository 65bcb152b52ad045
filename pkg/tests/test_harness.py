import csv
import json

import numpy as np
import pytest

from descobs.errors import ConfigError, IntegrationDiverged
from descobs.harness import (
    ScenarioConfig,
    audit_scenario,
    config_from_dict,
    make_config,
    run_scenario,
    scenario_names,
    simulate,
)
from descobs.harness.config import validate_document

SCENARIOS = ["circuit-bobtsov", "circuit-adaptive", "synthetic-ltv-invertible-a22",
             "synthetic-scf-strangeness-free", "synthetic-scf-zw"]


def test_registry():
    assert sorted(scenario_names()) == sorted(SCENARIOS)


def test_unknown_scenario_lists_names():
    with pytest.raises(ConfigError) as exc:
        make_config("no-such-thing")
    for name in SCENARIOS:
        assert name in str(exc.value)


def test_circuit_defaults():
    cfg = make_config("circuit-bobtsov")
    assert (cfg.t0, cfg.t1, cfg.h) == (0.0, 30.0, 1e-3)
    assert cfg.lam == (0.1, 0.2, 0.3) and cfg.gamma == (1e10,)
    assert cfg.estimator == "filter-bank" and cfg.n_steps == 30000


def test_precedence_defaults_file_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"scenario": "circuit-bobtsov", "t_final": 5, "gamma": 1e8}))
    cfg = make_config(config_path=str(path), gamma=1e9)
    assert cfg.t1 == 5.0 and cfg.gamma == (1e9,) and cfg.h == 1e-3


@pytest.mark.parametrize("doc", [
    {"scenario": "circuit-bobtsov", "stpe": 1e-3},
    {"scenario": "circuit-bobtsov", "step": "small"},
    {"scenario": "circuit-bobtsov", "estimator": "least-squares"},
    {"t_final": 3},
])
def test_schema_rejects(doc):
    with pytest.raises(ConfigError):
        validate_document(doc)


@pytest.mark.parametrize("over", [
    {"step": -1e-3}, {"step": 0.0}, {"t_final": -1.0}, {"lambda": [0.1, -0.2, 0.3]},
    {"gamma": 0.0}, {"gamma": [1.0, -1.0, 1.0]},
])
def test_invariants_rejected(over):
    with pytest.raises(ConfigError):
        make_config("circuit-bobtsov", **over)


def test_bad_config_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        make_config(config_path=str(path))
    with pytest.raises(ConfigError):
        make_config(config_path=str(tmp_path / "missing.json"))


def test_config_round_trips_through_json():
    cfg = make_config("synthetic-scf-zw", t_final=3.0)
    again = config_from_dict(json.loads(json.dumps(cfg.to_json())))
    assert again == cfg and isinstance(again, ScenarioConfig)


def test_empty_run_writes_headers_only(tmp_path):
    cfg = make_config("circuit-bobtsov", t_final=0.0, out=str(tmp_path))
    paths, summary = run_scenario(cfg)
    assert summary["final"] is None
    for p in paths[:-1]:
        with open(p, newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1 and rows[0][0] == "t"


def test_trace_files_and_columns(tmp_path):
    cfg = make_config("circuit-bobtsov", t_final=0.05, out=str(tmp_path))
    paths, summary = run_scenario(cfg)
    names = sorted(p.rsplit("/", 1)[-1] for p in paths)
    assert names == ["delta.csv", "excitation.csv", "parameters.csv", "regressor.csv",
                     "states.csv", "summary.json"]
    with open(tmp_path / "regressor.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "psi_1", "psi_2", "psi_3"]
    assert len(rows) == 52
    assert [float(v) for v in rows[1][1:]] == [1.0, 0.0, 0.0]
    with open(tmp_path / "parameters.csv", newline="") as fh:
        header = next(csv.reader(fh))
    assert header == ["t"] + [f"eta_hat_{i}" for i in (1, 2, 3)] + [f"eta_err_{i}" for i in (1, 2, 3)]
    with open(tmp_path / "summary.json") as fh:
        doc = json.load(fh)
    assert doc["eta_true"] == [1.0, -1.0, -2.0]
    assert doc["config"]["scenario"] == "circuit-bobtsov"


def test_crlf_line_ends(tmp_path):
    run_scenario(make_config("circuit-bobtsov", t_final=0.01, out=str(tmp_path)))
    raw = (tmp_path / "delta.csv").read_bytes()
    assert raw.count(b"\r\n") == raw.count(b"\n") == 12


def test_step_halving_keeps_diagnostics(circuit_run, circuit_run_half_step):
    a, b = circuit_run.summary, circuit_run_half_step.summary
    la, lb = a["excitation"]["lambda_min_final"], b["excitation"]["lambda_min_final"]
    assert abs(la - lb) <= 0.01 * la
    for eps, t in a["time_to_threshold"]["eta_error"].items():
        assert abs(t - b["time_to_threshold"]["eta_error"][eps]) <= 0.01 * t


def test_estimates_are_causal():
    """Extending the horizon cannot change what was computed earlier."""
    short = simulate(make_config("circuit-bobtsov", t_final=1.0))
    long = simulate(make_config("circuit-bobtsov", t_final=2.0))
    for name, group in short.traces.items():
        n = len(group.rows)
        assert np.array_equal(group.rows, long.traces[name].rows[:n])


def test_audit_of_default_circuit(tmp_path):
    rep = audit_scenario(make_config("circuit-bobtsov", t_final=3.0))
    assert rep["passed"]
    ie = rep["assumptions"]["interval_excitation"]
    assert ie["excited"] and ie["t_c"] < 1.0


def test_output_block_regressor_fails_excitation():
    rep = audit_scenario(make_config("circuit-bobtsov", t_final=3.0, regressor="output"))
    assert not rep["passed"]
    assert rep["assumptions"]["interval_excitation"]["lambda_min_final"] == 0.0


def test_zw_diagonalizing_gain_option():
    cfg = make_config("synthetic-scf-zw", t_final=0.5, zw_gain="diagonalizing")
    assert simulate(cfg).summary["details"]["gain"] == "diagonalizing"


def test_rk4_estimator_step_agrees_at_moderate_gain():
    base = dict(t_final=8.0, gamma=1e4)
    a = simulate(make_config("synthetic-ltv-invertible-a22", **base))
    b = simulate(make_config("synthetic-ltv-invertible-a22", estimator_step="rk4", **base))
    ea, eb = a.traces["parameters"].rows, b.traces["parameters"].rows
    assert np.max(np.abs(ea - eb)) < 1e-4


def test_rk4_estimator_step_flags_stiffness():
    s = simulate(make_config("circuit-bobtsov", t_final=6.0, gamma=1e12,
                             estimator_step="rk4")).summary
    assert s["flags"]["stiffness"]["flagged"]


def test_rk4_estimator_step_diverges_at_high_gain():
    with pytest.raises(IntegrationDiverged), np.errstate(over="ignore", invalid="ignore"):
        simulate(make_config("circuit-bobtsov", t_final=6.0, gamma=1e14, estimator_step="rk4"))


def test_exponential_step_survives_high_gain():
    s = simulate(make_config("circuit-bobtsov", t_final=6.0, gamma=1e14)).summary
    assert s["final"]["eta_error"] < 1e-6


@pytest.mark.parametrize("name", SCENARIOS)
def test_every_scenario_runs_briefly(name):
    s = simulate(make_config(name, t_final=0.2)).summary
    assert s["scenario"] == name and s["final"]["t"] == pytest.approx(0.2)
    assert np.isfinite(s["final"]["eta_error"])


def test_kreisselmeier_path():
    s = simulate(make_config("circuit-bobtsov", estimator="kreisselmeier", t_final=0.2,
                             **{"lambda": [0.1]})).summary
    assert s["config"]["estimator"] == "kreisselmeier"


def test_filter_bank_rate_count_checked():
    with pytest.raises(ConfigError):
        simulate(make_config("circuit-bobtsov", t_final=0.1, **{"lambda": [0.1, 0.2]}))
