import json
import math

import pytest
import yaml

import riskmpc.harness as harness
from riskmpc.cli import main
from riskmpc.harness import (
    EPSILONS,
    LEVELS,
    TRACE_COLUMNS,
    MatrixCell,
    ScenarioConfig,
    ScenarioResult,
    matrix_configs,
    metrics,
    read_trace,
    results_table,
    run_matrix,
    run_scenario,
    trace_csv,
    write_result,
)

SHORT = dict(duration_steps=4, population=16, iterations=4, J=100)


def row(ego=(0.0, 0.0), obj=(10.0, 0.0), err=0.0):
    return {"ego_c1": ego[0], "ego_c2": ego[1], "obj_c1": obj[0], "obj_c2": obj[1], "err_norm": err}


def test_metrics_three_four_five():
    assert metrics([row(err=math.hypot(3, 4))]) == (5.0, 10.0)


def test_metrics_constant_distance():
    assert metrics([row(), row(), row()])[1] == 10.0
    with pytest.raises(ValueError):
        metrics([])


def test_config_defaults():
    cfg = ScenarioConfig()
    assert cfg.goal == (65.0, 5.0, 0.0) and cfg.curvature == 0.003 and cfg.lambda_0 == -95.0
    assert cfg.ego_init == (-10.0, 10.0, 0.0) and cfg.obj_init[:2] == (5.0, -5.0)
    assert (cfg.T, cfg.N, cfg.J, cfg.L) == (0.5, 6, 500, 40)
    assert (cfg.obj_v_lo, cfg.obj_v_hi) == (-5.0, 5.0)
    assert cfg.ocp().W.tolist() == [[1.0 if i == j else 0.0 for j in range(4)] for i in range(4)]


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(controller="pid")
    with pytest.raises(ValueError):
        ScenarioConfig(uncertainty="extreme")
    with pytest.raises(ValueError):
        ScenarioConfig(spread_mode="range")
    with pytest.raises(ValueError):
        ScenarioConfig.from_dict({"bogus": 1})


def test_config_file_round_trip(tmp_path):
    cfg = ScenarioConfig(controller="rmpc", epsilon=500.0, uncertainty="high", seed=3)
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(cfg.to_dict()))
    assert ScenarioConfig.from_file(p) == cfg


def test_trace_round_trip_reproduces_metrics(tmp_path):
    res = run_scenario(ScenarioConfig(controller="smpc", uncertainty="medium", **SHORT))
    paths = write_result(res, tmp_path, stem="x")
    rows = read_trace(paths["trace"])
    assert tuple(rows[0]) == TRACE_COLUMNS
    e_acc, d_min = metrics(rows)
    summary = json.loads(paths["summary"].read_text())
    assert (e_acc, d_min) == (summary["e_acc"], summary["d_min"])
    assert summary["collided"] == (d_min <= 3.0)


def test_json_trace(tmp_path):
    res = run_scenario(ScenarioConfig(controller="rmpc", **SHORT))
    paths = write_result(res, tmp_path, stem="y", fmt="json")
    assert json.loads(paths["trace"].read_text()) == res.rows
    with pytest.raises(ValueError):
        write_result(res, tmp_path, fmt="xml")


def test_same_seed_same_trace():
    cfg = ScenarioConfig(controller="smpc", uncertainty="high", epsilon=1000.0, **SHORT)
    assert trace_csv(run_scenario(cfg).rows) == trace_csv(run_scenario(cfg).rows)


def test_trace_matches_closed_loop_model():
    res = run_scenario(ScenarioConfig(controller="rmpc", **SHORT))
    r0, r1 = res.rows[0], res.rows[1]
    # the object moves along its constant-input unicycle
    assert float(r1["obj_c2"]) - float(r0["obj_c2"]) == pytest.approx(1.5, abs=1e-3)
    assert res.e_acc == pytest.approx(math.fsum(r["err_norm"] for r in res.rows))


def test_object_removed_tracks_path_better():
    base = ScenarioConfig(controller="rmpc", uncertainty="low")
    free = run_scenario(base.replace(obj_init=(1e6, 1e6, 0.0)))
    with_object = run_scenario(base)
    assert free.e_acc < with_object.e_acc
    assert free.rows[-1]["err_norm"] < 0.5
    assert not free.collided


def test_matrix_layout():
    cfgs = matrix_configs(ScenarioConfig(seed=4))
    assert len(cfgs) == 36
    assert {(c.controller, c.uncertainty, c.epsilon) for c in cfgs} == {
        (m, u, e) for m in ("rmpc", "smpc") for u in LEVELS for e in EPSILONS
    }
    assert all(c.seed == 4 for c in cfgs)


def test_results_table_shape():
    cells = [MatrixCell(c, ScenarioResult(c, e_acc=1.0, d_min=5.0)) for c in matrix_configs(ScenarioConfig())]
    lines = results_table(cells).strip().splitlines()
    assert lines[0].split(",") == ["controller", "epsilon"] + [f"{l}_{m}" for l in LEVELS for m in ("e_acc", "d_min")]
    assert len(lines) == 13


def test_matrix_reports_failed_cell(monkeypatch):
    real = harness.run_scenario

    def flaky(cfg):
        if cfg.controller == "smpc" and cfg.uncertainty == "high" and cfg.epsilon == 500.0:
            raise RuntimeError("boom")
        return ScenarioResult(cfg, e_acc=1.0, d_min=9.0)

    monkeypatch.setattr(harness, "run_scenario", flaky)
    cells = run_matrix(ScenarioConfig())
    failed = [c for c in cells if c.result is None]
    assert len(cells) == 36 and len(failed) == 1 and "boom" in failed[0].error
    assert "nan" in results_table(cells)
    monkeypatch.setattr(harness, "run_scenario", real)


def test_cli_run(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"population": 16, "iterations": 4, "J": 100, "epsilon": 2000.0}))
    code = main(["run", "--config", str(cfg), "--controller", "rmpc", "--uncertainty", "medium",
                 "--duration-steps", "3", "--seed", "2", "--out", str(tmp_path / "out")])
    assert code == 0
    summary = json.loads((tmp_path / "out" / "rmpc_medium_eps2000_summary.json").read_text())
    assert summary["seed"] == 2 and summary["config"]["duration_steps"] == 3
    assert summary["config"]["population"] == 16
    assert len(read_trace(tmp_path / "out" / "rmpc_medium_eps2000_trace.csv")) == 3
    assert "d_min" in capsys.readouterr().out


def test_cli_json_format(tmp_path):
    code = main(["run", "--controller", "rmpc", "--duration-steps", "2", "--format", "json", "--out", str(tmp_path)])
    assert code == 0
    assert len(json.loads((tmp_path / "rmpc_low_eps0_trace.json").read_text())) == 2


def test_cli_bad_config(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("nonsense_key: 1\n")
    assert main(["run", "--config", str(cfg)]) == 2
    assert "bad configuration" in capsys.readouterr().err


def test_cli_matrix(tmp_path, monkeypatch):
    monkeypatch.setattr(harness, "run_scenario", lambda cfg: ScenarioResult(cfg, e_acc=2.0, d_min=7.0))
    assert main(["matrix", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "results_table.csv").exists()
    assert len(list((tmp_path / "cells").glob("*_summary.json"))) == 36
