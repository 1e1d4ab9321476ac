"""Tests for the configuration-driven command line runner."""

import json
import math

import numpy as np
import pytest

from extcloak import cli, kernels
from extcloak.errors import NumericalError

GEOMETRY = {"center": [5.0, 5.0], "delta_c": 10.0 / 6.0, "n_int": 64}
SOURCE = {"location": [8.0, 5.0]}


def run(tmp_path, command, config=None, flags=(), out="out"):
    """Invoke the CLI with a config dict; return (exit code, out dir)."""
    out_dir = tmp_path / out
    argv = [command, "--out", str(out_dir)]
    if config is not None:
        path = tmp_path / f"config_{out}.json"
        path.write_text(json.dumps(config), encoding="utf-8")
        argv += ["--config", str(path)]
    argv += list(flags)
    return cli.main(argv), out_dir


def error_payload(capsys):
    err = capsys.readouterr().err.strip().splitlines()[-1]
    payload = json.loads(err)
    assert set(payload) == {"error"}
    assert set(payload["error"]) == {"type", "exit_code", "message"}
    return payload["error"]


def manifest(out_dir):
    return json.loads((out_dir / "manifest.json").read_text())


def csv_lines(path):
    text = path.read_bytes().decode("ascii")
    assert text.endswith("\n")
    return text.splitlines()


def heat_config(**overrides):
    config = {"geometry": dict(GEOMETRY), "source": dict(SOURCE),
              "medium": {"sigma": 1.5},
              "contour": {"t_final": 1.0, "n_steps": 4},
              "grid": {"x_min": 3.0, "x_max": 7.0, "nx": 8,
                       "y_min": 3.0, "y_max": 7.0, "ny": 8},
              "m_max": 8}
    config.update(overrides)
    return config


def test_selftest_passes_and_writes_report(tmp_path):
    code, out_dir = run(tmp_path, "selftest")
    assert code == 0
    report = json.loads((out_dir / "selftest.json").read_text())
    assert report["passed"]
    assert [c["name"] for c in report["checks"]] == [
        "wronskian", "recurrence", "lemma_bounds", "kernel_backend"]
    assert all(c["passed"] for c in report["checks"])
    assert all(c["worst"] <= c["tolerance"] for c in report["checks"])
    assert manifest(out_dir)["outputs"] == ["selftest.json"]


def test_manifest_echoes_run_parameters(tmp_path):
    code, out_dir = run(tmp_path, "selftest",
                        flags=("--workers", "2", "--seed", "7"))
    assert code == 0
    m = manifest(out_dir)
    assert m["command"] == "selftest"
    assert m["workers"] == 2
    assert m["seed"] == 7
    assert m["backend"] == kernels.BACKEND
    assert set(m["versions"]) == {"extcloak", "python", "numpy"}
    assert m["versions"]["numpy"] == np.__version__
    assert m["timings"]["total_seconds"] > 0
    assert m["config"]["n_max"] == 12


def test_missing_config_file_exits_2(tmp_path, capsys):
    code = cli.main(["bounds", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "out")])
    assert code == 2
    err = error_payload(capsys)
    assert err["type"] == "config"
    assert err["exit_code"] == 2
    assert "nope.json" in err["message"]


def test_invalid_json_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    code = cli.main(["bounds", "--config", str(path),
                     "--out", str(tmp_path / "out")])
    assert code == 2
    assert error_payload(capsys)["type"] == "config"


def test_unknown_key_rejected(tmp_path, capsys):
    config = {"geometry": dict(GEOMETRY), "source": dict(SOURCE),
              "bogus": 1}
    code, _ = run(tmp_path, "bounds", config)
    assert code == 2
    assert "bogus" in error_payload(capsys)["message"]


def test_nested_unknown_key_rejected(tmp_path, capsys):
    geometry = dict(GEOMETRY, tilt=0.1)
    config = {"geometry": geometry, "source": dict(SOURCE)}
    code, _ = run(tmp_path, "bounds", config)
    assert code == 2
    message = error_payload(capsys)["message"]
    assert "geometry" in message
    assert "tilt" in message


def test_workers_below_one_exits_2(tmp_path, capsys):
    code, _ = run(tmp_path, "selftest", flags=("--workers", "0"))
    assert code == 2
    assert error_payload(capsys)["type"] == "config"


def test_missing_out_flag_exits_2(tmp_path, capsys):
    assert cli.main(["selftest"]) == 2
    capsys.readouterr()


def test_unknown_command_exits_2(tmp_path, capsys):
    assert cli.main(["frobnicate", "--out", str(tmp_path / "out")]) == 2
    capsys.readouterr()


def test_graf_error_artifacts(tmp_path):
    config = {"families": ["real"], "n_samples": 3,
              "m_min": 5, "m_max": 8}
    code, out_dir = run(tmp_path, "graf-error", config)
    assert code == 0
    lines = csv_lines(out_dir / "graf_error_real.csv")
    assert lines[0] == ("M,actual_monopole,bound_monopole,"
                        "actual_dipole,bound_dipole")
    assert len(lines) == 5
    assert [int(line.split(",")[0]) for line in lines[1:]] == [5, 6, 7, 8]
    m = manifest(out_dir)
    assert m["outputs"] == ["graf_error_real.csv"]
    model = m["models"]["real"]
    assert 0 < model["a"] < 1
    assert model["c1"] > 0 and model["c2"] > 0
    assert len(m["thetas"]) == 3


def test_graf_error_theta_order_validated(tmp_path, capsys):
    config = {"theta_min": 5.0, "theta_max": 1.0}
    code, _ = run(tmp_path, "graf-error", config)
    assert code == 2
    assert "theta" in error_payload(capsys)["message"]


def test_cloak_field_artifacts(tmp_path):
    config = {"geometry": dict(GEOMETRY), "source": dict(SOURCE),
              "k": [2.0, 0.5], "m_max": 8,
              "grid": {"x_min": 0.0, "x_max": 10.0, "nx": 12,
                       "y_min": 0.0, "y_max": 10.0, "ny": 12}}
    code, out_dir = run(tmp_path, "cloak-field", config)
    assert code == 0
    for name in ("incident.csv", "interior_cloak.csv",
                 "exterior_cloak.csv"):
        lines = csv_lines(out_dir / name)
        assert lines[0] == "x,y,re,im"
        assert len(lines) == 1 + 12 * 12
    m = manifest(out_dir)
    assert len(m["divergence"]["radii"]) == 4
    assert 0 < m["divergence"]["r_ci"] < m["divergence"]["r_co"]
    assert m["config"]["k"] == [2.0, 0.5]


def test_grid_node_on_source_exits_3(tmp_path, capsys):
    config = {"geometry": dict(GEOMETRY), "source": dict(SOURCE),
              "k": [2.0, 0.5], "m_max": 8,
              "grid": {"x_min": 0.0, "x_max": 10.0, "nx": 11,
                       "y_min": 0.0, "y_max": 10.0, "ny": 11}}
    code, _ = run(tmp_path, "cloak-field", config)
    assert code == 3
    err = error_payload(capsys)
    assert err["type"] == "domain"
    assert "source" in err["message"]


def test_bounds_artifacts_and_joint_domination(tmp_path):
    config = {"geometry": dict(GEOMETRY), "source": dict(SOURCE),
              "n_samples": 3, "m_fit": 3, "m_ref": 24, "m_eval": 12}
    code, out_dir = run(tmp_path, "bounds", config)
    assert code == 0
    lines = csv_lines(out_dir / "bounds.csv")
    assert lines[0] == "theta,re_k,im_k,measured,predicted,bound"
    assert len(lines) == 4
    for line in lines[1:]:
        values = [float(v) for v in line.split(",")]
        assert values[3] <= values[5]
        assert values[4] > 0
    m = manifest(out_dir)
    assert m["config"]["family"] == "dissipative"
    assert 0 < m["ratio_a"] < 1
    assert len(m["audit_points"]) == 8


def test_bounds_order_validated(tmp_path, capsys):
    config = {"geometry": dict(GEOMETRY), "source": dict(SOURCE),
              "m_fit": 3, "m_ref": 10, "m_eval": 12}
    code, _ = run(tmp_path, "bounds", config)
    assert code == 2
    assert "m_fit" in error_payload(capsys)["message"]


def test_scatter_field_artifacts(tmp_path):
    config = {"obstacle": {"center": [5.0, 5.0], "scale": 0.5,
                           "n_nodes": 64},
              "source": dict(SOURCE), "k": [10.0, 0.0],
              "grid": {"x_min": 3.0, "x_max": 7.0, "nx": 12,
                       "y_min": 3.0, "y_max": 7.0, "ny": 12}}
    code, out_dir = run(tmp_path, "scatter-field", config)
    assert code == 0
    for name in ("scattered.csv", "total.csv"):
        lines = csv_lines(out_dir / name)
        assert lines[0] == "x,y,re,im"
        assert len(lines) == 1 + 12 * 12
    m = manifest(out_dir)
    assert m["config"]["eta"] == 10.0
    assert m["solve_residual"] < 1e-12
    assert m["residual_norm"] < 0.05
    assert m["interior_grid_points"] >= 1


def test_grid_node_on_obstacle_exits_3(tmp_path, capsys):
    config = {"obstacle": {"center": [5.0, 5.0], "scale": 0.5,
                           "n_nodes": 16},
              "source": dict(SOURCE), "k": [10.0, 0.0],
              "grid": {"x_min": 5.5, "x_max": 6.5, "nx": 2,
                       "y_min": 4.0, "y_max": 6.0, "ny": 3}}
    code, _ = run(tmp_path, "scatter-field", config)
    assert code == 3
    assert "obstacle" in error_payload(capsys)["message"]


def test_heat_sim_artifacts(tmp_path):
    config = heat_config(write_times=[0, 2, 4], long_csv=True)
    code, out_dir = run(tmp_path, "heat-sim", config)
    assert code == 0
    m = manifest(out_dir)
    names = [f"heat_{c}_t{i}.csv"
             for c in ("cloak", "incident", "scattered", "total")
             for i in (0, 2, 4)]
    assert m["outputs"] == names + ["heat_long.csv"]
    assert not (out_dir / "heat_total_t1.csv").exists()
    lines = csv_lines(out_dir / "heat_total_t4.csv")
    assert lines[0] == "x,y,value"
    assert len(lines) == 1 + 8 * 8
    long_lines = csv_lines(out_dir / "heat_long.csv")
    assert long_lines[0] == "component,t,x,y,value"
    assert len(long_lines) == 1 + 4 * 3 * 8 * 8
    assert m["u_max"] > 0
    assert len(m["safe_radii"]["radii"]) == 4
    assert m["times"] == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert m["config"]["contour"]["dt"] == 0.25


def test_heat_sim_write_times_validated(tmp_path, capsys):
    config = heat_config(write_times=[0, 99])
    code, _ = run(tmp_path, "heat-sim", config)
    assert code == 2
    assert "write_times" in error_payload(capsys)["message"]


def test_heat_sim_without_cloak_omits_safety(tmp_path):
    config = heat_config(cloak_active=False, write_times=[4])
    code, out_dir = run(tmp_path, "heat-sim", config)
    assert code == 0
    m = manifest(out_dir)
    assert m["u_max"] is None
    assert m["safe_radii"] is None
    assert len(m["outputs"]) == 4


def test_sweep_circles_artifacts(tmp_path):
    config = {"center": [10.0, 10.0], "delta_c_values": [2.0],
              "sigma": 1.3, "source": {"location": [10.0, 1.0]},
              "contour": {"t_final": 1.0, "n_steps": 4},
              "grid": {"x_min": 0.0, "x_max": 20.0, "nx": 61,
                       "y_min": 0.0, "y_max": 20.0, "ny": 61},
              "m_max": 8, "n_int": 64}
    code, out_dir = run(tmp_path, "sweep-circles", config)
    assert code == 0
    lines = csv_lines(out_dir / "sweep.csv")
    assert lines[0] == "delta_c,device,rho,r_divergence,u_max,saturated"
    assert len(lines) == 5
    for line in lines[1:]:
        fields = line.split(",")
        assert fields[0] == "2.0"
        assert fields[5] in ("0", "1")
        assert 0 < float(fields[2]) < float(fields[3])
    entry = manifest(out_dir)["entries"][0]
    assert entry["grid_perturbed"] >= 1
    assert entry["nx"] > 61
    assert entry["touch_limit"] == pytest.approx(2.0)
    assert entry["source_in_divergence_region"] is False


def test_csv_outputs_are_byte_identical(tmp_path):
    config = {"families": ["dissipative"], "n_samples": 4, "m_max": 10}
    code1, first = run(tmp_path, "graf-error", config, out="first")
    code2, second = run(tmp_path, "graf-error", config, out="second")
    assert code1 == 0 and code2 == 0
    name = "graf_error_dissipative.csv"
    assert (first / name).read_bytes() == (second / name).read_bytes()


def test_numerical_failure_exits_4(tmp_path, capsys, monkeypatch):
    def boom(config, args, out_dir):
        raise NumericalError("synthetic failure")

    monkeypatch.setitem(cli._COMMANDS, "selftest",
                        (boom, False, "synthetic"))
    code, _ = run(tmp_path, "selftest")
    assert code == 4
    err = error_payload(capsys)
    assert err["type"] == "numerical"
    assert err["exit_code"] == 4


def test_linear_algebra_failure_exits_4(tmp_path, capsys, monkeypatch):
    def boom(config, args, out_dir):
        raise np.linalg.LinAlgError("singular")

    monkeypatch.setitem(cli._COMMANDS, "selftest",
                        (boom, False, "synthetic"))
    code, _ = run(tmp_path, "selftest")
    assert code == 4
    assert error_payload(capsys)["type"] == "numerical"
