import json
import math
import subprocess
import sys

import numpy as np
import pytest

import levygen.cli as cli
from levygen.errors import CheckFailure, ConfigError, QuadratureError
from levygen.holder import ROUTE_VARIABLE_ZERO
from levygen.simulate import DEFAULT_SEED


def run_cli(tmp_path, command, cfg, *flags, out=None):
    path = tmp_path / f"{command}_cfg.json"
    path.write_text(json.dumps(cfg))
    out = out or tmp_path
    return cli.main([command, "--config", str(path), "--out", str(out), *flags])


def read_json(out, name):
    with open(out / name) as fh:
        return json.load(fh)


def read_csv(out, name):
    lines = (out / name).read_text().split("\n")
    assert lines[-1] == ""  # trailing newline, '\n' line ends
    return lines[0].split(","), [ln.split(",") for ln in lines[1:-1]]


CAUCHY = {"kind": "levy", "d": 1,
          "measure": {"kind": "isotropic_power", "c": 1.0 / math.pi,
                      "alpha": 1.0, "d": 1}}
CP = {"kind": "compound_poisson",
      "jumps": {"locations": [[1.0]], "weights": [2.0]}}
VAGUE_CFG = {
    "model": CAUCHY,
    "region": {"kind": "interval", "lo": 1.0, "hi": 2.0},
    "experiment": {"kind": "vague", "n": 50_000,
                   "t_grid": [0.1, 0.03, 0.01, 0.003]},
}


# ---------------------------------------------------------------------------
# config validation


def test_unknown_top_level_key(tmp_path):
    cfg = {"model": CAUCHY, "functoin": {"kind": "gaussian"}}
    with pytest.raises(ConfigError, match="functoin"):
        cli.validate_config(cfg, "generator")
    assert run_cli(tmp_path, "generator", cfg) == 2


def test_unknown_nested_key_reports_dotted_path():
    cfg = {"model": {"kind": "levy", "meassure": {"kind": "atoms"}},
           "function": {"kind": "gaussian"}}
    with pytest.raises(ConfigError, match=r"model\.meassure"):
        cli.validate_config(cfg, "generator")


def test_unknown_experiment_key_reports_path():
    cfg = {"model": CP, "function": {"kind": "gaussian"},
           "experiment": {"kind": "limit_study", "estimatr": "richardson"}}
    with pytest.raises(ConfigError, match=r"experiment\.estimatr"):
        cli.validate_config(cfg, "asymptotics")


def test_unknown_symbol_param_reports_path():
    cfg = {"symbol": {"family": "stable-like", "params": {"gamma": 0.7,
                                                          "gama": 1.0}}}
    with pytest.raises(ConfigError, match=r"symbol\.params\.gama"):
        cli.validate_config(cfg, "symbol")


def test_command_field_must_match(tmp_path):
    cfg = dict(VAGUE_CFG, command="verify")
    assert run_cli(tmp_path, "asymptotics", cfg) == 2


def test_malformed_json_exits_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert cli.main(["symbol", "--config", str(path)]) == 2


def test_missing_config_file_exits_2(tmp_path):
    assert cli.main(["symbol", "--config", str(tmp_path / "nope.json")]) == 2


def test_seed_out_of_range_rejected():
    with pytest.raises(ConfigError, match="seed"):
        cli.validate_config(dict(VAGUE_CFG, seed=-1), "asymptotics")
    with pytest.raises(ConfigError, match="seed"):
        cli.validate_config(dict(VAGUE_CFG, seed=2 ** 64), "asymptotics")


def test_vague_requires_region():
    cfg = {"model": CAUCHY, "experiment": {"kind": "vague"}}
    with pytest.raises(ConfigError, match="region"):
        cli.validate_config(cfg, "asymptotics")


def test_limit_study_rejects_region_key():
    cfg = {"model": CP, "function": {"kind": "gaussian"},
           "region": {"kind": "interval", "lo": 1.0, "hi": 2.0},
           "experiment": {"kind": "limit_study"}}
    with pytest.raises(ConfigError, match="region"):
        cli.validate_config(cfg, "asymptotics")


def test_verify_suites_reject_each_others_keys():
    with pytest.raises(ConfigError, match="threshold"):
        cli.validate_config({"suite": "aux1", "threshold": 0.5}, "verify")
    with pytest.raises(ConfigError, match="kappas"):
        cli.validate_config({"suite": "kernel", "kappas": [0.5]}, "verify")


def test_custom_symbol_family_not_constructible():
    # q must be a callable; there is no JSON form for it
    with pytest.raises(ConfigError, match="family"):
        cli.validate_config({"symbol": {"family": "custom",
                                        "params": {"q": "xi**2"}}}, "symbol")


def test_workers_must_be_positive(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(VAGUE_CFG))
    code = cli.main(["asymptotics", "--config", str(path),
                     "--out", str(tmp_path), "--workers", "0"])
    assert code == 2


# ---------------------------------------------------------------------------
# builders


def test_atoms_locations_coerced_to_rows():
    model = cli.model_from_config(
        {"kind": "compound_poisson",
         "jumps": {"locations": [1.0, -0.5], "weights": [1.0, 1.0]}})
    assert model.jumps.locations.shape == (2, 1)


def test_expression_function_constant_envelope():
    tf = cli.function_from_config({"kind": "expression", "source": "sin(x1)",
                                   "envelope": 2.0})
    assert float(tf.envelope(0.0)) == 2.0
    assert float(tf.envelope(10.0)) == 2.0


def test_region_from_config_box():
    assert cli.region_from_config(
        {"kind": "box", "lo": [1.0, 1.0], "hi": [2.0, 2.0]}
    ) == ("box", [1.0, 1.0], [2.0, 2.0])


def test_states_grid_forms():
    flat = cli._states_grid([0.0, 1.0, 2.0], 1)
    assert flat.shape == (3, 1)
    grid = cli._states_grid({"start": [0.0, 0.0], "stop": [1.0, 2.0],
                             "count": 5}, 2)
    assert grid.shape == (5, 2)
    assert np.allclose(grid[-1], [1.0, 2.0])
    with pytest.raises(ConfigError):
        cli._states_grid([[0.0, 1.0]], 1)
    with pytest.raises(ConfigError):
        cli._states_grid(None, 2)


# ---------------------------------------------------------------------------
# symbol command


def test_symbol_stable_like_report(tmp_path):
    cfg = {"symbol": {"family": "stable-like", "d": 1,
                      "params": {"gamma": 0.7}},
           "xi": [0.25, 1.0, 4.0]}
    assert run_cli(tmp_path, "symbol", cfg) == 0
    doc = read_json(tmp_path, "symbol.json")
    assert abs(doc["beta_infinity"]["value"] - 0.7) < 1e-6
    assert doc["passed"] is True
    assert doc["values"][0]["re"] == pytest.approx(0.25 ** 0.7, rel=1e-12)
    assert doc["sector"]["constant"] == 0.0


def test_symbol_relativistic_value(tmp_path):
    # (|xi|^2 + m^2)^{gamma/2} - m^gamma = 2 - 1 at |xi| = sqrt(3)
    cfg = {"symbol": {"family": "relativistic", "d": 1,
                      "params": {"gamma": 1.0, "m": 1.0}},
           "xi": [math.sqrt(3.0)]}
    assert run_cli(tmp_path, "symbol", cfg) == 0
    doc = read_json(tmp_path, "symbol.json")
    assert doc["values"][0]["re"] == pytest.approx(1.0, rel=1e-12)


def test_symbol_rays_csv(tmp_path):
    cfg = {"symbol": {"family": "stable-like", "params": {"gamma": 1.0}},
           "rays": {"r_min": 0.1, "r_max": 10.0, "count": 5}}
    assert run_cli(tmp_path, "symbol", cfg) == 0
    header, rows = read_csv(tmp_path, "symbol_rays.csv")
    assert header == ["ray", "r", "re_q", "im_q"]
    assert len(rows) == 10  # 2 directions x 5 radii in d = 1
    r, q = float(rows[0][1]), float(rows[0][2])
    assert q == pytest.approx(r, rel=1e-12)


# ---------------------------------------------------------------------------
# generator command


def test_generator_cauchy_cosine_grid(tmp_path):
    cfg = {"model": CAUCHY, "function": {"kind": "cosine", "xi0": 1.0},
           "states": [-2.0, -1.0, 0.0, 1.0, 2.0]}
    assert run_cli(tmp_path, "generator", cfg) == 0
    header, rows = read_csv(tmp_path, "generator.csv")
    assert header == ["x1", "value", "error", "status"]
    for row in rows:
        x, val = float(row[0]), float(row[1])
        assert val == pytest.approx(-math.cos(x), rel=1e-6)
        assert row[3] == "ok"
    doc = read_json(tmp_path, "generator.json")
    assert doc["passed"] is True and doc["n_ok"] == 5


def test_generator_without_reference_route_fails(tmp_path):
    cfg = {"model": {"kind": "relativistic", "gamma": 1.0, "m": 1.0},
           "function": {"kind": "gaussian"}, "states": [0.0, 1.0]}
    assert run_cli(tmp_path, "generator", cfg) == 1
    _, rows = read_csv(tmp_path, "generator.csv")
    assert all(r[-1].startswith("ContractError") for r in rows)


# ---------------------------------------------------------------------------
# simulate command


def test_simulate_path_files(tmp_path):
    cfg = {"model": CP, "horizon": 2.0, "step": 0.25, "paths": 3,
           "exit_radius": 1.5, "seed": 11}
    assert run_cli(tmp_path, "simulate", cfg) == 0
    texts = [(tmp_path / f"simulate_path{i}.csv").read_text() for i in range(3)]
    assert len(set(texts)) == 3  # distinct streams per path
    header, rows = read_csv(tmp_path, "simulate_path0.csv")
    assert header == ["t", "x1", "runsup", "exited"]
    sups = [float(r[2]) for r in rows]
    assert sups == sorted(sups)
    doc = read_json(tmp_path, "simulate.json")
    summary = doc["path_summaries"][0]
    flags = [int(r[3]) for r in rows]
    if summary["exit_time"] is None or summary["exit_time"] == "inf":
        assert set(flags) == {0}
    else:
        ts = [float(r[0]) for r in rows]
        want = [1 if t >= summary["exit_time"] else 0 for t in ts]
        assert flags == want


# ---------------------------------------------------------------------------
# asymptotics command


def test_asymptotics_drift_model_near_zero_discrepancy(tmp_path):
    cfg = {"model": {"kind": "levy", "b": [1.0], "d": 1},
           "function": {"kind": "cosine", "xi0": 1.0}, "x": 1.0,
           "experiment": {"kind": "limit_study", "n": 1000}}
    assert run_cli(tmp_path, "asymptotics", cfg, "--no-plot") == 0
    doc = read_json(tmp_path, "asymptotics.json")
    assert doc["reference"] == pytest.approx(-math.sin(1.0), rel=1e-9)
    assert doc["discrepancy"] < 0.01
    _, rows = read_csv(tmp_path, "asymptotics.csv")
    assert all(float(r[2]) == 0.0 for r in rows)  # deterministic increments


def test_asymptotics_csv_row_discrepancy_formula(tmp_path):
    out = tmp_path / "a"
    assert run_cli(tmp_path, "asymptotics", VAGUE_CFG, "--no-plot", out=out) in (0, 1)
    header, rows = read_csv(out, "asymptotics.csv")
    assert header == ["t", "mean", "stderr", "reference", "discrepancy"]
    for row in rows:
        mean, se, ref, disc = (float(v) for v in row[1:])
        want = abs(mean - ref) / (3.0 * se + 0.05 * abs(ref) + 1e-6)
        assert disc == pytest.approx(want, rel=1e-12)


def test_asymptotics_vague_reference_and_pass(tmp_path):
    assert run_cli(tmp_path, "asymptotics", VAGUE_CFG, "--no-plot") == 0
    doc = read_json(tmp_path, "asymptotics.json")
    assert doc["reference"] == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-6)
    assert doc["passed"] is True


def test_rerun_and_workers_leave_csv_bytes_unchanged(tmp_path):
    out1, out2, out3 = (tmp_path / n for n in ("r1", "r2", "r3"))
    run_cli(tmp_path, "asymptotics", VAGUE_CFG, "--no-plot", out=out1)
    run_cli(tmp_path, "asymptotics", VAGUE_CFG, "--no-plot", out=out2)
    run_cli(tmp_path, "asymptotics", VAGUE_CFG, "--no-plot", "--workers", "4",
            out=out3)
    base = (out1 / "asymptotics.csv").read_bytes()
    assert (out2 / "asymptotics.csv").read_bytes() == base
    assert (out3 / "asymptotics.csv").read_bytes() == base
    assert (out2 / "asymptotics.json").read_bytes() == \
        (out3 / "asymptotics.json").read_bytes()


def test_missing_seed_defaults_to_documented_constant(tmp_path):
    out1, out2, out3 = (tmp_path / n for n in ("d1", "d2", "d3"))
    run_cli(tmp_path, "asymptotics", VAGUE_CFG, "--no-plot", out=out1)
    run_cli(tmp_path, "asymptotics", VAGUE_CFG, "--no-plot",
            "--seed", hex(DEFAULT_SEED), out=out2)
    run_cli(tmp_path, "asymptotics", VAGUE_CFG, "--no-plot", "--seed", "12345",
            out=out3)
    base = (out1 / "asymptotics.csv").read_bytes()
    assert (out2 / "asymptotics.csv").read_bytes() == base
    assert (out3 / "asymptotics.csv").read_bytes() != base


def test_plot_written_by_default_and_skippable(tmp_path):
    cfg = dict(VAGUE_CFG, experiment={"kind": "vague", "n": 1000,
                                      "t_grid": [0.1, 0.03]})
    out1, out2 = tmp_path / "p1", tmp_path / "p2"
    run_cli(tmp_path, "asymptotics", cfg, out=out1)
    assert (out1 / "asymptotics.png").exists()
    run_cli(tmp_path, "asymptotics", cfg, "--no-plot", out=out2)
    assert not (out2 / "asymptotics.png").exists()


# ---------------------------------------------------------------------------
# verify command


def test_verify_kernel_suite(tmp_path):
    assert run_cli(tmp_path, "verify", {"suite": "kernel"}, "--no-plot") == 0
    doc = read_json(tmp_path, "verify.json")
    assert doc["passed"] is True
    assert len(doc["checks"]) == 16
    assert all(c["margin"] > 0 for c in doc["checks"])
    header, rows = read_csv(tmp_path, "verify.csv")
    assert header == ["check", "margin", "passed"]
    assert len(rows) == 16


def test_verify_aux1_suite(tmp_path):
    assert run_cli(tmp_path, "verify", {"suite": "aux1"}, "--no-plot") == 0
    doc = read_json(tmp_path, "verify.json")
    names = [c["name"] for c in doc["checks"]]
    assert any("kappa=0.8" in n for n in names)
    assert any("divergence" in n for n in names)
    assert doc["passed"] is True


def test_verify_app7_suite_and_failure_exit(tmp_path):
    assert run_cli(tmp_path, "verify", {"suite": "app7"}, "--no-plot") == 0
    out2 = tmp_path / "tight"
    code = run_cli(tmp_path, "verify", {"suite": "app7", "threshold": 1e-9},
                   "--no-plot", out=out2)
    assert code == 1
    doc = read_json(out2, "verify.json")
    assert doc["passed"] is False
    assert any(c["margin"] < 0 for c in doc["checks"])


def test_verify_domain_suite_status(tmp_path):
    assert run_cli(tmp_path, "verify", {"suite": "domain"}, "--no-plot") == 0
    doc = read_json(tmp_path, "verify.json")
    assert doc["checks"][0]["status"] == ROUTE_VARIABLE_ZERO
    assert (tmp_path / "verify.csv").exists()


def test_verify_plot_default(tmp_path):
    run_cli(tmp_path, "verify", {"suite": "app7"})
    assert (tmp_path / "verify.png").exists()


# ---------------------------------------------------------------------------
# exit code mapping


def test_exit_codes_for_propagated_errors(tmp_path, monkeypatch):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"suite": "kernel"}))
    argv = ["verify", "--config", str(path), "--out", str(tmp_path)]

    def boom_check(cfg, args):
        raise CheckFailure("margin went negative")

    def boom_quad(cfg, args):
        raise QuadratureError("no convergence", partial=0.0, residual=1.0)

    monkeypatch.setitem(cli._COMMANDS, "verify", boom_check)
    assert cli.main(argv) == 1
    monkeypatch.setitem(cli._COMMANDS, "verify", boom_quad)
    assert cli.main(argv) == 3


def test_module_entry_point(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"suite": "app7"}))
    proc = subprocess.run(
        [sys.executable, "-m", "levygen.cli", "verify", "--config", str(path),
         "--out", str(tmp_path), "--no-plot"],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert "pass" in proc.stdout
