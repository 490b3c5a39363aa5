import json

import numpy as np
import pytest

from nlskit import ConfigError, parse_config, read_fields, write_fields
from nlskit.cli import main
from nlskit.config import ENV_OUT_DIR
from nlskit.diagnostics import expected_row_count

from conftest import gaussian


def test_defaults_applied():
    cfg = parse_config(None, {"experiment": "simulate"})
    assert cfg.d == 1 and cfg.grid_m == 256 and cfg.dt == 1e-3
    assert cfg.weight == "quadratic"


def test_config_file_and_flag_precedence(tmp_path):
    doc = {"experiment": "simulate", "d": 1, "grid_m": 128, "dt": 0.002,
           "amplitude": 0.4}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc))
    cfg = parse_config(path, {"dt": 0.005})
    assert cfg.dt == 0.005          # flag wins
    assert cfg.grid_m == 128        # file value kept
    assert cfg.amplitude == 0.4


def test_config_aggregates_all_problems(tmp_path):
    doc = {"experiment": "simulate", "dt": -0.1, "grid_m": 7, "d": 5,
           "mystery_key": 1}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ConfigError) as err:
        parse_config(path)
    text = str(err.value)
    assert "dt must be > 0" in text
    assert "grid_m" in text
    assert "d must be" in text
    assert "mystery_key" in text


def test_config_type_mismatch_reported():
    with pytest.raises(ConfigError, match="expected"):
        parse_config(None, {"experiment": "simulate", "grid_m": "many"})


def test_config_beta_cross_checks():
    with pytest.raises(ConfigError, match="symmetric"):
        parse_config(None, {"experiment": "simulate", "n_components": 2,
                            "beta": [1.0, 0.2, 0.3, 1.0]})
    with pytest.raises(ConfigError, match="p >= 1"):
        parse_config(None, {"experiment": "simulate", "n_components": 2,
                            "beta": [1.0, 0.5, 0.5, 1.0], "p": 0.5})
    cfg = parse_config(None, {"experiment": "simulate", "n_components": 2,
                              "beta": [1.0, 2.0]})
    assert np.array_equal(cfg.beta_matrix(), np.diag([1.0, 2.0]))


def test_config_unit_cube_required_for_gn():
    with pytest.raises(ConfigError, match="unit cube"):
        parse_config(None, {"experiment": "gn-check", "d": 1,
                            "grid_m": 10, "box_l": 3.5})


def test_env_var_sets_default_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_OUT_DIR, str(tmp_path / "envout"))
    cfg = parse_config(None, {"experiment": "simulate"})
    assert cfg.out_dir == str(tmp_path / "envout")


# ---------------------------------------------------------------------------
# Field files
# ---------------------------------------------------------------------------

def test_field_file_round_trip(tmp_path, grid1d):
    rng = np.random.default_rng(1)
    f1 = gaussian(grid1d, amp=0.5, velocity=[0.3])
    f2 = gaussian(grid1d, amp=0.2, center=[2.0])
    path = tmp_path / "state.nlsf"
    write_fields(path, grid1d, [f1, f2])
    grid_back, fields = read_fields(path)
    assert grid_back == grid1d
    assert np.array_equal(fields[0].values, f1.values)
    assert np.array_equal(fields[1].values, f2.values)
    # byte-identical on rewrite
    path2 = tmp_path / "again.nlsf"
    write_fields(path2, grid_back, fields)
    assert path.read_bytes() == path2.read_bytes()


def test_field_file_rejects_garbage(tmp_path):
    path = tmp_path / "bad.nlsf"
    path.write_bytes(b"not a field file")
    from nlskit import FieldFileError
    with pytest.raises(FieldFileError):
        read_fields(path)


# ---------------------------------------------------------------------------
# CLI end to end
# ---------------------------------------------------------------------------

SIM_ARGS = ["simulate", "--d", "1", "--grid-m", "128", "--box-l", "16",
            "--p", "1", "--beta", "1", "--dt", "0.002", "--t-final", "0.2",
            "--snapshot-stride", "10", "--amplitude", "0.5"]


def test_cli_simulate_artifacts_and_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(SIM_ARGS + ["--out-dir", str(out1)]) == 0
    assert main(SIM_ARGS + ["--out-dir", str(out2)]) == 0
    csv1 = (out1 / "diagnostics.csv").read_bytes()
    csv2 = (out2 / "diagnostics.csv").read_bytes()
    assert csv1 == csv2  # byte-identical reruns
    s1 = json.loads((out1 / "summary.json").read_text())
    s2 = json.loads((out2 / "summary.json").read_text())
    for s in (s1, s2):  # wall time and output paths are run-specific
        s.pop("wall_time_s")
        s["config"].pop("out_dir")
    assert s1 == s2
    rows = csv1.decode().strip().split("\n")
    assert len(rows) - 1 == expected_row_count(0.2, 0.002, 10)
    assert all(c["pass"] for c in s1["checks"].values())


def test_cli_flag_override_echoed_in_summary(tmp_path):
    cfgfile = tmp_path / "c.json"
    cfgfile.write_text(json.dumps({"dt": 0.002, "grid_m": 128, "t_final": 0.1,
                                   "amplitude": 0.3}))
    out = tmp_path / "out"
    code = main(["simulate", "--config", str(cfgfile), "--dt", "0.004",
                 "--out-dir", str(out)])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["dt"] == 0.004


def test_cli_bad_config_exit_one(tmp_path, capsys):
    code = main(["simulate", "--dt", "-0.1", "--out-dir", str(tmp_path)])
    assert code == 1
    assert "dt must be > 0" in capsys.readouterr().err


def test_cli_nan_abort_exit_two(tmp_path, capsys):
    code = main(["simulate", "--d", "1", "--grid-m", "64", "--box-l", "8",
                 "--p", "2", "--amplitude", "1e200", "--dt", "0.01",
                 "--t-final", "0.1", "--out-dir", str(tmp_path)])
    assert code == 2
    assert "NaN" in capsys.readouterr().err


def test_cli_verify_identities_passes(tmp_path):
    code = main(["verify-identities", "--d", "1", "--grid-m", "256",
                 "--box-l", "16", "--p", "1", "--beta", "1",
                 "--amplitude", "0.6", "--width", "1.5",
                 "--dt", "0.002", "--t-final", "0.4", "--snapshot-stride", "10",
                 "--out-dir", str(tmp_path)])
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    checks = summary["checks"]
    assert checks["virial_first_identity"]["pass"]
    assert checks["interaction_inequality"]["pass"]


def test_cli_wave_op_writes_profile_and_diverges_for_large_data(tmp_path):
    okdir = tmp_path / "ok"
    code = main(["wave-op", "--d", "1", "--grid-m", "256", "--box-l", "32",
                 "--p", "2", "--amplitude", "0.2", "--wave-t", "4",
                 "--wave-dt", "0.05", "--tol", "1e-8", "--out-dir", str(okdir)])
    assert code == 0
    grid, fields = read_fields(okdir / "initial_data.nlsf")
    assert grid.m == 256 and len(fields) == 1

    baddir = tmp_path / "bad"
    code = main(["wave-op", "--d", "1", "--grid-m", "256", "--box-l", "32",
                 "--p", "2", "--amplitude", "3.0", "--wave-t", "4",
                 "--wave-dt", "0.05", "--tol", "1e-8", "--out-dir", str(baddir)])
    assert code == 1
    summary = json.loads((baddir / "summary.json").read_text())
    assert summary["converged"] is False


def test_cli_scatter_free_run(tmp_path):
    out = tmp_path / "scat"
    code = main(["scatter", "--d", "1", "--grid-m", "256", "--box-l", "32",
                 "--p", "2", "--beta", "0", "--amplitude", "0.5",
                 "--dt", "0.005", "--t-final", "2.0", "--snapshot-stride", "50",
                 "--tol", "1e-8", "--out-dir", str(out)])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["converged"]
    grid, prof = read_fields(out / "profile.nlsf")
    # free flow scatters to its own initial datum
    x = grid.axis_coordinates
    assert np.abs(prof[0].values - 0.5 * np.exp(-x ** 2 / 2)).max() < 1e-9


def test_cli_gn_check_deterministic(tmp_path):
    args = ["gn-check", "--d", "1", "--grid-m", "128", "--box-l", "8",
            "--gn-count", "25", "--gn-variant", "cubic",
            "--gn-generator", "bumps", "--seed", "77"]
    out1, out2 = tmp_path / "g1", tmp_path / "g2"
    assert main(args + ["--out-dir", str(out1)]) == 0
    assert main(args + ["--out-dir", str(out2)]) == 0
    assert (out1 / "gn_report.json").read_bytes() == (out2 / "gn_report.json").read_bytes()
