import json
import subprocess
import sys

import numpy as np
import pytest

from tcsflock import cli, runner
from tcsflock.config import load_config, preset_background, preset_density
from tcsflock.errors import ConfigError, InvariantViolation


def write_cfg(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_preset_background_values():
    rho0, u0, e0 = preset_background("paper-5.1")
    x = np.array([0.0, 0.25, 0.5])
    assert e0(x)[0] == pytest.approx(3.0)
    assert u0(x)[1] == pytest.approx(1.5)
    assert np.all(rho0(x) == 1.0)


def test_preset_density_normalized():
    rho0 = preset_density("paper-5.1")
    x = np.arange(1024) / 1024
    assert np.mean(rho0(x)) == pytest.approx(1.0, abs=1e-8)
    assert np.argmax(rho0(x)) == 512


def test_load_config_minimal(tmp_path):
    path = write_cfg(tmp_path, """
[run]
scenario = background-only
M = 128
T = 4.0
""")
    cfg = load_config(path)
    assert cfg.scenario == "background-only"
    assert cfg.M == 128
    assert cfg.preset == "paper-5.1"
    assert cfg.hash() == load_config(path).hash()


def test_missing_epsilon_named_in_error(tmp_path):
    path = write_cfg(tmp_path, """
[run]
scenario = kinetic
""")
    with pytest.raises(ConfigError, match="epsilon"):
        load_config(path)


def test_singular_lambda_range_rejected(tmp_path):
    path = write_cfg(tmp_path, """
[run]
scenario = kinetic
[model]
lambda1 = 1.5
[kinetic]
epsilon = 0.1
kernels = singular
theta_min = 1.99
theta_max = 2.0
""")
    with pytest.raises(ConfigError, match="lam1"):
        load_config(path)


def test_compatibility_condition_warns_not_errors(tmp_path):
    path = write_cfg(tmp_path, """
[run]
scenario = kinetic
[kinetic]
epsilon = 0.1
theta_min = 1.0
theta_max = 2.9
""")
    with pytest.warns(UserWarning, match="compatibility"):
        cfg = load_config(path)
    assert cfg.theta_max == 2.9


def test_weak_theta0_defaults_to_sample_mean(tmp_path):
    path = write_cfg(tmp_path, """
[run]
scenario = kinetic
[kinetic]
epsilon = 0.1
relaxation = weak
theta_min = 4.95
theta_max = 5.05
""")
    cfg = load_config(path)
    assert cfg.theta0 == pytest.approx(5.0)


def test_parse_error_reports_key(tmp_path):
    path = write_cfg(tmp_path, """
[run]
scenario = background-only
M = many
""")
    with pytest.raises(ConfigError, match="m"):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.ini"))


def test_cli_exit_codes(tmp_path, monkeypatch):
    monkeypatch.setenv("TCSFLOCK_OUTPUT_ROOT", str(tmp_path))
    good = write_cfg(tmp_path, """
[run]
scenario = background-only
M = 64
T = 0.5
outdir = ok
""")
    bad = write_cfg(tmp_path, """
[run]
scenario = nonsense
""", name="bad.ini")
    assert cli.main(["run", good]) == 0
    assert cli.main(["run", bad]) == cli.EXIT_CONFIG
    manifest = tmp_path / "ok" / "manifest.json"
    assert cli.main(["check", str(manifest)]) == 0
    # tamper with a row count: the invariant check must fail with code 4
    data = json.loads(manifest.read_text())
    data["files"][0]["rows"] += 1
    manifest.write_text(json.dumps(data))
    assert cli.main(["check", str(manifest)]) == cli.EXIT_INVARIANT


def test_manifest_incomplete_flag(tmp_path, monkeypatch):
    monkeypatch.setenv("TCSFLOCK_OUTPUT_ROOT", str(tmp_path))
    cfg = load_config(write_cfg(tmp_path, """
[run]
scenario = background-only
M = 64
T = 0.25
outdir = part
"""))
    manifest = runner.RunManifest(cfg, str(tmp_path / "part"))
    # freshly created manifests are flagged incomplete until finalized
    with pytest.raises(InvariantViolation, match="incomplete"):
        runner.check(manifest.path)
    manifest.finalize()
    runner.check(manifest.path)


def test_runs_are_deterministic(tmp_path, monkeypatch):
    monkeypatch.setenv("TCSFLOCK_OUTPUT_ROOT", str(tmp_path))
    text = """
[run]
scenario = kinetic
M = 64
T = 0.25
seed = 5
outdir = {out}
[kinetic]
epsilon = 0.2
N = 128
"""
    a = write_cfg(tmp_path, text.format(out="detA"), name="a.ini")
    b = write_cfg(tmp_path, text.format(out="detB"), name="b.ini")
    assert cli.main(["run", a]) == 0
    assert cli.main(["run", b]) == 0
    sa = (tmp_path / "detA" / "kinetic_series.csv").read_bytes()
    sb = (tmp_path / "detB" / "kinetic_series.csv").read_bytes()
    assert sa == sb


def test_cli_sweep_entry(tmp_path, monkeypatch):
    monkeypatch.setenv("TCSFLOCK_OUTPUT_ROOT", str(tmp_path))
    cfgp = write_cfg(tmp_path, """
[run]
scenario = epsilon-sweep
M = 32
outdir = sw
[kinetic]
N = 64
[sweep]
snapshots = 0.2
""")
    assert cli.main(["sweep", cfgp, "--eps", "0.2"]) == 0
    report = json.loads((tmp_path / "sw" / "sweep_report.json").read_text())
    assert report["epsilons"] == [0.2]
    assert report["monotone_rho"] is True  # single epsilon: vacuous
    assert cli.main(["check", str(tmp_path / "sw" / "manifest.json")]) == 0


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "tcsflock.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "run" in out.stdout and "sweep" in out.stdout and "check" in out.stdout
