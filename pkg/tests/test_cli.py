import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from trimlump.cli import main
from trimlump.experiment import (ConfigError, ExperimentConfig, member_dir, parse_mass, parse_stabilization,
                                 parse_values, sha256)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write_config(tmp_path, name="cfg.yaml", **data):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- configuration ---------------------------------------------------------------------


def test_defaults_follow_examples():
    cfg = ExperimentConfig.from_mapping({"example": "plate"})
    assert (cfg.degree, cfg.continuity, cfg.N) == (2, 1, 48)
    cfg = ExperimentConfig.from_mapping({"example": "perforated"})
    assert (cfg.degree, cfg.continuity, cfg.N) == (3, 2, 56)
    cfg = ExperimentConfig.from_mapping({})
    assert (cfg.example, cfg.N, cfg.safeguard, cfg.T) == ("ex1d", 256, 0.85, 3.0)
    assert ExperimentConfig.from_mapping({"example": "rot_square"}).N == 128


def test_config_roundtrip():
    cfg = ExperimentConfig.load(CONFIGS / "ex1d_dynamics.yaml")
    assert ExperimentConfig.from_mapping(cfg.to_mapping()) == cfg


def test_parsers():
    assert parse_mass("block(8)") == ("block", 8)
    assert parse_mass("Block") == ("block", 4)
    assert parse_mass("rowsum") == ("rowsum", 0)
    with pytest.raises(ConfigError):
        parse_mass("diagonal")
    assert parse_stabilization("off") == 0.0
    assert parse_stabilization("on") == 0.1
    assert parse_stabilization({"gamma": 0.2}) == 0.2
    with pytest.raises(ConfigError):
        parse_stabilization(2.0)
    assert parse_values("rowsum, block(4)") == ["rowsum", "block(4)"]
    with pytest.raises(ConfigError):
        parse_values(" , ")
    assert member_dir("mass", "block(4)") == "mass_block_4"


@pytest.mark.parametrize("data", [{"example": "torus"}, {"degree": 7}, {"eps": -1.0}, {"outputs": ["movie"]},
                                  {"colour": "red"}, {"integrator": {"scheme": "leapfrog"}},
                                  {"integrator": {"tau": 1}}, {"N": "many"}])
def test_invalid_configs(data):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping(data)


def test_invalid_combination_exit_2(tmp_path, capsys):
    code = main(["run", str(CONFIGS / "invalid.yaml"), "--out", str(tmp_path / "bad")])
    assert code == 2
    err = capsys.readouterr().err
    assert "central_difference" in err and "consistent" in err
    report = json.loads((tmp_path / "bad" / "error.json").read_text())
    assert report["error"] == "config" and "invalid combination" in report["message"]


def test_missing_config_exit_2(tmp_path):
    assert main(["run", str(tmp_path / "nope.yaml")]) == 2


# -- runs ------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def spectrum_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("spectrum")
    cfg = CONFIGS / "ex1d_spectrum.yaml"
    codes = [main(["run", str(cfg), "--out", str(base / name)]) for name in ("a", "b")]
    return codes, base


def test_spectrum_run_flags_one_mode(spectrum_runs):
    codes, base = spectrum_runs
    assert codes == [0, 0]
    rows = read_rows(base / "a" / "spectrum.csv")
    assert list(rows[0]) == ["index", "lambda_h", "lambda_exact", "ratio", "spurious"]
    assert len(rows) == 20
    flagged = [r for r in rows if float(r["spurious"]) == 1]
    assert len(flagged) == 1
    lam1, lam2 = (float(rows[i]["lambda_exact"]) for i in (0, 2))
    assert lam1 < float(flagged[0]["lambda_h"]) < lam2


def test_runs_are_deterministic(spectrum_runs):
    _, base = spectrum_runs
    for name in ("spectrum.csv", "projection.csv", "spectrum.svg", "projection.svg"):
        assert (base / "a" / name).read_bytes() == (base / "b" / name).read_bytes()


def test_manifest_is_complete(spectrum_runs):
    _, base = spectrum_runs
    out = base / "a"
    manifest = json.loads((out / "manifest.json").read_text())
    listed = {e["path"]: e["sha256"] for e in manifest["files"]}
    emitted = {p.name for p in out.iterdir() if p.name != "manifest.json"}
    assert set(listed) == emitted
    assert all(sha256(out / f) == h for f, h in listed.items())
    assert manifest["config"]["mass"] == "rowsum"
    assert manifest["summary"]["n_spurious"] == 1


def test_single_value_sweep_equals_run(spectrum_runs, tmp_path):
    _, base = spectrum_runs
    code = main(["sweep", str(CONFIGS / "ex1d_spectrum.yaml"), "--param", "eps", "--values", "1e-6",
                 "--out", str(tmp_path)])
    assert code == 0
    member = tmp_path / member_dir("eps", "1e-6")
    for name in ("spectrum.csv", "projection.csv"):
        assert (member / name).read_bytes() == (base / "a" / name).read_bytes()
    rows = read_rows(tmp_path / "summary.csv")
    assert len(rows) == 1 and rows[0]["status"] == "ok"
    assert list(rows[0]) == ["value", "lambda_min_spurious", "lambda_max", "dt_critical", "max_l2_error",
                             "steps", "status"]
    files = {e["path"] for e in json.loads((tmp_path / "manifest.json").read_text())["files"]}
    assert "summary.csv" in files


def test_sweep_member_failure_exit_1(tmp_path):
    # a fixed step of 0.01 is stable on the coarse mesh and diverges on the fine one
    cfg = write_config(tmp_path, example="ex1d", mass="rowsum", outputs=["trajectory"],
                       integrator={"scheme": "central_difference", "T": 3.0, "dt": 0.01})
    code = main(["sweep", str(cfg), "--param", "N", "--values", "16,256", "--out", str(tmp_path / "s"),
                 "--threads", "2"])
    assert code == 1
    rows = read_rows(tmp_path / "s" / "summary.csv")
    assert [r["status"] for r in rows] == ["ok", "failed(3)"]
    assert rows[1]["steps"] == "nan"


def test_stability_failure_exit_3(tmp_path):
    cfg = write_config(tmp_path, example="ex1d", mass="rowsum", outputs=["trajectory"],
                       integrator={"T": 3.0, "dt": 0.01})
    assert main(["run", str(cfg), "--out", str(tmp_path / "r")]) == 3
    report = json.loads((tmp_path / "r" / "error.json").read_text())
    assert report["error"] == "stability"
    assert 1 <= report["step"] <= 300 and report["time"] == pytest.approx(report["step"] * 0.01)


def test_stabilized_error_series_close_to_consistent(tmp_path):
    common = dict(example="ex1d", eps=1e-6, stabilization={"gamma": 0.1}, outputs=["error-series"])
    lumped = write_config(tmp_path, "l.yaml", mass="rowsum", **common)
    consistent = write_config(tmp_path, "c.yaml", mass="consistent", integrator={"scheme": "newmark"}, **common)
    assert main(["run", str(lumped), "--out", str(tmp_path / "l")]) == 0
    assert main(["run", str(consistent), "--out", str(tmp_path / "c")]) == 0
    el = np.loadtxt(tmp_path / "l" / "error_series.csv", delimiter=",", skiprows=1)
    ec = np.loadtxt(tmp_path / "c" / "error_series.csv", delimiter=",", skiprows=1)
    assert el[:, 1].max() <= 3 * ec[:, 1].max()
    assert (tmp_path / "l" / "error_series.svg").read_text().lstrip().startswith("<?xml")


def test_modes_and_trajectory_outputs(tmp_path):
    cfg = write_config(tmp_path, example="perforated", N=8, mass="block(4)", stabilization="on",
                       outputs=["modes", "trajectory"], modes=3, integrator={"T": 0.2, "stride": 5})
    assert main(["run", str(cfg), "--out", str(tmp_path / "m")]) == 0
    modes = read_rows(tmp_path / "m" / "modes.csv")
    assert list(modes[0]) == ["x", "y", "mode_1", "mode_2", "mode_3"]
    lines = (tmp_path / "m" / "trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("t,dof_0,dof_1")
    times = np.loadtxt(tmp_path / "m" / "trajectory.csv", delimiter=",", skiprows=1)[:, 0]
    assert times[0] == 0 and times[-1] == pytest.approx(0.2)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "trimlump", "run", str(CONFIGS / "invalid.yaml"),
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stderr.strip().splitlines()[-1])["error"] == "config"
