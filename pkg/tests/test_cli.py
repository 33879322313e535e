"""CLI subcommands, flags and exit codes."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from roomradar.cli import main

from rooms import write_box_mesh, write_flat_pattern, write_scenario_file

CONFIG = """\
[scene]
mesh = "room.mesh"
scenario = "scenario.txt"

[antenna]
pattern = "pattern.txt"

[radar]
m_samples = 128
n_chirps = 64

[run]
frames = 2
frame_period = "100 ms"
seed = 5
max_bounces = 1
ray_subdivision = 2
save_frames = true
figures = false
out = "{out}"

[pf]
particles = 200
"""


def write_inputs(base: Path) -> Path:
    base.mkdir(parents=True, exist_ok=True)
    write_box_mesh(base / "room.mesh")
    write_scenario_file(
        base / "scenario.txt",
        reflectors=[
            (1, (0.6, 0.8, 2.9), "trihedral:0.15"),
            (2, (3.4, 1.3, 2.9), "trihedral:0.15"),
        ],
        waypoints=[
            (0.0, (1.0, 1.0, 0.5), 0.0),
            (10.0, (3.0, 1.0, 0.5), 0.0),
        ],
    )
    write_flat_pattern(base / "pattern.txt")
    config = base / "config.toml"
    config.write_text(CONFIG.format(out=base / "out"))
    return config


def test_validate_ok(tmp_path, capsys):
    config = write_inputs(tmp_path)
    assert main(["validate", "--config", str(config)]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_validate_reports_problems(tmp_path, capsys):
    config = write_inputs(tmp_path)
    (tmp_path / "pattern.txt").unlink()
    assert main(["validate", "--config", str(config)]) == 2
    out = capsys.readouterr().out
    assert "pattern" in out
    assert "1 problem(s)" in out


def test_missing_config_file_is_config_error(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.toml")]) == 2
    assert "config:" in capsys.readouterr().err


def test_malformed_toml_is_config_error(tmp_path, capsys):
    config = tmp_path / "bad.toml"
    config.write_text("[scene\nmesh =")
    assert main(["validate", "--config", str(config)]) == 2
    assert "config:" in capsys.readouterr().err


def test_run_writes_artifacts(tmp_path):
    config = write_inputs(tmp_path)
    assert main(["run", "--config", str(config), "--quiet"]) == 0
    out = tmp_path / "out"
    for name in (
        "detections_0000.csv",
        "detections_0001.csv",
        "frame_0000.bin",
        "trajectory.csv",
        "manifest.json",
        "summary.json",
    ):
        assert (out / name).is_file(), name


def test_run_overrides(tmp_path):
    config = write_inputs(tmp_path)
    out2 = tmp_path / "elsewhere"
    code = main(
        [
            "run", "--config", str(config),
            "--frames", "1",
            "--seed", "42",
            "--out", str(out2),
            "--quiet",
        ]
    )
    assert code == 0
    manifest = json.loads((out2 / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 42
    assert manifest["config"]["frames"] == 1
    assert not (out2 / "detections_0001.csv").exists()


def test_run_runtime_error_exit_3(tmp_path, capsys):
    config = write_inputs(tmp_path)
    # 200 frames overrun the 10 s trajectory -> runtime failure, not config
    assert main(["run", "--config", str(config), "--frames", "200", "--quiet"]) == 3
    err = capsys.readouterr().err
    assert "frame 101" in err


def test_trace_dump_lists_paths(tmp_path, capsys):
    config = write_inputs(tmp_path)
    assert main(["trace-dump", "--config", str(config), "--frames", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# frame 0 ")
    body = [line for line in lines if not line.startswith("#")]
    assert body, "expected at least one traced path"
    assert all("loss_db=" in line and "range_m=" in line for line in body)
    # first-order paths only in a convex room with max_bounces = 1
    assert all("order=1" in line for line in body)


def test_dsp_only_matches_run_detections(tmp_path):
    config = write_inputs(tmp_path)
    assert main(["run", "--config", str(config), "--quiet"]) == 0
    out = tmp_path / "out"
    dsp_out = tmp_path / "dsp"
    code = main(
        [
            "dsp-only", "--config", str(config),
            "--out", str(dsp_out), "--quiet",
            str(out / "frame_0001.bin"),
        ]
    )
    assert code == 0
    assert (dsp_out / "frame_0001_detections.csv").read_bytes() == (
        out / "detections_0001.csv"
    ).read_bytes()
    assert (dsp_out / "frame_0001_map.csv").is_file()


def test_dsp_only_rejects_mismatched_frame(tmp_path, capsys):
    config = write_inputs(tmp_path)
    assert main(["run", "--config", str(config), "--quiet"]) == 0
    other = config.read_text().replace("n_chirps = 64", "n_chirps = 32")
    config2 = tmp_path / "other.toml"
    config2.write_text(other)
    code = main(
        [
            "dsp-only", "--config", str(config2), "--quiet",
            str(tmp_path / "out" / "frame_0000.bin"),
        ]
    )
    assert code == 2
    assert "does not match config" in capsys.readouterr().err


def test_pf_only_reproduces_run_trajectory(tmp_path):
    config = write_inputs(tmp_path)
    assert main(["run", "--config", str(config), "--quiet"]) == 0
    out = tmp_path / "out"
    pf_out = tmp_path / "pf"
    code = main(
        [
            "pf-only", "--config", str(config),
            "--out", str(pf_out), "--quiet",
            str(out),
        ]
    )
    assert code == 0
    assert (pf_out / "trajectory.csv").read_bytes() == (
        out / "trajectory.csv"
    ).read_bytes()


def test_pf_only_missing_detections_exit_3(tmp_path, capsys):
    config = write_inputs(tmp_path)
    code = main(
        ["pf-only", "--config", str(config), "--quiet", str(tmp_path / "empty")]
    )
    assert code == 3
    assert "frame 0" in capsys.readouterr().err


def test_rejects_unknown_subcommand(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate", "--config", "x"])
    assert exc.value.code == 2


def test_requires_config_flag():
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == 2
