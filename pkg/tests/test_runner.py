"""End-to-end runner checks on a small box-room scenario."""

from __future__ import annotations

import dataclasses
import json
import math

import numpy as np
import pytest

from roomradar.antenna import load_pattern
from roomradar.channel import PathContribution
from roomradar.runner import (
    RunError,
    apply_antenna_gain,
    landmark_los,
    replay_detections,
    run_scenario,
)
from roomradar.scene import load_scene

from rooms import box_scene, file_scenario, write_flat_pattern


def make_path(loss_db=80.0, aoa=(0.0, 45.0)) -> PathContribution:
    return PathContribution(
        loss_db=loss_db,
        distance_m=6.0,
        range_m=3.0,
        velocity_ms=0.2,
        aoa_deg=aoa,
        phase_cycles=100.0,
        source="ray",
        faces=(2,),
    )


def test_run_writes_expected_artifacts(tmp_path):
    cfg = file_scenario(tmp_path, frames=2, save_frames=True, save_maps=True)
    result = run_scenario(cfg, quiet=True)
    names = sorted(p.name for p in result.out_dir.iterdir())
    assert "trajectory.csv" in names
    assert "manifest.json" in names
    assert "summary.json" in names
    for i in range(2):
        assert f"detections_{i:04d}.csv" in names
        assert f"frame_{i:04d}.bin" in names
        assert f"map_{i:04d}.bin" in names
        assert f"map_{i:04d}.csv" in names
        assert f"map_blurred_{i:04d}.bin" in names
        assert f"map_blurred_{i:04d}.csv" in names
    assert len(result.records) == 2
    summary = json.loads((result.out_dir / "summary.json").read_text())
    assert summary["frames"] == 2
    assert summary["detections_total"] == result.detections_total
    assert summary["rmse_m"] == pytest.approx(result.rmse)
    manifest = json.loads((result.out_dir / "manifest.json").read_text())
    assert manifest["config"]["seed"] == cfg.seed
    assert manifest["config"]["m_samples"] == 128


def test_rerun_is_bit_identical(tmp_path):
    cfg_a = file_scenario(tmp_path / "a", frames=3, save_frames=True, save_maps=True)
    cfg_b = dataclasses.replace(cfg_a, out_dir=tmp_path / "a" / "out2")
    res_a = run_scenario(cfg_a, quiet=True)
    res_b = run_scenario(cfg_b, quiet=True)
    files_a = sorted(p.name for p in res_a.out_dir.iterdir())
    files_b = sorted(p.name for p in res_b.out_dir.iterdir())
    assert files_a == files_b
    for name in files_a:
        if name == "manifest.json":
            continue  # echoes out_dir, which differs by construction
        assert (res_a.out_dir / name).read_bytes() == (
            res_b.out_dir / name
        ).read_bytes(), name


def test_seed_changes_trajectory(tmp_path):
    cfg_a = file_scenario(tmp_path / "a", frames=3)
    cfg_b = dataclasses.replace(cfg_a, seed=99, out_dir=tmp_path / "a" / "out2")
    res_a = run_scenario(cfg_a, quiet=True)
    res_b = run_scenario(cfg_b, quiet=True)
    assert (res_a.out_dir / "trajectory.csv").read_bytes() != (
        res_b.out_dir / "trajectory.csv"
    ).read_bytes()


def test_estimate_tracks_truth(tmp_path):
    cfg = file_scenario(tmp_path, frames=10)
    result = run_scenario(cfg, quiet=True)
    assert result.rmse < 0.3
    assert result.diverged_frames == 0
    # detections are present on every frame (three bright landmarks)
    assert all(len(r.features) >= 1 for r in result.records)


def test_error_names_failing_frame(tmp_path):
    # trajectory spans 10 s; frame 102 lands past its end
    cfg = file_scenario(tmp_path, frames=103)
    with pytest.raises(RunError, match="frame 101"):
        run_scenario(cfg, quiet=True)


def test_setup_error_names_setup(tmp_path):
    cfg = file_scenario(tmp_path)
    cfg = dataclasses.replace(cfg, pattern_path=tmp_path / "missing.txt")
    with pytest.raises(RunError, match="setup"):
        run_scenario(cfg, quiet=True)


def test_replay_matches_run(tmp_path):
    cfg = file_scenario(tmp_path, frames=5)
    res = run_scenario(cfg, quiet=True)
    replay_cfg = dataclasses.replace(cfg, out_dir=tmp_path / "replay")
    replay = replay_detections(replay_cfg, res.out_dir, quiet=True)
    assert (replay.out_dir / "trajectory.csv").read_bytes() == (
        res.out_dir / "trajectory.csv"
    ).read_bytes()
    assert replay.rmse == pytest.approx(res.rmse)


def test_replay_missing_detections_names_frame(tmp_path):
    cfg = file_scenario(tmp_path, frames=3)
    res = run_scenario(cfg, quiet=True)
    (res.out_dir / "detections_0002.csv").unlink()
    replay_cfg = dataclasses.replace(cfg, out_dir=tmp_path / "replay")
    with pytest.raises(RunError, match="frame 2"):
        replay_detections(replay_cfg, res.out_dir, quiet=True)


def test_apply_antenna_gain_shifts_loss(tmp_path):
    write_flat_pattern(tmp_path / "flat.txt")
    pattern = load_pattern(tmp_path / "flat.txt")
    # isotropic pattern: loss unchanged
    out = apply_antenna_gain([make_path(loss_db=80.0)], pattern)
    assert out[0].loss_db == pytest.approx(80.0)
    # -6 dB two-way at the path's arrival direction -> +6 dB loss
    pattern.gain_db[:] = -6.0
    out = apply_antenna_gain([make_path(loss_db=80.0)], pattern)
    assert out[0].loss_db == pytest.approx(86.0)
    # other fields pass through untouched
    assert out[0].range_m == 3.0
    assert out[0].faces == (2,)


def test_landmark_los_batched():
    scene = box_scene(hi=(4, 4, 3))
    los = landmark_los(scene)
    landmark = np.array([2.0, 2.0, 2.9])
    positions = np.array(
        [
            [1.0, 1.0, 0.5],  # inside, clear view
            [2.0, 2.0, 0.1],  # directly below, clear view
            [2.0, 2.0, -1.0],  # below the floor: floor blocks
        ]
    )
    visible = los(positions, landmark)
    assert visible.tolist() == [True, True, False]


def test_figures_rendered_when_enabled(tmp_path):
    cfg = file_scenario(tmp_path, frames=2, figures=True)
    result = run_scenario(cfg, quiet=True)
    for name in ("range_doppler.png", "trajectory.png", "range_profile.png"):
        assert (result.out_dir / name).is_file(), name


def test_run_without_reflectors_still_exports(tmp_path):
    # tracking degenerates to odometry-only prediction, but the radar
    # pipeline and exports must still work
    cfg = file_scenario(
        tmp_path,
        frames=2,
        reflectors=[],
    )
    result = run_scenario(cfg, quiet=True)
    assert (result.out_dir / "trajectory.csv").is_file()
    assert result.detections_total >= 0
    assert math.isfinite(result.rmse)


def test_scene_reload_consistency(tmp_path):
    # the files written by the fixture parse into the same geometry the
    # in-memory builder produces
    cfg = file_scenario(tmp_path)
    scene = load_scene(cfg.mesh_path, cfg.scenario_path)
    built = box_scene()
    assert scene.triangles.shape == built.triangles.shape
    assert np.isclose(
        np.sort(scene.triangles.reshape(-1)), np.sort(built.triangles.reshape(-1))
    ).all()
    assert len(scene.reflectors) == 3
    assert scene.trajectory is not None
