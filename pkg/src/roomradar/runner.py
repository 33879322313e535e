"""Scenario runner: trajectory sweep, synthesis, processing, tracking.

One frame goes through the whole chain:

    trajectory_state -> trace_paths (+ antenna weighting)
                     -> reflector contributions
                     -> synthesize_frame
                     -> range FFT -> Doppler FFT -> optional blur
                     -> noise floor + peak detection
                     -> particle filter predict/update/resample/estimate

and the run writes, per frame, a detections CSV (always) plus optional
raw frame and map exports, then a trajectory CSV, a manifest echoing
the full configuration, and a summary. Artifacts never contain wall
time or machine identity: identical config and seed give identical
bytes. Figures (when enabled) are rendered once per run from the last
frame plus the trajectory history.

Ray paths from the channel carry free-space-plus-reflection loss only;
the runner folds the antenna's two-way gain at each path's arrival
angles into the loss here. Reflector returns already include it via the
radar equation.

The particle filter consumes the radar's own detections: features that
are multipath returns rather than landmarks fall to the clutter floor.
Odometry between frames is derived from the true trajectory (planar
step length and heading increment), standing in for wheel odometry.
``replay_detections`` reruns just the tracking stage from previously
exported detection CSVs.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__, rng
from .antenna import AntennaPattern, load_pattern, two_way_gain
from .baseband import BasebandFrame, RadarConfig, synthesize_frame
from .channel import PathContribution, RayBundle, launch_directions, trace_paths
from .config import ScenarioConfig
from .dsp import (
    Feature,
    RangeDopplerMap,
    average_profiles,
    detect_peaks,
    doppler_fft,
    estimate_noise_floor,
    gaussian_blur,
    range_fft,
)
from .localization import (
    PoseEstimate,
    estimate,
    init_particles,
    predict,
    resample,
    update,
)
from .matio import (
    read_detections_csv,
    write_detections_csv,
    write_matrix,
    write_matrix_csv,
    write_trajectory_csv,
)
from .reflector import reflector_contribution, resolve_rcs
from .scene import Pose, Scene, load_scene, ray_hits, trajectory_state, wrap_angle

_LOS_EPS = 1e-6


class RunError(RuntimeError):
    """A module failure wrapped with the frame (or stage) it happened in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class FrameRecord:
    """What one frame contributed to the run outputs."""

    index: int
    t: float
    true_pose: tuple[float, float, float]
    estimated_pose: tuple[float, float, float]
    features: tuple[Feature, ...]
    contributions: int
    diverged: bool


@dataclass(frozen=True)
class RunResult:
    out_dir: Path
    records: tuple[FrameRecord, ...]
    rmse: float
    diverged_frames: int

    @property
    def detections_total(self) -> int:
        return sum(len(r.features) for r in self.records)


def landmark_los(scene: Scene) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Batched particle -> landmark visibility test against the mesh."""

    def los(positions: np.ndarray, landmark: np.ndarray) -> np.ndarray:
        offsets = landmark[None, :] - positions
        lengths = np.linalg.norm(offsets, axis=1)
        safe = np.maximum(lengths, 1e-12)
        t_hit, _ = ray_hits(scene, positions, offsets / safe[:, None], t_min=_LOS_EPS)
        return t_hit >= lengths - _LOS_EPS

    return los


def apply_antenna_gain(
    paths: list[PathContribution], pattern: AntennaPattern
) -> list[PathContribution]:
    """Fold the two-way gain at each arrival direction into the loss."""
    weighted = []
    for path in paths:
        gain = two_way_gain(pattern, *path.aoa_deg)
        weighted.append(
            dataclasses.replace(path, loss_db=path.loss_db - 10.0 * math.log10(gain))
        )
    return weighted


def frame_contributions(
    scene: Scene,
    pose: Pose,
    pattern: AntennaPattern,
    radar_cfg: RadarConfig,
    bundle: RayBundle,
    max_bounces: int,
    rcs_models: dict,
) -> list[PathContribution]:
    """Antenna-weighted ray paths plus visible reflector returns."""
    contributions: list[PathContribution] = []
    if max_bounces > 0 and len(scene.triangles):
        paths = trace_paths(scene, pose, bundle, max_bounces, radar_cfg.f0)
        contributions.extend(apply_antenna_gain(paths, pattern))
    for reflector in scene.reflectors:
        echo = reflector_contribution(
            pose, reflector, scene, pattern, radar_cfg, rcs_models[reflector.id]
        )
        if echo is not None:
            contributions.append(echo)
    return contributions


def process_frame(
    frame: BasebandFrame, cfg: ScenarioConfig, radar_cfg: RadarConfig
) -> tuple[RangeDopplerMap, RangeDopplerMap, list[Feature]]:
    """FFTs, optional blur, detection. Returns (raw map, detection map, features)."""
    s, _ = range_fft(frame, cfg.range_window)
    raw = doppler_fft(s, cfg.doppler_window, radar_cfg)
    detection_map = gaussian_blur(raw) if cfg.blur else raw
    floor = estimate_noise_floor(detection_map.values)
    features = detect_peaks(detection_map, floor, cfg.detection_margin_db)
    return raw, detection_map, features


class Tracker:
    """Particle-filter state threaded across frames.

    Owns the three PF random streams so stepping stays reproducible no
    matter what the caller does between frames. The first step skips
    prediction (no odometry yet) and takes the speed from the trajectory
    itself; later steps derive odometry from consecutive true poses.
    """

    def __init__(self, cfg: ScenarioConfig, scene: Scene, start: Pose):
        self.cfg = cfg
        self.landmarks = (
            np.stack([r.position for r in scene.reflectors])
            if scene.reflectors
            else None
        )
        self.los = landmark_los(scene) if len(scene.triangles) else None
        self.radar_height = float(start.position[2])
        self.particles = init_particles(
            cfg.particles,
            (float(start.position[0]), float(start.position[1]), start.heading),
            (cfg.init_std_xy, cfg.init_std_xy, cfg.init_std_heading),
            rng.stream(cfg.seed, rng.DOMAIN_PF_INIT),
        )
        self._predict_gen = rng.stream(cfg.seed, rng.DOMAIN_PF_PREDICT)
        self._resample_gen = rng.stream(cfg.seed, rng.DOMAIN_PF_RESAMPLE)
        self._prev_pose: Pose | None = None
        self.diverged_frames = 0

    def step(self, pose: Pose, features: Sequence[Feature]) -> PoseEstimate:
        cfg = self.cfg
        if self._prev_pose is not None:
            delta = pose.position[:2] - self._prev_pose.position[:2]
            d_forward = float(np.linalg.norm(delta))
            d_heading = wrap_angle(pose.heading - self._prev_pose.heading)
            speed = d_forward / cfg.frame_period
            self.particles = predict(
                self.particles,
                (d_forward, d_heading),
                (cfg.noise_xy, cfg.noise_xy, cfg.noise_heading),
                self._predict_gen,
            )
        else:
            speed = float(np.linalg.norm(pose.velocity[:2]))
        if self.landmarks is not None:
            self.particles = update(
                self.particles,
                features,
                self.landmarks,
                self.radar_height,
                sigma_r=cfg.pf_sigma_r,
                sigma_v=cfg.pf_sigma_v,
                speed=speed,
                clutter_floor=cfg.clutter_floor,
                los=self.los,
            )
            if self.particles.diverged:
                self.diverged_frames += 1
            self.particles = resample(self.particles, self._resample_gen)
        self._prev_pose = pose
        return estimate(self.particles)


def _config_echo(cfg: ScenarioConfig) -> dict:
    echo = dataclasses.asdict(cfg)
    for key, value in echo.items():
        if isinstance(value, Path):
            echo[key] = str(value)
    return echo


def _write_manifest(cfg: ScenarioConfig, out_dir: Path) -> None:
    import scipy

    manifest = {
        "config": _config_echo(cfg),
        "package": {"name": "roomradar", "version": __version__},
        "versions": {"numpy": np.__version__, "scipy": scipy.__version__},
    }
    text = json.dumps(manifest, indent=2, sort_keys=True)
    (out_dir / "manifest.json").write_text(text + "\n")


def _finish(
    out_dir: Path,
    cfg: ScenarioConfig,
    records: list[FrameRecord],
    trajectory_rows: list[tuple],
    diverged_frames: int,
) -> RunResult:
    rmse = float(trajectory_rows[-1][6]) if trajectory_rows else 0.0
    write_trajectory_csv(out_dir / "trajectory.csv", trajectory_rows)
    _write_manifest(cfg, out_dir)
    summary = {
        "frames": len(records),
        "detections_total": sum(len(r.features) for r in records),
        "rmse_m": rmse,
        "diverged_frames": diverged_frames,
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    return RunResult(
        out_dir=out_dir,
        records=tuple(records),
        rmse=rmse,
        diverged_frames=diverged_frames,
    )


def run_scenario(cfg: ScenarioConfig, quiet: bool = False) -> RunResult:
    try:
        scene = load_scene(cfg.mesh_path, cfg.scenario_path)
        pattern = load_pattern(cfg.pattern_path)
        radar_cfg = cfg.radar_config()
        if scene.trajectory is None:
            raise ValueError("scenario defines no trajectory waypoints")
        rcs_models = {
            r.id: resolve_rcs(r.rcs_source, radar_cfg) for r in scene.reflectors
        }
        bundle = launch_directions(cfg.ray_subdivision)
        start = trajectory_state(scene.trajectory, scene.trajectory.times[0])
        tracker = Tracker(cfg, scene, start)
    except Exception as exc:
        raise RunError("setup", exc) from exc

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records: list[FrameRecord] = []
    errors: list[float] = []
    trajectory_rows: list[tuple] = []
    last_maps: tuple[RangeDopplerMap, RangeDopplerMap] | None = None
    last_frame: BasebandFrame | None = None

    for index in range(cfg.frames):
        t = float(scene.trajectory.times[0]) + index * cfg.frame_period
        try:
            pose = trajectory_state(scene.trajectory, t)
            contributions = frame_contributions(
                scene, pose, pattern, radar_cfg, bundle, cfg.max_bounces, rcs_models
            )
            frame = synthesize_frame(
                contributions, radar_cfg, cfg.seed, frame_index=index, timestamp=t
            )
            raw_map, detection_map, features = process_frame(frame, cfg, radar_cfg)
            pose_est = tracker.step(pose, features)

            write_detections_csv(out_dir / f"detections_{index:04d}.csv", features)
            if cfg.save_frames:
                write_matrix(
                    out_dir / f"frame_{index:04d}.bin", frame.samples, radar_cfg
                )
            if cfg.save_maps:
                write_matrix(
                    out_dir / f"map_{index:04d}.bin", raw_map.values, radar_cfg
                )
                write_matrix_csv(
                    out_dir / f"map_{index:04d}.csv", raw_map.values, radar_cfg
                )
                if cfg.blur:
                    write_matrix(
                        out_dir / f"map_blurred_{index:04d}.bin",
                        detection_map.values,
                        radar_cfg,
                    )
                    write_matrix_csv(
                        out_dir / f"map_blurred_{index:04d}.csv",
                        detection_map.values,
                        radar_cfg,
                    )
        except Exception as exc:
            raise RunError(f"frame {index}", exc) from exc

        err = math.hypot(
            pose_est.x - float(pose.position[0]), pose_est.y - float(pose.position[1])
        )
        errors.append(err)
        running = float(np.mean(errors))
        trajectory_rows.append(
            (
                t,
                float(pose.position[0]),
                float(pose.position[1]),
                pose_est.x,
                pose_est.y,
                pose_est.heading,
                running,
            )
        )
        records.append(
            FrameRecord(
                index=index,
                t=t,
                true_pose=(
                    float(pose.position[0]),
                    float(pose.position[1]),
                    pose.heading,
                ),
                estimated_pose=(pose_est.x, pose_est.y, pose_est.heading),
                features=tuple(features),
                contributions=len(contributions),
                diverged=tracker.particles.diverged,
            )
        )
        last_maps = (raw_map, detection_map)
        last_frame = frame
        if not quiet:
            print(
                f"frame {index:4d} t={t:7.3f}s contributions={len(contributions):3d} "
                f"features={len(features):2d} err={err:6.3f}m"
            )

    try:
        result = _finish(
            out_dir, cfg, records, trajectory_rows, tracker.diverged_frames
        )
        if cfg.figures and last_maps is not None and last_frame is not None:
            from . import report

            _, detection_map = last_maps
            report.save_map_figure(
                out_dir / "range_doppler.png",
                detection_map,
                records[-1].features,
                title=f"frame {len(records) - 1}",
            )
            report.save_trajectory_figure(out_dir / "trajectory.png", scene, records)
            profile = average_profiles(
                range_fft(last_frame, cfg.range_window)[1],
                cfg.average_count or radar_cfg.n_chirps,
                radar_cfg,
            )
            report.save_profile_figure(out_dir / "range_profile.png", profile)
    except Exception as exc:
        raise RunError("export", exc) from exc

    if not quiet:
        print(
            f"done: {cfg.frames} frames, rmse={result.rmse:.3f}m, "
            f"artifacts in {out_dir}"
        )
    return result


def replay_detections(
    cfg: ScenarioConfig, detections_dir: str | Path, quiet: bool = False
) -> RunResult:
    """Rerun only the tracking stage from exported detection CSVs.

    Reads ``detections_NNNN.csv`` for each frame index from
    ``detections_dir`` and writes a fresh trajectory CSV, manifest and
    summary to ``cfg.out_dir``. Synthesis and DSP settings in the config
    are ignored; the detections are taken as given.
    """
    detections_dir = Path(detections_dir)
    try:
        scene = load_scene(cfg.mesh_path, cfg.scenario_path)
        if scene.trajectory is None:
            raise ValueError("scenario defines no trajectory waypoints")
        start = trajectory_state(scene.trajectory, scene.trajectory.times[0])
        tracker = Tracker(cfg, scene, start)
    except Exception as exc:
        raise RunError("setup", exc) from exc

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records: list[FrameRecord] = []
    errors: list[float] = []
    trajectory_rows: list[tuple] = []
    for index in range(cfg.frames):
        t = float(scene.trajectory.times[0]) + index * cfg.frame_period
        try:
            pose = trajectory_state(scene.trajectory, t)
            features = read_detections_csv(
                detections_dir / f"detections_{index:04d}.csv"
            )
            pose_est = tracker.step(pose, features)
        except Exception as exc:
            raise RunError(f"frame {index}", exc) from exc
        err = math.hypot(
            pose_est.x - float(pose.position[0]), pose_est.y - float(pose.position[1])
        )
        errors.append(err)
        trajectory_rows.append(
            (
                t,
                float(pose.position[0]),
                float(pose.position[1]),
                pose_est.x,
                pose_est.y,
                pose_est.heading,
                float(np.mean(errors)),
            )
        )
        records.append(
            FrameRecord(
                index=index,
                t=t,
                true_pose=(
                    float(pose.position[0]),
                    float(pose.position[1]),
                    pose.heading,
                ),
                estimated_pose=(pose_est.x, pose_est.y, pose_est.heading),
                features=tuple(features),
                contributions=0,
                diverged=tracker.particles.diverged,
            )
        )
        if not quiet:
            print(
                f"frame {index:4d} t={t:7.3f}s features={len(features):2d} "
                f"err={err:6.3f}m"
            )

    try:
        result = _finish(
            out_dir, cfg, records, trajectory_rows, tracker.diverged_frames
        )
        if cfg.figures and records:
            from . import report

            report.save_trajectory_figure(out_dir / "trajectory.png", scene, records)
    except Exception as exc:
        raise RunError("export", exc) from exc
    if not quiet:
        print(f"replayed {cfg.frames} frames, rmse={result.rmse:.3f}m")
    return result
