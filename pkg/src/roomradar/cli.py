"""Command-line front end.

Subcommands:

    run         full pipeline: synthesize, process, localize, export
    validate    check a config and its referenced files, print problems
    trace-dump  print ray-traced propagation paths, one line per path
    dsp-only    process a previously saved baseband frame file
    pf-only     replay exported detection CSVs through the tracker

Exit codes: 0 success, 2 configuration problem, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config, validate_config, with_overrides
from .runner import RunError, replay_detections, run_scenario

_META_REL_TOL = 1e-9


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", required=True, type=Path, metavar="PATH",
        help="scenario config file (TOML)",
    )
    common.add_argument(
        "--seed", type=int, default=None, metavar="N", help="override master seed"
    )
    common.add_argument(
        "--out", type=Path, default=None, metavar="DIR",
        help="override output directory",
    )
    common.add_argument(
        "--frames", type=int, default=None, metavar="K",
        help="override number of frames",
    )
    common.add_argument(
        "--quiet", action="store_true", help="suppress per-frame progress output"
    )

    parser = argparse.ArgumentParser(
        prog="roomradar",
        description="Chirp-sequence radar room simulator and localization pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the full scenario")
    sub.add_parser("validate", parents=[common], help="check config and inputs")
    sub.add_parser(
        "trace-dump", parents=[common],
        help="print ray-traced paths per frame, no synthesis",
    )
    dsp = sub.add_parser(
        "dsp-only", parents=[common], help="process a saved baseband frame file"
    )
    dsp.add_argument("frame_file", type=Path, help="frame matrix written by a run")
    pf = sub.add_parser(
        "pf-only", parents=[common], help="replay detection CSVs through the tracker"
    )
    pf.add_argument(
        "detections_dir", type=Path,
        help="directory holding detections_NNNN.csv files",
    )
    return parser


def _load(args: argparse.Namespace):
    cfg = load_config(args.config)
    return with_overrides(cfg, seed=args.seed, frames=args.frames, out_dir=args.out)


def _validated(args: argparse.Namespace):
    cfg = _load(args)
    problems = validate_config(cfg)
    if problems:
        for problem in problems:
            print(f"config: {problem}", file=sys.stderr)
        return None
    return cfg


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _validated(args)
    if cfg is None:
        return 2
    run_scenario(cfg, quiet=args.quiet)
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    problems = validate_config(cfg)
    for problem in problems:
        print(problem)
    if problems:
        print(f"{len(problems)} problem(s)")
        return 2
    print("ok")
    return 0


def _cmd_trace_dump(args: argparse.Namespace) -> int:
    from .channel import launch_directions, trace_paths
    from .scene import load_scene, trajectory_state

    cfg = _validated(args)
    if cfg is None:
        return 2
    try:
        scene = load_scene(cfg.mesh_path, cfg.scenario_path)
        if scene.trajectory is None:
            raise ValueError("scenario defines no trajectory waypoints")
        bundle = launch_directions(cfg.ray_subdivision)
        radar_cfg = cfg.radar_config()
        for index in range(cfg.frames):
            t = float(scene.trajectory.times[0]) + index * cfg.frame_period
            pose = trajectory_state(scene.trajectory, t)
            paths = trace_paths(scene, pose, bundle, cfg.max_bounces, radar_cfg.f0)
            print(
                f"# frame {index} t={t!r} pos=({float(pose.position[0])!r}, "
                f"{float(pose.position[1])!r}, {float(pose.position[2])!r}) "
                f"heading={pose.heading!r} paths={len(paths)}"
            )
            for path in paths:
                faces = ",".join(str(f) for f in path.faces)
                print(
                    f"order={len(path.faces)} loss_db={path.loss_db!r} "
                    f"range_m={path.range_m!r} velocity_ms={path.velocity_ms!r} "
                    f"az_deg={path.aoa_deg[0]!r} el_deg={path.aoa_deg[1]!r} "
                    f"phase_cycles={path.phase_cycles!r} faces={faces}"
                )
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


def _meta_matches(meta, radar_cfg) -> list[str]:
    pairs = [
        ("rows", meta.rows, radar_cfg.m_samples),
        ("cols", meta.cols, radar_cfg.n_chirps),
        ("t_sample", meta.t_sample, radar_cfg.t_sample),
        ("t_repeat", meta.t_repeat, radar_cfg.t_repeat),
        ("f0", meta.f0, radar_cfg.f0),
        ("bandwidth", meta.bandwidth, radar_cfg.bandwidth),
    ]
    problems = []
    for name, got, want in pairs:
        if abs(got - want) > _META_REL_TOL * max(abs(want), 1.0):
            problems.append(f"frame file {name}={got} does not match config {want}")
    return problems


def _cmd_dsp_only(args: argparse.Namespace) -> int:
    from .baseband import BasebandFrame
    from .matio import read_matrix, write_detections_csv, write_matrix_csv
    from .runner import process_frame

    cfg = _validated(args)
    if cfg is None:
        return 2
    try:
        samples, meta = read_matrix(args.frame_file)
    except (OSError, ValueError) as exc:
        print(f"config: {exc}", file=sys.stderr)
        return 2
    radar_cfg = cfg.radar_config()
    mismatches = _meta_matches(meta, radar_cfg)
    if mismatches:
        for problem in mismatches:
            print(f"config: {problem}", file=sys.stderr)
        return 2
    try:
        frame = BasebandFrame(samples=samples, config=radar_cfg)
        raw_map, detection_map, features = process_frame(frame, cfg, radar_cfg)
        out_dir = Path(cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = args.frame_file.stem
        write_detections_csv(out_dir / f"{stem}_detections.csv", features)
        write_matrix_csv(out_dir / f"{stem}_map.csv", detection_map.values, radar_cfg)
        if cfg.figures:
            from . import report

            report.save_map_figure(
                out_dir / f"{stem}_map.png", detection_map, features, title=stem
            )
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if not args.quiet:
        print(f"{len(features)} detections, artifacts in {cfg.out_dir}")
    return 0


def _cmd_pf_only(args: argparse.Namespace) -> int:
    cfg = _validated(args)
    if cfg is None:
        return 2
    replay_detections(cfg, args.detections_dir, quiet=args.quiet)
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "validate": _cmd_validate,
    "trace-dump": _cmd_trace_dump,
    "dsp-only": _cmd_dsp_only,
    "pf-only": _cmd_pf_only,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return 2
    except RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
