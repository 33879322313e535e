"""Scenario configuration: TOML with explicit unit suffixes.

Every physical quantity in the file is a string of the form
"<number> <unit>" ("59 GHz", "100 us", "0.1 m/s"); bare numbers are
reserved for dimensionless values (counts, seeds, floors). Parsing
converts to SI on the spot, so the rest of the package never sees a
unit again. File paths are resolved relative to the config file's
directory; the output directory is resolved against the working
directory at run time.

Sections:

    [scene]    mesh, scenario
    [antenna]  pattern
    [radar]    f0, bandwidth, t_chirp, m_samples, n_chirps,
               t_sample/t_repeat (optional), tx_power, noise_figure,
               resistance
    [run]      frames, frame_period, seed, max_bounces,
               ray_subdivision, save_frames, save_maps, figures, out
    [dsp]      range_window, doppler_window, blur, detection_margin,
               average_count (0 = all chirps)
    [pf]       particles, sigma_r, sigma_v, clutter_floor,
               init_std_xy, init_std_heading, noise_xy, noise_heading

load_config raises ConfigError on malformed input; validate_config
never raises and instead returns every problem it can find, so a CLI
can print them all at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .baseband import RadarConfig
from .dsp import DOPPLER_WINDOWS, RANGE_WINDOWS

_UNITS: dict[str, dict[str, float]] = {
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9},
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "km": 1e3},
    "speed": {"m/s": 1.0, "cm/s": 1e-2, "mm/s": 1e-3},
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "µW": 1e-6},
    "level": {"dB": 1.0},
    "resistance": {"ohm": 1.0, "kohm": 1e3},
    "angle": {"rad": 1.0, "mrad": 1e-3, "deg": math.pi / 180.0},
}


class ConfigError(ValueError):
    """The config file is missing, malformed, or mistyped."""


def parse_quantity(text: object, family: str, where: str = "quantity") -> float:
    """'<number> <unit>' -> SI float; the unit must belong to `family`."""
    units = _UNITS[family]
    if not isinstance(text, str):
        raise ConfigError(
            f"{where}: expected a string like '1 {next(iter(units))}', got {text!r}"
        )
    parts = text.split()
    if len(parts) != 2:
        raise ConfigError(f"{where}: expected '<number> <unit>', got {text!r}")
    try:
        value = float(parts[0])
    except ValueError:
        raise ConfigError(f"{where}: bad number in {text!r}") from None
    if parts[1] not in units:
        raise ConfigError(
            f"{where}: unit {parts[1]!r} is not a {family} unit "
            f"(one of {sorted(units)})"
        )
    return value * units[parts[1]]


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a run needs, in SI units and resolved paths."""

    mesh_path: Path
    scenario_path: Path
    pattern_path: Path
    # radar (kept loose here; radar_config() applies the invariants)
    f0: float = 59e9
    bandwidth: float = 2e9
    t_chirp: float = 100e-6
    m_samples: int = 256
    n_chirps: int = 64
    t_sample: float = 0.0
    t_repeat: float = 0.0
    tx_power: float = 1e-3
    noise_figure_db: float = 10.0
    resistance: float = 50.0
    # run
    frames: int = 1
    frame_period: float = 0.1
    seed: int = 1
    max_bounces: int = 2
    ray_subdivision: int = 4
    save_frames: bool = False
    save_maps: bool = False
    figures: bool = True
    out_dir: Path = field(default_factory=lambda: Path("roomradar-out"))
    # dsp
    range_window: str = "hamming"
    doppler_window: str = "hamming"
    blur: bool = True
    detection_margin_db: float = 12.0
    average_count: int = 0  # 0 = all chirps
    # pf
    particles: int = 2000
    pf_sigma_r: float = 0.1
    pf_sigma_v: float = 0.1
    clutter_floor: float = 1e-3
    init_std_xy: float = 0.3
    init_std_heading: float = 0.1
    noise_xy: float = 0.02
    noise_heading: float = 0.01

    def radar_config(self) -> RadarConfig:
        return RadarConfig(
            f0=self.f0,
            bandwidth=self.bandwidth,
            t_chirp=self.t_chirp,
            m_samples=self.m_samples,
            n_chirps=self.n_chirps,
            t_sample=self.t_sample,
            t_repeat=self.t_repeat,
            tx_power=self.tx_power,
            noise_figure_db=self.noise_figure_db,
            resistance=self.resistance,
        )


def _take(table: dict, section: str, known: dict[str, object]) -> None:
    unknown = set(table) - set(known)
    if unknown:
        raise ConfigError(f"[{section}] has unknown keys: {sorted(unknown)}")


def _typed(table: dict, section: str, key: str, kind: type, default):
    if key not in table:
        return default
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise ConfigError(f"[{section}] {key}: expected {kind.__name__}, got {value!r}")
    return value


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no such config file: {path}")
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    base = path.parent

    def section(name: str) -> dict:
        table = raw.get(name, {})
        if not isinstance(table, dict):
            raise ConfigError(f"[{name}] must be a table")
        return table

    unknown_sections = set(raw) - {"scene", "antenna", "radar", "run", "dsp", "pf"}
    if unknown_sections:
        raise ConfigError(f"unknown config sections: {sorted(unknown_sections)}")

    scene = section("scene")
    for key in ("mesh", "scenario"):
        if key not in scene:
            raise ConfigError(f"[scene] {key} is required")
    antenna = section("antenna")
    if "pattern" not in antenna:
        raise ConfigError("[antenna] pattern is required")

    radar = section("radar")
    run = section("run")
    dsp = section("dsp")
    pf = section("pf")
    _take(scene, "scene", {"mesh": 0, "scenario": 0})
    _take(antenna, "antenna", {"pattern": 0})
    _take(
        radar,
        "radar",
        dict.fromkeys(
            (
                "f0",
                "bandwidth",
                "t_chirp",
                "m_samples",
                "n_chirps",
                "t_sample",
                "t_repeat",
                "tx_power",
                "noise_figure",
                "resistance",
            )
        ),
    )
    _take(
        run,
        "run",
        dict.fromkeys(
            (
                "frames",
                "frame_period",
                "seed",
                "max_bounces",
                "ray_subdivision",
                "save_frames",
                "save_maps",
                "figures",
                "out",
            )
        ),
    )
    _take(
        dsp,
        "dsp",
        dict.fromkeys(
            (
                "range_window",
                "doppler_window",
                "blur",
                "detection_margin",
                "average_count",
            )
        ),
    )
    _take(
        pf,
        "pf",
        dict.fromkeys(
            (
                "particles",
                "sigma_r",
                "sigma_v",
                "clutter_floor",
                "init_std_xy",
                "init_std_heading",
                "noise_xy",
                "noise_heading",
            )
        ),
    )

    def quantity(table: dict, sec: str, key: str, family: str, default: float) -> float:
        if key not in table:
            return default
        return parse_quantity(table[key], family, where=f"[{sec}] {key}")

    defaults = ScenarioConfig(
        mesh_path=Path(), scenario_path=Path(), pattern_path=Path()
    )
    return ScenarioConfig(
        mesh_path=(base / str(scene["mesh"])).resolve(),
        scenario_path=(base / str(scene["scenario"])).resolve(),
        pattern_path=(base / str(antenna["pattern"])).resolve(),
        f0=quantity(radar, "radar", "f0", "frequency", defaults.f0),
        bandwidth=quantity(radar, "radar", "bandwidth", "frequency", defaults.bandwidth),
        t_chirp=quantity(radar, "radar", "t_chirp", "time", defaults.t_chirp),
        m_samples=_typed(radar, "radar", "m_samples", int, defaults.m_samples),
        n_chirps=_typed(radar, "radar", "n_chirps", int, defaults.n_chirps),
        t_sample=quantity(radar, "radar", "t_sample", "time", defaults.t_sample),
        t_repeat=quantity(radar, "radar", "t_repeat", "time", defaults.t_repeat),
        tx_power=quantity(radar, "radar", "tx_power", "power", defaults.tx_power),
        noise_figure_db=quantity(
            radar, "radar", "noise_figure", "level", defaults.noise_figure_db
        ),
        resistance=quantity(
            radar, "radar", "resistance", "resistance", defaults.resistance
        ),
        frames=_typed(run, "run", "frames", int, defaults.frames),
        frame_period=quantity(
            run, "run", "frame_period", "time", defaults.frame_period
        ),
        seed=_typed(run, "run", "seed", int, defaults.seed),
        max_bounces=_typed(run, "run", "max_bounces", int, defaults.max_bounces),
        ray_subdivision=_typed(
            run, "run", "ray_subdivision", int, defaults.ray_subdivision
        ),
        save_frames=_typed(run, "run", "save_frames", bool, defaults.save_frames),
        save_maps=_typed(run, "run", "save_maps", bool, defaults.save_maps),
        figures=_typed(run, "run", "figures", bool, defaults.figures),
        out_dir=Path(_typed(run, "run", "out", str, str(defaults.out_dir))),
        range_window=_typed(
            dsp, "dsp", "range_window", str, defaults.range_window
        ),
        doppler_window=_typed(
            dsp, "dsp", "doppler_window", str, defaults.doppler_window
        ),
        blur=_typed(dsp, "dsp", "blur", bool, defaults.blur),
        detection_margin_db=quantity(
            dsp, "dsp", "detection_margin", "level", defaults.detection_margin_db
        ),
        average_count=_typed(
            dsp, "dsp", "average_count", int, defaults.average_count
        ),
        particles=_typed(pf, "pf", "particles", int, defaults.particles),
        pf_sigma_r=quantity(pf, "pf", "sigma_r", "length", defaults.pf_sigma_r),
        pf_sigma_v=quantity(pf, "pf", "sigma_v", "speed", defaults.pf_sigma_v),
        clutter_floor=_typed(
            pf, "pf", "clutter_floor", float, defaults.clutter_floor
        ),
        init_std_xy=quantity(pf, "pf", "init_std_xy", "length", defaults.init_std_xy),
        init_std_heading=quantity(
            pf, "pf", "init_std_heading", "angle", defaults.init_std_heading
        ),
        noise_xy=quantity(pf, "pf", "noise_xy", "length", defaults.noise_xy),
        noise_heading=quantity(
            pf, "pf", "noise_heading", "angle", defaults.noise_heading
        ),
    )


def with_overrides(
    cfg: ScenarioConfig,
    seed: int | None = None,
    frames: int | None = None,
    out_dir: str | Path | None = None,
) -> ScenarioConfig:
    """CLI-style overrides on top of a loaded config."""
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if frames is not None:
        changes["frames"] = frames
    if out_dir is not None:
        changes["out_dir"] = Path(out_dir)
    return replace(cfg, **changes) if changes else cfg


def validate_config(cfg: ScenarioConfig) -> list[str]:
    """All problems found, empty iff the scenario can run."""
    problems: list[str] = []
    for label, p in (
        ("scene mesh", cfg.mesh_path),
        ("scenario", cfg.scenario_path),
        ("antenna pattern", cfg.pattern_path),
    ):
        if not Path(p).is_file():
            problems.append(f"{label} file does not exist: {p}")
    try:
        cfg.radar_config()
    except ValueError as exc:
        problems.append(f"radar parameters: {exc}")
    if cfg.frames < 1:
        problems.append(f"frames must be >= 1, got {cfg.frames}")
    if cfg.frame_period <= 0:
        problems.append(f"frame_period must be positive, got {cfg.frame_period}")
    if cfg.seed < 0:
        problems.append(f"seed must be nonnegative, got {cfg.seed}")
    if cfg.max_bounces < 0:
        problems.append(f"max_bounces must be >= 0, got {cfg.max_bounces}")
    if not 0 <= cfg.ray_subdivision <= 7:
        problems.append(
            f"ray_subdivision must be in [0, 7], got {cfg.ray_subdivision}"
        )
    if cfg.range_window not in RANGE_WINDOWS:
        problems.append(
            f"range_window must be one of {RANGE_WINDOWS}, got {cfg.range_window!r}"
        )
    if cfg.doppler_window not in DOPPLER_WINDOWS:
        problems.append(
            f"doppler_window must be one of {DOPPLER_WINDOWS}, "
            f"got {cfg.doppler_window!r}"
        )
    if cfg.detection_margin_db < 0:
        problems.append(
            f"detection_margin must be >= 0 dB, got {cfg.detection_margin_db}"
        )
    if not 0 <= cfg.average_count <= cfg.n_chirps:
        problems.append(
            f"average_count must be in [0, {cfg.n_chirps}], got {cfg.average_count}"
        )
    if cfg.particles < 1:
        problems.append(f"particles must be >= 1, got {cfg.particles}")
    for name in ("pf_sigma_r", "pf_sigma_v", "clutter_floor"):
        if getattr(cfg, name) <= 0:
            problems.append(f"{name} must be positive, got {getattr(cfg, name)}")
    for name in ("init_std_xy", "init_std_heading", "noise_xy", "noise_heading"):
        if getattr(cfg, name) < 0:
            problems.append(f"{name} must be >= 0, got {getattr(cfg, name)}")
    return problems
