"""Config parsing, unit handling and validation diagnostics."""

import math
from pathlib import Path

import pytest

from roomradar.baseband import RadarConfig
from roomradar.config import (
    ConfigError,
    load_config,
    parse_quantity,
    validate_config,
    with_overrides,
)

MINIMAL = """\
[scene]
mesh = "room.mesh"
scenario = "room.scn"

[antenna]
pattern = "rx1.pattern"
"""

FULL = """\
[scene]
mesh = "room.mesh"
scenario = "room.scn"

[antenna]
pattern = "rx1.pattern"

[radar]
f0 = "61 GHz"
bandwidth = "1 GHz"
t_chirp = "200 us"
m_samples = 128
n_chirps = 32
tx_power = "2 mW"
noise_figure = "8 dB"
resistance = "50 ohm"

[run]
frames = 10
frame_period = "100 ms"
seed = 77
max_bounces = 1
ray_subdivision = 3
save_frames = true
save_maps = true
figures = false
out = "results"

[dsp]
range_window = "flattop"
doppler_window = "rectangular"
blur = false
detection_margin = "9 dB"
average_count = 16

[pf]
particles = 500
sigma_r = "5 cm"
sigma_v = "0.2 m/s"
clutter_floor = 1e-4
init_std_xy = "0.25 m"
init_std_heading = "10 deg"
noise_xy = "1 cm"
noise_heading = "5 mrad"
"""


def write_config(tmp_path: Path, text: str, with_files: bool = True) -> Path:
    path = tmp_path / "config.toml"
    path.write_text(text)
    if with_files:
        for name in ("room.mesh", "room.scn", "rx1.pattern"):
            (tmp_path / name).write_text("placeholder\n")
    return path


@pytest.mark.parametrize(
    "text, family, expected",
    [
        ("59 GHz", "frequency", 59e9),
        ("100 us", "time", 100e-6),
        ("100 ms", "time", 0.1),
        ("1 mW", "power", 1e-3),
        ("50 ohm", "resistance", 50.0),
        ("0.1 m/s", "speed", 0.1),
        ("5 cm", "length", 0.05),
        ("12 dB", "level", 12.0),
        ("90 deg", "angle", math.pi / 2),
        ("5 mrad", "angle", 5e-3),
    ],
)
def test_parse_quantity_conversions(text, family, expected):
    assert parse_quantity(text, family) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize(
    "text, family",
    [
        (59e9, "frequency"),  # bare number, no unit
        ("59", "frequency"),
        ("59 GHz extra", "frequency"),
        ("59 m", "frequency"),  # wrong family
        ("fast GHz", "frequency"),
    ],
)
def test_parse_quantity_rejects(text, family):
    with pytest.raises(ConfigError):
        parse_quantity(text, family)


def test_minimal_config_uses_defaults(tmp_path):
    cfg = load_config(write_config(tmp_path, MINIMAL))
    assert cfg.mesh_path == (tmp_path / "room.mesh").resolve()
    assert cfg.radar_config() == RadarConfig()
    assert cfg.frames == 1
    assert cfg.frame_period == pytest.approx(0.1)
    assert cfg.range_window == "hamming"
    assert cfg.particles == 2000
    assert cfg.figures is True
    assert validate_config(cfg) == []


def test_full_config_round_trip(tmp_path):
    cfg = load_config(write_config(tmp_path, FULL))
    assert cfg.f0 == 61e9
    assert cfg.bandwidth == 1e9
    assert cfg.t_chirp == pytest.approx(200e-6)
    assert cfg.m_samples == 128 and cfg.n_chirps == 32
    assert cfg.tx_power == pytest.approx(2e-3)
    assert cfg.noise_figure_db == 8.0
    assert cfg.frames == 10 and cfg.seed == 77
    assert cfg.max_bounces == 1 and cfg.ray_subdivision == 3
    assert cfg.save_frames and cfg.save_maps and not cfg.figures
    assert cfg.out_dir == Path("results")
    assert cfg.range_window == "flattop"
    assert cfg.doppler_window == "rectangular"
    assert not cfg.blur
    assert cfg.detection_margin_db == 9.0
    assert cfg.average_count == 16
    assert cfg.particles == 500
    assert cfg.pf_sigma_r == pytest.approx(0.05)
    assert cfg.pf_sigma_v == pytest.approx(0.2)
    assert cfg.clutter_floor == 1e-4
    assert cfg.init_std_heading == pytest.approx(math.radians(10))
    assert cfg.noise_heading == pytest.approx(5e-3)
    assert validate_config(cfg) == []


def test_missing_required_keys(tmp_path):
    with pytest.raises(ConfigError, match=r"\[scene\] scenario"):
        load_config(write_config(tmp_path, "[scene]\nmesh = 'a'\n"))
    with pytest.raises(ConfigError, match=r"\[antenna\] pattern"):
        load_config(
            write_config(tmp_path, "[scene]\nmesh = 'a'\nscenario = 'b'\n")
        )


def test_unknown_keys_and_sections_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown config sections"):
        load_config(write_config(tmp_path, MINIMAL + "\n[plotting]\ndpi = 300\n"))
    with pytest.raises(ConfigError, match=r"\[radar\] has unknown keys"):
        load_config(write_config(tmp_path, MINIMAL + "\n[radar]\ncenter = '60 GHz'\n"))


def test_type_errors_rejected(tmp_path):
    with pytest.raises(ConfigError, match="expected int"):
        load_config(write_config(tmp_path, MINIMAL + "\n[run]\nframes = 'ten'\n"))
    with pytest.raises(ConfigError, match=r"\[radar\] f0"):
        load_config(write_config(tmp_path, MINIMAL + "\n[radar]\nf0 = 59\n"))
    with pytest.raises(ConfigError, match="no such config"):
        load_config(tmp_path / "absent.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[scene\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_validate_reports_missing_files(tmp_path):
    cfg = load_config(write_config(tmp_path, MINIMAL, with_files=False))
    problems = validate_config(cfg)
    assert len(problems) == 3
    assert any("rx1.pattern" in p for p in problems)


def test_validate_reports_narrowband_violation(tmp_path):
    text = MINIMAL + "\n[radar]\nf0 = '4 GHz'\nbandwidth = '2 GHz'\n"
    cfg = load_config(write_config(tmp_path, text))
    problems = validate_config(cfg)
    assert len(problems) == 1
    assert "narrowband" in problems[0]


def test_validate_accumulates_problems(tmp_path):
    text = MINIMAL + "\n[run]\nframes = 0\n\n[dsp]\nrange_window = 'hann'\n"
    cfg = load_config(write_config(tmp_path, text))
    problems = validate_config(cfg)
    assert len(problems) == 2
    assert any("frames" in p for p in problems)
    assert any("range_window" in p for p in problems)


def test_validate_doppler_window_whitelist(tmp_path):
    text = MINIMAL + "\n[dsp]\ndoppler_window = 'flattop'\n"
    cfg = load_config(write_config(tmp_path, text))
    assert any("doppler_window" in p for p in validate_config(cfg))


def test_overrides(tmp_path):
    cfg = load_config(write_config(tmp_path, MINIMAL))
    same = with_overrides(cfg)
    assert same == cfg
    changed = with_overrides(cfg, seed=99, frames=7, out_dir="elsewhere")
    assert changed.seed == 99
    assert changed.frames == 7
    assert changed.out_dir == Path("elsewhere")
    assert changed.mesh_path == cfg.mesh_path
