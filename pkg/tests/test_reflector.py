"""Reflector RCS models and radar-equation contributions."""

import math

import numpy as np
import pytest
from scipy.constants import c as C0
from scipy.interpolate import RegularGridInterpolator

from roomradar.antenna import AntennaPattern
from roomradar.baseband import RadarConfig
from roomradar.reflector import (
    RcsFormatError,
    RcsTable,
    TrihedralRcs,
    load_rcs_table,
    radar_equation_loss,
    rcs_scalar,
    reflector_contribution,
    resolve_rcs,
)
from roomradar.scene import Pose, Reflector

from rooms import box_scene, lroom_scene

CFG = RadarConfig()


def table_text(az=(-4, 4, 2), el=(0, 4, 2), blocks=None, n_az=5, n_el=3) -> str:
    """RCS table file text; blocks maps 'VV@f0' etc to dBsm grids."""
    lines = [
        "f0 59e9",
        "b 2e9",
        f"az {az[0]} {az[1]} {az[2]}",
        f"el {el[0]} {el[1]} {el[2]}",
    ]
    for ch in ("VV", "HH", "VH", "HV"):
        for ft in ("f0", "f1"):
            grid = None if blocks is None else blocks.get(f"{ch}@{ft}")
            if grid is None:
                grid = np.zeros((n_el, n_az))
            lines.append(f"block {ch} {ft}")
            for row in np.asarray(grid, dtype=float):
                lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def write_table(tmp_path, text):
    path = tmp_path / "refl.rcs"
    path.write_text(text)
    return path


def isotropic_pattern() -> AntennaPattern:
    """Unit two-way gain everywhere the hemisphere grid covers."""
    return AntennaPattern(
        gain_db=np.zeros((10, 19)),
        az_start=-180.0,
        az_step=20.0,
        el_start=0.0,
        el_step=10.0,
        rx=1,
        f0=59e9,
        b=2e9,
    )


def test_table_loads_and_converts_dbsm(tmp_path):
    blocks = {
        "VV@f0": np.full((3, 5), 10.0),  # 10 dBsm = 10 m^2
        "VV@f1": np.full((3, 5), 13.010299956639813),  # ~20 m^2
        "HH@f0": np.full((3, 5), 10.791812460476249),  # ~12 m^2
        "HH@f1": np.full((3, 5), 12.552725051033061),  # ~18 m^2
    }
    table = load_rcs_table(write_table(tmp_path, table_text(blocks=blocks)))
    assert table.sigma_avg.shape == (3, 5)
    assert table.f0 == 59e9 and table.b == 2e9
    np.testing.assert_allclose(table.channels["VV@f0"], 10.0, rtol=1e-12)
    # per-node co-pol average: 1/4 (10 + 20 + 12 + 18) = 15
    np.testing.assert_allclose(table.sigma_avg, 15.0, rtol=1e-9)
    assert rcs_scalar(table, 0.0, 2.0) == pytest.approx(15.0, rel=1e-9)


def test_cross_pol_channels_ignored(tmp_path):
    quiet = load_rcs_table(write_table(tmp_path, table_text()))
    loud = load_rcs_table(
        write_table(
            tmp_path,
            table_text(blocks={"VH@f0": np.full((3, 5), 30.0), "HV@f1": np.full((3, 5), 25.0)}),
        )
    )
    np.testing.assert_array_equal(quiet.sigma_avg, loud.sigma_avg)
    assert rcs_scalar(quiet, 1.0, 1.0) == rcs_scalar(loud, 1.0, 1.0)


def test_swapping_copol_channels_is_invariant(tmp_path):
    rng = np.random.default_rng(5)
    vv0, vv1 = rng.uniform(-5, 15, (3, 5)), rng.uniform(-5, 15, (3, 5))
    hh0, hh1 = rng.uniform(-5, 15, (3, 5)), rng.uniform(-5, 15, (3, 5))
    a = load_rcs_table(
        write_table(tmp_path, table_text(blocks={"VV@f0": vv0, "VV@f1": vv1, "HH@f0": hh0, "HH@f1": hh1}))
    )
    b = load_rcs_table(
        write_table(tmp_path, table_text(blocks={"VV@f0": hh0, "VV@f1": hh1, "HH@f0": vv0, "HH@f1": vv1}))
    )
    np.testing.assert_allclose(a.sigma_avg, b.sigma_avg, rtol=1e-12)


def test_bilinear_matches_grid_interpolator(tmp_path):
    rng = np.random.default_rng(11)
    blocks = {
        f"{ch}@{ft}": rng.uniform(-10, 20, (3, 5))
        for ch in ("VV", "HH")
        for ft in ("f0", "f1")
    }
    table = load_rcs_table(write_table(tmp_path, table_text(blocks=blocks)))
    oracle = RegularGridInterpolator(
        (np.arange(0, 5, 2.0), np.arange(-4, 5, 2.0)), table.sigma_avg
    )
    for _ in range(100):
        az = rng.uniform(-4, 4)
        el = rng.uniform(0, 4)
        assert rcs_scalar(table, az, el) == pytest.approx(
            float(oracle((el, az))), rel=1e-10
        )


def test_out_of_coverage_aspect_raises(tmp_path):
    table = load_rcs_table(write_table(tmp_path, table_text()))
    with pytest.raises(ValueError, match="coverage"):
        rcs_scalar(table, 5.0, 0.0)
    with pytest.raises(ValueError, match="coverage"):
        rcs_scalar(table, 0.0, -0.5)


@pytest.mark.parametrize(
    "mutate, match",
    [
        (lambda t: t.replace("block HV f1", "block HV f0", 1), "duplicate"),
        (lambda t: t.replace("f0 59e9\n", ""), "missing header"),
        (lambda t: t.replace("az -4 4 2", "az -4 4 3"), "whole number"),
        (lambda t: t.replace("el 0 4 2", "el 4 0 2"), "stop > start"),
        (lambda t: t.replace("block VV f0", "block XX f0"), "block header"),
    ],
)
def test_malformed_tables_rejected(tmp_path, mutate, match):
    with pytest.raises(RcsFormatError, match=match):
        load_rcs_table(write_table(tmp_path, mutate(table_text())))


def test_incomplete_block_grid_rejected(tmp_path):
    text = table_text()
    lines = text.splitlines()
    drop = next(i for i, l in enumerate(lines) if l.startswith("block HH f1")) + 1
    del lines[drop]
    with pytest.raises(RcsFormatError, match="HH@f1"):
        load_rcs_table(write_table(tmp_path, "\n".join(lines)))


def test_missing_block_rejected(tmp_path):
    text = table_text()
    head, _, _ = text.partition("block HV f1")
    with pytest.raises(RcsFormatError, match="HV@f1"):
        load_rcs_table(write_table(tmp_path, head))


def test_trihedral_uses_band_center_wavelength():
    model = resolve_rcs("trihedral:0.1", CFG)
    assert isinstance(model, TrihedralRcs)
    lam = C0 / 60e9  # 59 GHz start + half the 2 GHz sweep
    assert model.wavelength_m == pytest.approx(lam, rel=1e-12)
    sigma = rcs_scalar(model, 0.0, 0.0)
    assert sigma == pytest.approx(4 * math.pi * 0.1**4 / (3 * lam**2), rel=1e-12)
    # aspect independent
    assert rcs_scalar(model, 37.0, 81.0) == sigma


def test_trihedral_formula_arithmetic():
    # 4*pi*1e-4 / (3 * (5.081 mm)^2) lands near 16.2 m^2
    sigma = rcs_scalar(TrihedralRcs(edge_m=0.1, wavelength_m=5.081e-3), 0.0, 0.0)
    assert sigma == pytest.approx(16.2, abs=0.05)


@pytest.mark.parametrize("source", ["trihedral:0", "trihedral:-0.2", "corner:0.1"])
def test_bad_rcs_sources_rejected(source):
    with pytest.raises(ValueError):
        resolve_rcs(source, CFG)


def test_radar_equation_anchor_value():
    lam = C0 / 59e9
    loss = radar_equation_loss(1.0, lam, 1.0, 4.0)
    assert loss == pytest.approx(102.9, abs=0.1)
    brute = -10 * math.log10(lam**2 * 1.0 / ((4 * math.pi) ** 3 * 4.0**4))
    assert loss == pytest.approx(brute, rel=1e-12)


@pytest.mark.parametrize("r", [1.0, 2.5, 4.0, 9.0])
def test_radar_equation_r4_doubling(r):
    lam = C0 / 59e9
    step = radar_equation_loss(1.0, lam, 1.0, 2 * r) - radar_equation_loss(1.0, lam, 1.0, r)
    assert step == pytest.approx(40 * math.log10(2), rel=1e-12)


def test_radar_equation_rejects_bad_inputs():
    lam = C0 / 59e9
    with pytest.raises(ValueError):
        radar_equation_loss(1.0, lam, 1.0, 0.0)
    with pytest.raises(ValueError):
        radar_equation_loss(0.0, lam, 1.0, 4.0)
    with pytest.raises(ValueError):
        radar_equation_loss(1.0, lam, -2.0, 4.0)


def reflector_at(pos, rcs="trihedral:0.1", orientation=None) -> Reflector:
    kw = {} if orientation is None else {"orientation": np.asarray(orientation, float)}
    return Reflector(id=1, position=np.asarray(pos, dtype=np.float64), rcs_source=rcs, **kw)


def test_contribution_fields_and_phase():
    scene = box_scene(hi=(6, 5, 3))
    refl = reflector_at((3.0, 2.5, 2.9))
    radar = Pose(
        position=np.array([3.0, 2.5, 0.9]),
        heading=0.0,
        velocity=np.array([0.0, 0.0, 0.5]),
    )
    contrib = reflector_contribution(radar, refl, scene, isotropic_pattern(), CFG)
    assert contrib is not None
    assert contrib.source == "reflector"
    assert contrib.faces == ()
    assert contrib.range_m == pytest.approx(2.0, rel=1e-12)
    assert contrib.distance_m == pytest.approx(4.0, rel=1e-12)
    # moving straight up at the overhead reflector: fully closing
    assert contrib.velocity_ms == pytest.approx(0.5, rel=1e-12)
    assert contrib.phase_cycles == pytest.approx(2 * 2.0 / CFG.wavelength, rel=1e-12)
    sigma = rcs_scalar(resolve_rcs("trihedral:0.1", CFG), 0.0, 0.0)
    assert contrib.loss_db == pytest.approx(
        radar_equation_loss(1.0, CFG.wavelength, sigma, 2.0), rel=1e-12
    )


def test_overhead_reflector_zero_doppler_for_horizontal_motion():
    scene = box_scene(hi=(6, 5, 3))
    refl = reflector_at((3.0, 2.5, 2.9))
    radar = Pose(
        position=np.array([3.0, 2.5, 0.9]),
        heading=0.3,
        velocity=np.array([1.2, -0.7, 0.0]),
    )
    contrib = reflector_contribution(radar, refl, scene, isotropic_pattern(), CFG)
    assert contrib is not None
    assert contrib.velocity_ms == pytest.approx(0.0, abs=1e-15)


def test_phase_advances_one_cycle_per_half_wavelength():
    scene = box_scene(hi=(6, 5, 3))
    refl = reflector_at((5.0, 2.5, 1.0))
    pattern = isotropic_pattern()
    lam = CFG.wavelength
    base = np.array([1.0, 2.5, 1.0])
    p1 = reflector_contribution(Pose(base, 0.0, np.zeros(3)), refl, scene, pattern, CFG)
    p2 = reflector_contribution(
        Pose(base - np.array([lam / 2, 0, 0]), 0.0, np.zeros(3)), refl, scene, pattern, CFG
    )
    assert p2.phase_cycles - p1.phase_cycles == pytest.approx(1.0, rel=1e-9)


def test_occluded_reflector_yields_nothing():
    scene = lroom_scene()
    # inner corner at (10, 10) blocks the diagonal between the two arm ends
    refl = reflector_at((5.0, 15.0, 4.0))
    hidden = Pose(np.array([15.0, 5.0, 1.0]), 0.0, np.zeros(3))
    seen = Pose(np.array([5.0, 5.0, 1.0]), 0.0, np.zeros(3))
    pattern = isotropic_pattern()
    assert reflector_contribution(hidden, refl, scene, pattern, CFG) is None
    assert reflector_contribution(seen, refl, scene, pattern, CFG) is not None


def test_antenna_gain_shifts_loss():
    scene = box_scene(hi=(6, 5, 3))
    refl = reflector_at((3.0, 2.5, 2.9))
    radar = Pose(np.array([3.0, 2.5, 0.9]), 0.0, np.zeros(3))
    iso = isotropic_pattern()
    damped = AntennaPattern(
        gain_db=np.full((10, 19), -6.0),
        az_start=-180.0,
        az_step=20.0,
        el_start=0.0,
        el_step=10.0,
        rx=1,
        f0=59e9,
        b=2e9,
    )
    l_iso = reflector_contribution(radar, refl, scene, iso, CFG).loss_db
    l_damped = reflector_contribution(radar, refl, scene, damped, CFG).loss_db
    assert l_damped - l_iso == pytest.approx(6.0, rel=1e-9)


def test_table_aspect_uses_reflector_frame(tmp_path):
    # sigma depends on elevation only: 20 dBsm on boresight, 0 dBsm at 40 deg
    el_rows = np.repeat(np.linspace(20.0, 0.0, 5)[:, None], 9, axis=1)
    blocks = {f"{ch}@{ft}": el_rows for ch in ("VV", "HH") for ft in ("f0", "f1")}
    text = table_text(az=(-40, 40, 10), el=(0, 40, 10), blocks=blocks, n_az=9, n_el=5)
    path = write_table(tmp_path, text)
    scene = box_scene(hi=(6, 5, 3))
    pattern = isotropic_pattern()
    below = Pose(np.array([3.0, 2.5, 0.9]), 0.0, np.zeros(3))
    # default orientation faces straight down: radar below sits on boresight
    refl = reflector_at((3.0, 2.5, 2.9), rcs=f"table:{path}")
    model = resolve_rcs(refl.rcs_source, CFG)
    on_axis = reflector_contribution(below, refl, scene, pattern, CFG, model)
    expect_on = radar_equation_loss(1.0, CFG.wavelength, 100.0, 2.0)
    assert on_axis.loss_db == pytest.approx(expect_on, rel=1e-9)
    # an upward-facing copy puts the radar at local elevation 180: no coverage
    flipped = reflector_at((3.0, 2.5, 2.9), rcs=f"table:{path}", orientation=np.eye(3))
    with pytest.raises(ValueError, match="coverage"):
        reflector_contribution(below, flipped, scene, pattern, CFG, model)


def test_contribution_resolves_model_from_source_tag():
    scene = box_scene(hi=(6, 5, 3))
    refl = reflector_at((3.0, 2.5, 2.9))
    radar = Pose(np.array([3.0, 2.5, 0.9]), 0.0, np.zeros(3))
    auto = reflector_contribution(radar, refl, scene, isotropic_pattern(), CFG)
    explicit = reflector_contribution(
        radar, refl, scene, isotropic_pattern(), CFG, resolve_rcs(refl.rcs_source, CFG)
    )
    assert auto == explicit
