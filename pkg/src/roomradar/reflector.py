"""Landmark reflector returns via the radar equation.

A reflector's radar cross section comes from one of two sources:

* a measured table (``table:<path>``) holding az/el grids of sigma in
  dBsm for both co- and cross-polarized channels at the sweep's start
  and end frequency. The effective scalar is the bandwidth average of
  the co-polarized channels,

      sigma = 1/4 * (VV@f0 + VV@f1 + HH@f0 + HH@f1),

  bilinearly interpolated in linear sigma over the aspect grid;
  cross-polarized channels are parsed but do not contribute (a single
  co-polarized receive chain is modeled);
* an analytic trihedral corner (``trihedral:<edge_m>``), aspect
  independent: sigma = 4*pi*a^4 / (3*lambda^2) at the band center
  lambda = c / (f0 + B/2).

The echo of a visible reflector at range r enters the baseband model
with loss

    L = -10*log10( G_T*G_R * lambda^2 * sigma / ((4*pi)^3 * r^4) )

using the two-way antenna gain at the arrival direction and
lambda = c/f0. Occluded reflectors (no line of sight) return nothing.

RCS table file format (text; header then eight labeled blocks)::

    f0 59e9
    b 2e9
    az -40 40 2
    el -40 40 2
    block VV f0
    <n_el rows of n_az dBsm values>
    block VV f1
    ...                      # order free; all of VV/HH/VH/HV at f0,f1

Aspect angles are the reflector->radar direction in the reflector's
local frame, same convention as the antenna pattern (elevation from the
local boresight +z, azimuth clockwise from local +x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.constants import c as C0

from .antenna import AntennaPattern, direction_to_angles, two_way_gain, world_to_radar_angles
from .baseband import RadarConfig
from .channel import PathContribution, ray_doppler
from .scene import Pose, Reflector, Scene, los_visible

_CHANNELS = ("VV", "HH", "VH", "HV")
_FREQ_TAGS = ("f0", "f1")


class RcsFormatError(ValueError):
    """An RCS table file failed to parse or its grid is inconsistent."""


@dataclass(frozen=True)
class RcsTable:
    """Bandwidth-averaged co-polarized RCS grid, linear m^2."""

    sigma_avg: np.ndarray  # (n_el, n_az) averaged co-pol, m^2
    channels: dict[str, np.ndarray]  # all eight blocks, linear m^2
    az_start: float
    az_step: float
    el_start: float
    el_step: float
    f0: float
    b: float

    @property
    def az_stop(self) -> float:
        return self.az_start + self.az_step * (self.sigma_avg.shape[1] - 1)

    @property
    def el_stop(self) -> float:
        return self.el_start + self.el_step * (self.sigma_avg.shape[0] - 1)


@dataclass(frozen=True)
class TrihedralRcs:
    """Analytic trihedral corner: aspect-independent boresight RCS."""

    edge_m: float
    wavelength_m: float  # band-center wavelength


RcsModel = RcsTable | TrihedralRcs


def _parse_axis(tokens: list[str], where: str) -> tuple[float, float, int]:
    if len(tokens) != 3:
        raise RcsFormatError(f"{where}: expected start stop step")
    start, stop, step = (float(t) for t in tokens)
    if step <= 0 or stop <= start:
        raise RcsFormatError(f"{where}: need stop > start and step > 0")
    n_float = (stop - start) / step
    n = round(n_float)
    if abs(n_float - n) > 1e-9:
        raise RcsFormatError(f"{where}: span is not a whole number of steps")
    return start, step, n + 1


def load_rcs_table(path: str | Path) -> RcsTable:
    """Parse an RCS table file; dBsm values become linear m^2."""
    path = Path(path)
    if not path.is_file():
        raise RcsFormatError(f"no such file: {path}")
    header: dict[str, list[str]] = {}
    blocks: dict[str, list[list[float]]] = {}
    current: list[list[float]] | None = None
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{path}:{lineno}"
        tokens = line.split()
        if tokens[0] == "block":
            if len(tokens) != 3 or tokens[1] not in _CHANNELS or tokens[2] not in _FREQ_TAGS:
                raise RcsFormatError(
                    f"{where}: block header must be 'block <VV|HH|VH|HV> <f0|f1>'"
                )
            name = f"{tokens[1]}@{tokens[2]}"
            if name in blocks:
                raise RcsFormatError(f"{where}: duplicate block {name}")
            blocks[name] = []
            current = blocks[name]
        elif current is not None:
            try:
                current.append([float(x) for x in tokens])
            except ValueError as exc:
                raise RcsFormatError(f"{where}: {exc}") from exc
        else:
            header[tokens[0]] = tokens[1:]
    for key in ("f0", "b", "az", "el"):
        if key not in header:
            raise RcsFormatError(f"{path}: missing header line {key!r}")
    az_start, az_step, n_az = _parse_axis(header["az"], f"{path}: az")
    el_start, el_step, n_el = _parse_axis(header["el"], f"{path}: el")
    expected = {f"{ch}@{ft}" for ch in _CHANNELS for ft in _FREQ_TAGS}
    missing = expected - blocks.keys()
    if missing:
        raise RcsFormatError(f"{path}: missing blocks {sorted(missing)}")
    channels: dict[str, np.ndarray] = {}
    for name, rows in blocks.items():
        if len(rows) != n_el or any(len(r) != n_az for r in rows):
            raise RcsFormatError(
                f"{path}: block {name} is not a complete {n_el}x{n_az} grid"
            )
        dbsm = np.asarray(rows, dtype=np.float64)
        if not np.all(np.isfinite(dbsm)):
            raise RcsFormatError(f"{path}: non-finite values in block {name}")
        channels[name] = 10.0 ** (dbsm / 10.0)
    sigma_avg = 0.25 * (
        channels["VV@f0"] + channels["VV@f1"] + channels["HH@f0"] + channels["HH@f1"]
    )
    return RcsTable(
        sigma_avg=sigma_avg,
        channels=channels,
        az_start=az_start,
        az_step=az_step,
        el_start=el_start,
        el_step=el_step,
        f0=float(header["f0"][0]),
        b=float(header["b"][0]),
    )


def resolve_rcs(source: str, cfg: RadarConfig) -> RcsModel:
    """Turn a reflector's rcs source tag into a ready model."""
    kind, _, arg = source.partition(":")
    if kind == "trihedral":
        edge = float(arg)
        if edge <= 0:
            raise ValueError("trihedral edge must be positive")
        lam_center = C0 / (cfg.f0 + cfg.bandwidth / 2.0)
        return TrihedralRcs(edge_m=edge, wavelength_m=lam_center)
    if kind == "table":
        return load_rcs_table(arg)
    raise ValueError(f"unknown rcs source {source!r}")


def rcs_scalar(model: RcsModel, az_deg: float, el_deg: float) -> float:
    """Effective RCS (m^2) at an aspect angle.

    Table mode interpolates bilinearly in linear sigma and raises on
    aspects outside the tabulated coverage; the analytic trihedral is
    aspect independent.
    """
    if isinstance(model, TrihedralRcs):
        return 4.0 * math.pi * model.edge_m**4 / (3.0 * model.wavelength_m**2)
    n_el, n_az = model.sigma_avg.shape
    fa = (az_deg - model.az_start) / model.az_step
    fe = (el_deg - model.el_start) / model.el_step
    if fa < 0 or fa > n_az - 1 or fe < 0 or fe > n_el - 1:
        raise ValueError(
            f"aspect ({az_deg:.2f}, {el_deg:.2f}) deg outside RCS table coverage "
            f"az [{model.az_start}, {model.az_stop}] el [{model.el_start}, {model.el_stop}]"
        )
    ia = min(int(fa), n_az - 2) if n_az > 1 else 0
    ie = min(int(fe), n_el - 2) if n_el > 1 else 0
    ta, te = fa - ia, fe - ie
    g = model.sigma_avg
    if n_az == 1 and n_el == 1:
        return float(g[0, 0])
    if n_az == 1:
        return float((1 - te) * g[ie, 0] + te * g[ie + 1, 0])
    if n_el == 1:
        return float((1 - ta) * g[0, ia] + ta * g[0, ia + 1])
    return float(
        (1 - te) * ((1 - ta) * g[ie, ia] + ta * g[ie, ia + 1])
        + te * ((1 - ta) * g[ie + 1, ia] + ta * g[ie + 1, ia + 1])
    )


def radar_equation_loss(
    two_way_gain_linear: float, wavelength_m: float, sigma_m2: float, range_m: float
) -> float:
    """L = -10*log10(G_T*G_R * lambda^2 * sigma / ((4 pi)^3 r^4)), dB."""
    if range_m <= 0:
        raise ValueError("range must be positive")
    if sigma_m2 <= 0 or two_way_gain_linear <= 0:
        raise ValueError("gain and RCS must be positive")
    ratio = (
        two_way_gain_linear
        * wavelength_m**2
        * sigma_m2
        / ((4.0 * math.pi) ** 3 * range_m**4)
    )
    return -10.0 * math.log10(ratio)


def reflector_contribution(
    radar: Pose,
    reflector: Reflector,
    scene: Scene,
    pattern: AntennaPattern,
    cfg: RadarConfig,
    rcs_model: RcsModel | None = None,
) -> PathContribution | None:
    """Radar-equation echo of one reflector, or None when occluded."""
    if rcs_model is None:
        rcs_model = resolve_rcs(reflector.rcs_source, cfg)
    if not los_visible(scene, radar.position, reflector.position):
        return None
    offset = reflector.position - radar.position
    r = float(np.linalg.norm(offset))
    if r <= 0:
        raise ValueError("reflector coincides with the radar position")
    arrival = offset / r
    aoa = world_to_radar_angles(arrival, radar.heading)
    gain = two_way_gain(pattern, *aoa)
    if isinstance(rcs_model, RcsTable):
        to_radar_local = reflector.orientation.T @ (-arrival)
        aspect = direction_to_angles(to_radar_local)
        sigma = rcs_scalar(rcs_model, *aspect)
    else:
        sigma = rcs_scalar(rcs_model, 0.0, 0.0)
    loss = radar_equation_loss(gain, cfg.wavelength, sigma, r)
    return PathContribution(
        loss_db=loss,
        distance_m=2.0 * r,
        range_m=r,
        velocity_ms=ray_doppler(radar.velocity, arrival),
        aoa_deg=aoa,
        phase_cycles=2.0 * r / cfg.wavelength,
        source="reflector",
        faces=(),
    )
