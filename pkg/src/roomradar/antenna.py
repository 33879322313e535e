"""Two-way antenna gain pattern: file format, look-up and angle frames.

Pattern files are plain text::

    rx 1          # receiver id
    f0 59e9       # carrier, Hz
    b 2e9         # sweep bandwidth, Hz
    az -180 180 2 # azimuth start stop step, degrees
    el 0 90 2     # elevation start stop step, degrees
    gain
    <n_el rows of n_az whitespace-separated values, dB>

Rows run over elevation (first row = el start), columns over azimuth.
The grid must be complete and uniform. Gains are normalized at load so
the maximum entry is 0 dB; the pattern is treated as the product of
transmit and receive gains (two-way), so linear values are <= 1.

Angle convention (also used for reflector aspect tables): the radar
boresight is +z (the unit faces the ceiling). Elevation is the polar
angle from boresight; azimuth is measured clockwise from the radar +x
axis when viewed from above (so a world direction at bearing alpha seen
by a radar with heading h sits at azimuth alpha - h... measured
clockwise, i.e. az = atan2(-y', x') after rotating the direction by
-heading about the vertical axis).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

#: Two-way gain (dB) returned for queries outside the measured coverage.
FLOOR_DB = -60.0


class PatternFormatError(ValueError):
    """A pattern file failed to parse or its grid is inconsistent."""


@dataclass
class AntennaPattern:
    """Normalized two-way gain grid in dB over a uniform az/el raster."""

    gain_db: np.ndarray  # (n_el, n_az)
    az_start: float
    az_step: float
    el_start: float
    el_step: float
    rx: int
    f0: float
    b: float

    @property
    def az_stop(self) -> float:
        return self.az_start + self.az_step * (self.gain_db.shape[1] - 1)

    @property
    def el_stop(self) -> float:
        return self.el_start + self.el_step * (self.gain_db.shape[0] - 1)


def _parse_axis(tokens: list[str], where: str) -> tuple[float, float, int]:
    if len(tokens) != 3:
        raise PatternFormatError(f"{where}: expected start stop step")
    start, stop, step = (float(t) for t in tokens)
    if step <= 0 or stop <= start:
        raise PatternFormatError(f"{where}: need stop > start and step > 0")
    n_float = (stop - start) / step
    n = round(n_float)
    if abs(n_float - n) > 1e-9:
        raise PatternFormatError(
            f"{where}: span {stop - start} is not a whole number of {step} deg steps"
        )
    return start, step, n + 1


def load_pattern(path: str | Path) -> AntennaPattern:
    """Parse, validate and peak-normalize a two-way gain pattern file."""
    path = Path(path)
    if not path.is_file():
        raise PatternFormatError(f"no such file: {path}")
    header: dict[str, list[str]] = {}
    rows: list[list[float]] = []
    in_gain = False
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{path}:{lineno}"
        if in_gain:
            try:
                rows.append([float(x) for x in line.split()])
            except ValueError as exc:
                raise PatternFormatError(f"{where}: {exc}") from exc
            continue
        tokens = line.split()
        if tokens[0] == "gain":
            in_gain = True
            continue
        header[tokens[0]] = tokens[1:]
    for key in ("rx", "f0", "b", "az", "el"):
        if key not in header:
            raise PatternFormatError(f"{path}: missing header line {key!r}")
    az_start, az_step, n_az = _parse_axis(header["az"], f"{path}: az")
    el_start, el_step, n_el = _parse_axis(header["el"], f"{path}: el")
    if len(rows) != n_el:
        raise PatternFormatError(
            f"{path}: expected {n_el} gain rows, found {len(rows)}"
        )
    for i, row in enumerate(rows):
        if len(row) != n_az:
            raise PatternFormatError(
                f"{path}: gain row {i} has {len(row)} values, expected {n_az}"
            )
    gain = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(gain)):
        raise PatternFormatError(f"{path}: non-finite gain values")
    gain = gain - gain.max()
    return AntennaPattern(
        gain_db=gain,
        az_start=az_start,
        az_step=az_step,
        el_start=el_start,
        el_step=el_step,
        rx=int(header["rx"][0]),
        f0=float(header["f0"][0]),
        b=float(header["b"][0]),
    )


def two_way_gain(
    pattern: AntennaPattern, az_deg: float, el_deg: float, floor_db: float = FLOOR_DB
) -> float:
    """Linear two-way gain at (az, el), bilinear in dB inside coverage.

    Queries outside the grid return ``10**(floor_db/10)``.
    """
    az = float(az_deg)
    el = float(el_deg)
    n_el, n_az = pattern.gain_db.shape
    fa = (az - pattern.az_start) / pattern.az_step
    fe = (el - pattern.el_start) / pattern.el_step
    if fa < 0 or fa > n_az - 1 or fe < 0 or fe > n_el - 1:
        return 10.0 ** (floor_db / 10.0)
    ia = min(int(fa), n_az - 2) if n_az > 1 else 0
    ie = min(int(fe), n_el - 2) if n_el > 1 else 0
    ta = fa - ia
    te = fe - ie
    g = pattern.gain_db
    if n_az == 1 and n_el == 1:
        db = g[0, 0]
    elif n_az == 1:
        db = (1 - te) * g[ie, 0] + te * g[ie + 1, 0]
    elif n_el == 1:
        db = (1 - ta) * g[0, ia] + ta * g[0, ia + 1]
    else:
        db = (
            (1 - te) * ((1 - ta) * g[ie, ia] + ta * g[ie, ia + 1])
            + te * ((1 - ta) * g[ie + 1, ia] + ta * g[ie + 1, ia + 1])
        )
    return 10.0 ** (float(db) / 10.0)


def direction_to_angles(direction: np.ndarray) -> tuple[float, float]:
    """(az, el) in degrees of a direction already in the local frame."""
    d = np.asarray(direction, dtype=np.float64)
    norm = np.linalg.norm(d)
    if norm == 0 or not np.all(np.isfinite(d)):
        raise ValueError("direction must be a nonzero finite vector")
    d = d / norm
    el = math.degrees(math.acos(max(-1.0, min(1.0, float(d[2])))))
    az = math.degrees(math.atan2(-d[1], d[0])) if (d[0] != 0 or d[1] != 0) else 0.0
    return az, el


def world_to_radar_angles(direction: np.ndarray, heading: float) -> tuple[float, float]:
    """World direction -> radar-frame (az, el) degrees for a given heading.

    The direction is rotated by -heading about the vertical axis, then
    azimuth is read clockwise from +x and elevation from boresight (+z).
    """
    d = np.asarray(direction, dtype=np.float64)
    if not np.all(np.isfinite(d)):
        raise ValueError("direction must be a nonzero finite vector")
    c, s = math.cos(-heading), math.sin(-heading)
    rotated = np.array(
        [c * d[0] - s * d[1], s * d[0] + c * d[1], d[2]], dtype=np.float64
    )
    return direction_to_angles(rotated)
