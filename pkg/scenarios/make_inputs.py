"""Regenerate the synthetic antenna pattern and RCS table files.

The checked-in pattern/table files are produced by this script; rerun
it after changing the formulas below. Both scenarios share the same
pattern shape: a broad upward-looking beam (boresight +z) with a
quadratic elevation taper to -12 dB two-way at the horizon and a mild
azimuth ripple, written on a 4 degree raster. The desk scenario's
fourth reflector uses a fictitious measured table centered near the
brightness of a 21.5 cm trihedral (about 25 dBsm) with a gentle
aspect falloff and low cross-polar leakage.
"""

from __future__ import annotations

import math
from pathlib import Path

HERE = Path(__file__).parent

F0 = 59e9
B = 2e9


def pattern_text() -> str:
    az_vals = range(-180, 181, 4)
    el_vals = range(0, 181, 4)
    lines = [
        "# synthetic two-way gain, upward boresight, written by make_inputs.py",
        "rx 1",
        f"f0 {F0:.0f}",
        f"b {B:.0f}",
        "az -180 180 4",
        "el 0 180 4",
        "gain",
    ]
    for el in el_vals:
        row = []
        for az in az_vals:
            taper = -12.0 * (el / 90.0) ** 2
            ripple = 0.4 * math.cos(2.0 * math.radians(az)) * (el / 90.0)
            row.append(f"{taper + ripple:.2f}")
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def rcs_table_text() -> str:
    az_vals = range(-180, 181, 30)
    el_vals = range(0, 86, 17)
    offsets = {
        ("VV", "f0"): 0.0,
        ("VV", "f1"): -0.3,
        ("HH", "f0"): -0.2,
        ("HH", "f1"): -0.5,
        ("VH", "f0"): -25.0,
        ("VH", "f1"): -25.0,
        ("HV", "f0"): -25.0,
        ("HV", "f1"): -25.0,
    }
    lines = [
        "# fictitious corner-reflector RCS table, written by make_inputs.py",
        f"f0 {F0:.0f}",
        f"b {B:.0f}",
        "az -180 180 30",
        "el 0 85 17",
    ]
    for (channel, tag), offset in offsets.items():
        lines.append(f"block {channel} {tag}")
        for el in el_vals:
            base = 25.0 - 6.0 * (el / 85.0) ** 2 + offset
            row = [
                f"{base + 0.2 * math.cos(math.radians(az)):.2f}" for az in az_vals
            ]
            lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def main() -> None:
    pattern = pattern_text()
    for scenario in ("lshape_hall", "desk_box"):
        path = HERE / scenario / "pattern.txt"
        path.write_text(pattern)
        print(f"wrote {path}")
    table_path = HERE / "desk_box" / "rcs_corner.txt"
    table_path.write_text(rcs_table_text())
    print(f"wrote {table_path}")


if __name__ == "__main__":
    main()
