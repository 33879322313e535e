"""Matplotlib rendering of run artifacts to PNG files.

Figures are a human-facing view only; the delimited exports stay the
machine-readable record. Maps are shown in dB relative to the strongest
bin with a fixed 60 dB span so weak multipath stays visible without the
noise floor swamping the image.
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dsp import Feature, RangeDopplerMap, RangeProfile
from .scene import Scene

if TYPE_CHECKING:
    from .runner import FrameRecord

_FLOOR_DB = -60.0


def _to_db(values: np.ndarray) -> np.ndarray:
    peak = float(values.max())
    if peak <= 0.0:
        return np.full(values.shape, _FLOOR_DB)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(values / peak)
    return np.maximum(db, _FLOOR_DB)


def save_map_figure(
    path: str | Path,
    rd_map: RangeDopplerMap,
    features: Sequence[Feature] = (),
    title: str = "",
) -> None:
    """Range-Doppler map in dB with detected peaks circled."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    extent = (
        float(rd_map.velocity_axis[0]),
        float(rd_map.velocity_axis[-1]),
        float(rd_map.range_axis[0]),
        float(rd_map.range_axis[-1]),
    )
    image = ax.imshow(
        _to_db(rd_map.values),
        origin="lower",
        aspect="auto",
        extent=extent,
        cmap="viridis",
        vmin=_FLOOR_DB,
        vmax=0.0,
    )
    if features:
        ax.scatter(
            [f.velocity_ms for f in features],
            [f.range_m for f in features],
            s=90,
            facecolors="none",
            edgecolors="red",
            linewidths=1.2,
            label=f"{len(features)} detections",
        )
        ax.legend(loc="upper right")
    ax.set_xlabel("velocity (m/s)")
    ax.set_ylabel("range (m)")
    if title:
        ax.set_title(title)
    fig.colorbar(image, ax=ax, label="relative power (dB)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _wall_segments(scene: Scene) -> list[tuple[np.ndarray, np.ndarray]]:
    """Floor-plan outline: edges of near-vertical faces, projected to xy."""
    segments = []
    if scene.normals is None:
        return segments
    for tri, normal in zip(scene.triangles, scene.normals):
        if abs(normal[2]) > 0.5:
            continue  # floor or ceiling
        for a, b in ((0, 1), (1, 2), (2, 0)):
            if abs(tri[a, 2] - tri[b, 2]) < 1e-9:  # horizontal edge only
                segments.append((tri[a, :2], tri[b, :2]))
    return segments


def save_trajectory_figure(
    path: str | Path, scene: Scene, records: Sequence["FrameRecord"]
) -> None:
    """True vs estimated track over the room outline and reflectors."""
    fig, ax = plt.subplots(figsize=(6.5, 6.5))
    for a, b in _wall_segments(scene):
        ax.plot([a[0], b[0]], [a[1], b[1]], color="0.6", linewidth=0.8, zorder=1)
    if scene.reflectors:
        pos = np.stack([r.position for r in scene.reflectors])
        ax.scatter(
            pos[:, 0], pos[:, 1], marker="^", s=70, color="tab:orange",
            label="reflectors", zorder=3,
        )
    true_xy = np.array([r.true_pose[:2] for r in records])
    est_xy = np.array([r.estimated_pose[:2] for r in records])
    if len(true_xy):
        ax.plot(true_xy[:, 0], true_xy[:, 1], "-", color="tab:blue", label="true")
        ax.plot(
            est_xy[:, 0], est_xy[:, 1], "--", color="tab:red", label="estimated"
        )
        ax.scatter(
            true_xy[0, 0], true_xy[0, 1], marker="o", color="tab:blue", zorder=4
        )
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_aspect("equal")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_profile_figure(path: str | Path, profile: RangeProfile) -> None:
    """Chirp-averaged range profile in dB."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(profile.range_axis, _to_db(profile.values), color="tab:blue")
    ax.set_xlabel("range (m)")
    ax.set_ylabel("relative power (dB)")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
