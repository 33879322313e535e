"""File exchange formats for frames, maps, detections and trajectories.

Binary matrix container (little-endian, 60-byte header, then the body
as row-major float64):

    bytes 0..7    magic b"RRMAT\\x00\\x00\\x00"
    bytes 8..11   format version, uint32 (currently 1)
    bytes 12..19  rows, uint64
    bytes 20..27  cols, uint64
    bytes 28..59  t_sample, t_repeat, f0, bandwidth as float64

The same container stores raw frames (rows = M fast-time samples,
cols = N chirps) and processed maps (rows = M/2 + 1 range bins).

CSV exports use shortest round-trip float formatting (Python repr), so
identical data always serializes to identical bytes; none of the
writers emit timestamps. Matrix CSVs start with one '# key=value ...'
metadata line. Detection CSVs hold (range m, velocity m/s, amplitude
dB); trajectory CSVs hold the per-frame truth, estimate and running
mean position error.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .baseband import RadarConfig
from .dsp import Feature

_MAGIC = b"RRMAT\x00\x00\x00"
_VERSION = 1
_HEADER = struct.Struct("<8sIQQdddd")

DETECTION_COLUMNS = ("range_m", "velocity_ms", "amplitude_db")
TRAJECTORY_COLUMNS = (
    "t",
    "x_true",
    "y_true",
    "x_est",
    "y_est",
    "heading_est",
    "rmse_running",
)


class MatrixFormatError(ValueError):
    """A binary matrix file is malformed or truncated."""


@dataclass(frozen=True)
class MatrixMeta:
    """Waveform context stored alongside a matrix."""

    rows: int
    cols: int
    t_sample: float
    t_repeat: float
    f0: float
    bandwidth: float


def _meta_from_config(values: np.ndarray, cfg: RadarConfig) -> MatrixMeta:
    return MatrixMeta(
        rows=values.shape[0],
        cols=values.shape[1],
        t_sample=cfg.t_sample,
        t_repeat=cfg.t_repeat,
        f0=cfg.f0,
        bandwidth=cfg.bandwidth,
    )


def _checked_2d(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or 0 in values.shape:
        raise ValueError("matrix must be 2D and nonempty")
    if not np.all(np.isfinite(values)):
        raise ValueError("matrix values must be finite")
    return values


def write_matrix(path: str | Path, values: np.ndarray, cfg: RadarConfig) -> None:
    values = _checked_2d(values)
    meta = _meta_from_config(values, cfg)
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        meta.rows,
        meta.cols,
        meta.t_sample,
        meta.t_repeat,
        meta.f0,
        meta.bandwidth,
    )
    body = np.ascontiguousarray(values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + body)


def read_matrix(path: str | Path) -> tuple[np.ndarray, MatrixMeta]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise MatrixFormatError(f"{path}: shorter than the fixed header")
    magic, version, rows, cols, t_sample, t_repeat, f0, bandwidth = _HEADER.unpack_from(
        raw
    )
    if magic != _MAGIC:
        raise MatrixFormatError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise MatrixFormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + rows * cols * 8
    if len(raw) != expected:
        raise MatrixFormatError(
            f"{path}: expected {expected} bytes for {rows}x{cols}, got {len(raw)}"
        )
    values = (
        np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
        .reshape(rows, cols)
        .astype(np.float64)
    )
    meta = MatrixMeta(
        rows=rows,
        cols=cols,
        t_sample=t_sample,
        t_repeat=t_repeat,
        f0=f0,
        bandwidth=bandwidth,
    )
    return values, meta


def write_matrix_csv(path: str | Path, values: np.ndarray, cfg: RadarConfig) -> None:
    """Same content as write_matrix, as delimited text with a meta line."""
    values = _checked_2d(values)
    meta = _meta_from_config(values, cfg)
    lines = [
        "# rows={} cols={} t_sample={} t_repeat={} f0={} bandwidth={}".format(
            meta.rows,
            meta.cols,
            repr(meta.t_sample),
            repr(meta.t_repeat),
            repr(meta.f0),
            repr(meta.bandwidth),
        )
    ]
    lines.extend(",".join(repr(v) for v in row) for row in values.tolist())
    Path(path).write_text("\n".join(lines) + "\n")


def write_detections_csv(path: str | Path, features: Sequence[Feature]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(DETECTION_COLUMNS)
        for f in features:
            if f.amplitude <= 0:
                raise ValueError("feature amplitude must be positive")
            writer.writerow(
                [
                    repr(float(f.range_m)),
                    repr(float(f.velocity_ms)),
                    repr(10.0 * math.log10(f.amplitude)),
                ]
            )


def read_detections_csv(path: str | Path) -> list[Feature]:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != DETECTION_COLUMNS:
            raise ValueError(f"{path}: expected columns {DETECTION_COLUMNS}")
        features = []
        for row in reader:
            r, v, db = (float(x) for x in row)
            features.append(
                Feature(range_m=r, velocity_ms=v, amplitude=10.0 ** (db / 10.0))
            )
    return features


def write_trajectory_csv(
    path: str | Path, rows: Iterable[Sequence[float]]
) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for row in rows:
            row = list(row)
            if len(row) != len(TRAJECTORY_COLUMNS):
                raise ValueError(
                    f"trajectory rows need {len(TRAJECTORY_COLUMNS)} values"
                )
            writer.writerow([repr(float(v)) for v in row])


def read_trajectory_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != TRAJECTORY_COLUMNS:
            raise ValueError(f"{path}: expected columns {TRAJECTORY_COLUMNS}")
        rows = [[float(x) for x in row] for row in reader]
    return np.asarray(rows, dtype=np.float64).reshape(-1, len(TRAJECTORY_COLUMNS))
