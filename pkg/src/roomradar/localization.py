"""Particle-filter pose tracking against a known reflector map.

State is the planar pose (x, y, heading) at a fixed, known radar
height. Each step:

* predict: turn by the odometry heading increment, drive the odometry
  forward distance along the new heading, then dither every axis with
  zero-mean Gaussian noise;
* update: reweight by the detected features. Correspondences are
  unknown, so a feature's likelihood is the best match over all
  landmarks the particle would see,

      max_j exp(-(dr_j/s_r)^2/2) * exp(-(dv_j/s_v)^2/2),

  floored by a uniform clutter term so unexplained features cost every
  particle equally. The exponentials are unnormalized (peak 1), which
  makes the clutter floor an absolute scale. dv uses the particle's
  closing speed toward the landmark, speed * cos(heading - bearing),
  matching the sign the processing chain produces;
* resample: systematic (low-variance), but only once the effective
  sample size 1 / sum(w^2) drops below half the particle count.

A weight collapse (every particle at likelihood zero after underflow)
resets the set to uniform weights and marks it diverged instead of
dividing by zero.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .dsp import Feature
from .scene import wrap_angle

DEFAULT_COUNT = 2000
DEFAULT_SIGMA_R = 0.1
DEFAULT_SIGMA_V = 0.1
DEFAULT_CLUTTER_FLOOR = 1e-3

LosTest = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ParticleSet:
    """Poses (n, 3) as [x, y, heading], weights (n,), divergence flag."""

    poses: np.ndarray
    weights: np.ndarray
    diverged: bool = False

    def __post_init__(self) -> None:
        if self.poses.ndim != 2 or self.poses.shape[1] != 3 or len(self.poses) == 0:
            raise ValueError("poses must be a nonempty (n, 3) array")
        if self.weights.shape != (len(self.poses),):
            raise ValueError("weights must match the particle count")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and nonnegative")

    def __len__(self) -> int:
        return len(self.poses)


@dataclass(frozen=True)
class PoseEstimate:
    x: float
    y: float
    heading: float


def init_particles(
    count: int,
    center: tuple[float, float, float],
    std: tuple[float, float, float],
    rng: np.random.Generator,
) -> ParticleSet:
    """Gaussian cloud around a starting pose, uniform weights."""
    if count < 1:
        raise ValueError("count must be positive")
    poses = np.empty((count, 3))
    for axis in range(3):
        poses[:, axis] = center[axis] + rng.normal(0.0, std[axis], count)
    poses[:, 2] = wrap_angle(poses[:, 2])
    return ParticleSet(poses=poses, weights=np.full(count, 1.0 / count))


def predict(
    particles: ParticleSet,
    odometry: tuple[float, float],
    noise_std: tuple[float, float, float],
    rng: np.random.Generator,
) -> ParticleSet:
    """Turn-then-drive motion plus per-axis Gaussian dither."""
    d_forward, d_heading = odometry
    poses = particles.poses.copy()
    heading = poses[:, 2] + d_heading
    poses[:, 0] += d_forward * np.cos(heading)
    poses[:, 1] += d_forward * np.sin(heading)
    for axis in range(2):
        if noise_std[axis]:
            poses[:, axis] += rng.normal(0.0, noise_std[axis], len(poses))
    if noise_std[2]:
        heading = heading + rng.normal(0.0, noise_std[2], len(poses))
    # wrap only what moved: zero odometry and noise is an exact identity
    if d_heading != 0.0 or noise_std[2] != 0.0:
        heading = wrap_angle(heading)
    poses[:, 2] = heading
    return replace(particles, poses=poses)


def update(
    particles: ParticleSet,
    features: Sequence[Feature],
    landmarks: np.ndarray,
    radar_height: float,
    sigma_r: float = DEFAULT_SIGMA_R,
    sigma_v: float = DEFAULT_SIGMA_V,
    speed: float = 0.0,
    clutter_floor: float = DEFAULT_CLUTTER_FLOOR,
    los: LosTest | None = None,
) -> ParticleSet:
    """Reweight by feature likelihoods; renormalize; flag collapse."""
    landmarks = np.atleast_2d(np.asarray(landmarks, dtype=np.float64))
    if landmarks.shape[0] == 0 or landmarks.shape[1] != 3:
        raise ValueError("landmarks must be a nonempty (j, 3) array")
    if sigma_r <= 0 or sigma_v <= 0 or clutter_floor <= 0:
        raise ValueError("sigma_r, sigma_v and clutter_floor must be positive")
    weights = particles.weights.copy()
    if features:
        positions = np.column_stack(
            [
                particles.poses[:, 0],
                particles.poses[:, 1],
                np.full(len(particles), radar_height),
            ]
        )
        offsets = landmarks[None, :, :] - positions[:, None, :]  # (n, j, 3)
        ranges = np.linalg.norm(offsets, axis=2)
        ranges = np.maximum(ranges, 1e-9)
        heading = particles.poses[:, 2]
        closing = speed * (
            offsets[:, :, 0] * np.cos(heading)[:, None]
            + offsets[:, :, 1] * np.sin(heading)[:, None]
        ) / ranges
        visible = np.ones(ranges.shape, dtype=bool)
        if los is not None:
            for j in range(landmarks.shape[0]):
                visible[:, j] = los(positions, landmarks[j])
        for feature in features:
            ll = np.exp(
                -0.5 * ((feature.range_m - ranges) / sigma_r) ** 2
                - 0.5 * ((feature.velocity_ms - closing) / sigma_v) ** 2
            )
            ll[~visible] = 0.0
            weights *= np.maximum(ll.max(axis=1), clutter_floor)
    total = weights.sum()
    if total <= 0.0 or not np.isfinite(total):
        uniform = np.full(len(particles), 1.0 / len(particles))
        return replace(particles, weights=uniform, diverged=True)
    return replace(particles, weights=weights / total, diverged=False)


def effective_sample_size(weights: np.ndarray) -> float:
    return float(1.0 / np.sum(weights**2))


def systematic_indices(weights: np.ndarray, u0: float) -> np.ndarray:
    """Low-variance index pick: one probe every 1/n starting at u0/n."""
    if not 0.0 <= u0 < 1.0:
        raise ValueError("u0 must be in [0, 1)")
    n = len(weights)
    probes = (u0 + np.arange(n)) / n
    edges = np.cumsum(weights)
    return np.minimum(np.searchsorted(edges, probes, side="right"), n - 1)


def resample(particles: ParticleSet, rng: np.random.Generator) -> ParticleSet:
    """Systematic resampling when ESS drops below half the count."""
    n = len(particles)
    if effective_sample_size(particles.weights) >= n / 2:
        return particles
    idx = systematic_indices(particles.weights, float(rng.uniform()))
    return replace(
        particles,
        poses=particles.poses[idx].copy(),
        weights=np.full(n, 1.0 / n),
    )


def estimate(particles: ParticleSet) -> PoseEstimate:
    """Weighted mean position and circular weighted mean heading."""
    w = particles.weights
    total = w.sum()
    if total <= 0:
        raise ValueError("weights must not all be zero")
    w = w / total
    x = float(w @ particles.poses[:, 0])
    y = float(w @ particles.poses[:, 1])
    heading = float(
        np.arctan2(w @ np.sin(particles.poses[:, 2]), w @ np.cos(particles.poses[:, 2]))
    )
    return PoseEstimate(x=x, y=y, heading=heading)


def rmse(estimated: np.ndarray, truth: np.ndarray) -> float:
    """Mean 2D Euclidean position error over aligned trajectories."""
    estimated = np.atleast_2d(np.asarray(estimated, dtype=np.float64))
    truth = np.atleast_2d(np.asarray(truth, dtype=np.float64))
    if estimated.shape[0] != truth.shape[0]:
        raise ValueError(
            f"trajectory lengths differ: {estimated.shape[0]} vs {truth.shape[0]}"
        )
    return float(
        np.mean(np.linalg.norm(estimated[:, :2] - truth[:, :2], axis=1))
    )
