"""Chirp-sequence baseband synthesis.

A frame is an M x N real matrix: M samples along each chirp (fast time,
spacing T_m) and N chirps (slow time, spacing T_n). Each propagation
path k with range r_k, radial velocity v_k, loss L_k and phase phi_k
adds

    x(m, n) = A_k * cos(-2*pi*( (2*B*r_k)/(T_chirp*c) * T_m*m
                                + (2*f0*v_k)/c * (T_m*m + T_n*n)
                                + phi_k ))

with amplitude A_k = sqrt(2 * P_T * 10**(-L_k/10) * R) volts across the
reference resistance R. Receiver noise is white Gaussian with variance
sigma^2 = k_B * 290 K * F * B_R * R and B_R = 1/(2*T_m).

Noise draws follow the documented stream layout in :mod:`roomradar.rng`:
frame f, chirp column n uses the Philox stream (seed, noise domain, f)
with the counter preset to n, so the frame is reproducible bit for bit
regardless of how columns would be parallelized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.constants import c as C0
from scipy.constants import k as K_BOLTZMANN

from . import rng
from .channel import PathContribution

T_REFERENCE = 290.0  # K, standard noise reference temperature


@dataclass(frozen=True)
class RadarConfig:
    """Waveform and front-end parameters.

    ``t_sample`` defaults to t_chirp / m_samples and ``t_repeat`` to
    2 * t_chirp. Constraints: m_samples * t_sample <= t_chirp <= t_repeat,
    bandwidth / f0 < 0.2 (narrowband assumption), even sample counts.
    """

    f0: float = 59e9
    bandwidth: float = 2e9
    t_chirp: float = 100e-6
    m_samples: int = 256
    n_chirps: int = 64
    t_sample: float = 0.0  # 0 means t_chirp / m_samples
    t_repeat: float = 0.0  # 0 means 2 * t_chirp
    tx_power: float = 1e-3
    noise_figure_db: float = 10.0
    resistance: float = 50.0

    def __post_init__(self) -> None:
        if self.t_sample == 0.0:
            object.__setattr__(self, "t_sample", self.t_chirp / self.m_samples)
        if self.t_repeat == 0.0:
            object.__setattr__(self, "t_repeat", 2.0 * self.t_chirp)
        for name in ("f0", "bandwidth", "t_chirp", "t_sample", "t_repeat",
                     "tx_power", "resistance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.m_samples < 2 or self.m_samples % 2:
            raise ValueError("m_samples must be even and >= 2")
        if self.n_chirps < 2 or self.n_chirps % 2:
            raise ValueError("n_chirps must be even and >= 2")
        if self.m_samples * self.t_sample > self.t_chirp * (1 + 1e-12):
            raise ValueError("m_samples * t_sample must not exceed t_chirp")
        if self.t_repeat < self.t_chirp * (1 - 1e-12):
            raise ValueError("t_repeat must be at least t_chirp")
        if self.bandwidth / self.f0 >= 0.2:
            raise ValueError(
                f"bandwidth/f0 = {self.bandwidth / self.f0:.3f} breaks the "
                "narrowband assumption (must be < 0.2)"
            )

    @property
    def wavelength(self) -> float:
        return C0 / self.f0

    @property
    def noise_bandwidth(self) -> float:
        """Receiver noise bandwidth B_R = 1 / (2 * t_sample)."""
        return 1.0 / (2.0 * self.t_sample)

    @property
    def range_bin_m(self) -> float:
        """Range per one-sided FFT bin: T_chirp * c / (2 * B * M * T_m)."""
        return self.t_chirp * C0 / (2 * self.bandwidth * self.m_samples * self.t_sample)

    @property
    def velocity_bin_ms(self) -> float:
        """Velocity per Doppler bin: c / (2 * f0 * N * T_n)."""
        return C0 / (2 * self.f0 * self.n_chirps * self.t_repeat)

    @property
    def max_range_m(self) -> float:
        return self.range_bin_m * (self.m_samples // 2)

    @property
    def max_velocity_ms(self) -> float:
        return self.velocity_bin_ms * (self.n_chirps // 2)


@dataclass
class BasebandFrame:
    """One synthesized receive frame plus its provenance."""

    samples: np.ndarray  # (M, N) float64, volts
    config: RadarConfig
    timestamp: float = 0.0
    frame_index: int = 0
    contributions: tuple[PathContribution, ...] = field(default_factory=tuple)


def noise_sigma(cfg: RadarConfig) -> float:
    """Noise std dev in volts: sqrt(k_B * T0 * F * B_R * R)."""
    f_lin = 10.0 ** (cfg.noise_figure_db / 10.0)
    p_noise = K_BOLTZMANN * T_REFERENCE * f_lin * cfg.noise_bandwidth
    return math.sqrt(p_noise * cfg.resistance)


def amplitude_from_loss(loss_db: float, cfg: RadarConfig) -> float:
    """Receive amplitude in volts: sqrt(2 * P_T * 10**(-L/10) * R)."""
    if not math.isfinite(loss_db):
        raise ValueError("path loss must be finite")
    return math.sqrt(2.0 * cfg.tx_power * 10.0 ** (-loss_db / 10.0) * cfg.resistance)


def synthesize_frame(
    contributions: Sequence[PathContribution],
    cfg: RadarConfig,
    seed: int,
    frame_index: int = 0,
    timestamp: float = 0.0,
    noise: bool = True,
) -> BasebandFrame:
    """Superpose all path contributions and additive receiver noise."""
    m = np.arange(cfg.m_samples, dtype=np.float64)
    n = np.arange(cfg.n_chirps, dtype=np.float64)
    x = np.zeros((cfg.m_samples, cfg.n_chirps), dtype=np.float64)
    for k in contributions:
        if k.range_m <= 0 or not math.isfinite(k.range_m):
            raise ValueError(f"contribution range must be positive, got {k.range_m}")
        amp = amplitude_from_loss(k.loss_db, cfg)
        doppler = 2.0 * cfg.f0 * k.velocity_ms / C0
        beat = 2.0 * cfg.bandwidth * k.range_m / (cfg.t_chirp * C0)
        fast = (beat + doppler) * cfg.t_sample * m
        slow = doppler * cfg.t_repeat * n
        phase = fast[:, None] + slow[None, :] + k.phase_cycles
        x += amp * np.cos(-2.0 * np.pi * phase)
    if noise:
        sigma = noise_sigma(cfg)
        for col in range(cfg.n_chirps):
            gen = rng.column_stream(seed, rng.DOMAIN_NOISE, frame_index, col)
            x[:, col] += gen.normal(0.0, sigma, cfg.m_samples)
    return BasebandFrame(
        samples=x,
        config=cfg,
        timestamp=timestamp,
        frame_index=frame_index,
        contributions=tuple(contributions),
    )
