"""Range/Doppler processing of baseband frames.

The chain is the classic chirp-sequence one:

* range FFT per chirp over fast time,
      S(o, n) = sum_m w(m) x(m, n) e^(-j 2 pi o m / M),   0 <= o <= M/2,
  with power bins R(o, n) = |S|^2 / M at o in {0, M/2} and 2 |S|^2 / M
  in between, so a rectangular window preserves signal energy exactly
  (sum_o R(o, n) = sum_m x(m, n)^2);
* Doppler FFT per range bin over slow time,
      T(o, p) = sum_n w(n) S(o, n) e^(-j 2 pi p n / N),
  D = |T|^2 / (N M) with the same one-sided doubling over o, then the
  Doppler axis is center-shifted so bin p maps to velocity
  v(p) = (p - N/2) c / (2 f0 N T_n), positive for closing targets;
* optional 5x5 Gaussian blur (sigma = 1 bin, kernel sum 1, replicated
  borders) before peak detection;
* detection keeps 8-neighborhood local maxima above
  noise_floor * 10^(margin_db / 10).

Windows are referred to by name. "hamming" is the standard
0.54 - 0.46 cos(2 pi m / (M - 1)) set and "flattop" the 5-term
(0.21557895, 0.41663158, 0.277263158, 0.083578947, 0.006947368) set;
both come from scipy with sym=True, which reproduces exactly those
coefficient formulas. Windowed peak amplitudes can be undone with
coherent_gain (sum w / count); Parseval identities hold for the
rectangular window only.

The noise floor estimate is median / ln 2: one-sided power bins of pure
noise are exponential-like, where the median is ln 2 times the mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.signal import windows as _windows

from .baseband import BasebandFrame, RadarConfig

RANGE_WINDOWS = ("rectangular", "hamming", "flattop")
DOPPLER_WINDOWS = ("rectangular", "hamming")

_BLUR_SIGMA = 1.0
_BLUR_OFFSETS = np.arange(-2, 3, dtype=np.float64)


@dataclass(frozen=True)
class RangeProfile:
    """One-sided power spectrum over fast time, length M/2 + 1."""

    values: np.ndarray
    range_axis: np.ndarray  # meters per bin, same length


@dataclass(frozen=True)
class RangeDopplerMap:
    """(M/2 + 1) x N power map with a center-shifted Doppler axis."""

    values: np.ndarray
    range_axis: np.ndarray  # (M/2 + 1,) meters
    velocity_axis: np.ndarray  # (N,) m/s, negative..positive


@dataclass(frozen=True)
class Feature:
    """One detected map peak in physical units (amplitude in map power)."""

    range_m: float
    velocity_ms: float
    amplitude: float


def window_values(window: str, length: int) -> np.ndarray:
    """Window coefficients by name ('rectangular', 'hamming', 'flattop')."""
    if window == "rectangular":
        return np.ones(length)
    if window == "hamming":
        return _windows.hamming(length, sym=True)
    if window == "flattop":
        return _windows.flattop(length, sym=True)
    raise ValueError(f"unknown window {window!r}")


def coherent_gain(window: str, length: int) -> float:
    """Amplitude scale a windowed on-bin tone picks up: sum(w) / length."""
    return float(np.sum(window_values(window, length))) / length


def range_axis(cfg: RadarConfig) -> np.ndarray:
    return np.arange(cfg.m_samples // 2 + 1) * cfg.range_bin_m


def velocity_axis(cfg: RadarConfig) -> np.ndarray:
    n = cfg.n_chirps
    return (np.arange(n) - n // 2) * cfg.velocity_bin_ms


def _one_sided_scale(m_samples: int) -> np.ndarray:
    scale = np.full(m_samples // 2 + 1, 2.0 / m_samples)
    scale[0] = 1.0 / m_samples
    scale[-1] = 1.0 / m_samples
    return scale


def range_fft(
    frame: BasebandFrame, window: str = "rectangular"
) -> tuple[np.ndarray, np.ndarray]:
    """Per-chirp one-sided spectrum S and power profile matrix R.

    Returns (S, R), both (M/2 + 1, N). R is scaled so the rectangular
    window satisfies sum_o R(o, n) = sum_m x(m, n)^2 per chirp.
    """
    if window not in RANGE_WINDOWS:
        raise ValueError(f"range window must be one of {RANGE_WINDOWS}")
    x = frame.samples
    m = x.shape[0]
    w = window_values(window, m)
    s = np.fft.rfft(w[:, None] * x, axis=0)
    r = _one_sided_scale(m)[:, None] * (s.real**2 + s.imag**2)
    return s, r


def average_profiles(r: np.ndarray, count: int, cfg: RadarConfig) -> RangeProfile:
    """Mean of the first `count` chirp profiles of R."""
    if not 1 <= count <= r.shape[1]:
        raise ValueError(f"count must be in [1, {r.shape[1]}], got {count}")
    return RangeProfile(
        values=r[:, :count].mean(axis=1), range_axis=range_axis(cfg)
    )


def doppler_fft(s: np.ndarray, window: str, cfg: RadarConfig) -> RangeDopplerMap:
    """Range-Doppler power map from the complex range-FFT output."""
    if window not in DOPPLER_WINDOWS:
        raise ValueError(f"doppler window must be one of {DOPPLER_WINDOWS}")
    n = s.shape[1]
    if n != cfg.n_chirps:
        raise ValueError(f"expected {cfg.n_chirps} chirps, got {n}")
    w = window_values(window, n)
    t = np.fft.fft(w[None, :] * s, axis=1)
    d = _one_sided_scale(cfg.m_samples)[:, None] * (t.real**2 + t.imag**2) / n
    return RangeDopplerMap(
        values=np.fft.fftshift(d, axes=1),
        range_axis=range_axis(cfg),
        velocity_axis=velocity_axis(cfg),
    )


def blur_kernel() -> np.ndarray:
    """The 5x5 Gaussian kernel (sigma = 1 bin) used by gaussian_blur."""
    g = np.exp(-(_BLUR_OFFSETS**2) / (2.0 * _BLUR_SIGMA**2))
    k = np.outer(g, g)
    return k / k.sum()


def gaussian_blur(rd_map: RangeDopplerMap) -> RangeDopplerMap:
    """Smooth the map with the 5x5 kernel; borders replicate outward."""
    if min(rd_map.values.shape) < 5:
        raise ValueError("map must be at least 5x5 to blur")
    smoothed = ndimage.convolve(rd_map.values, blur_kernel(), mode="nearest")
    return RangeDopplerMap(
        values=smoothed,
        range_axis=rd_map.range_axis,
        velocity_axis=rd_map.velocity_axis,
    )


def estimate_noise_floor(values: np.ndarray) -> float:
    """Mean noise power from the map median (exponential-like bins)."""
    return float(np.median(values)) / math.log(2.0)


def detect_peaks(
    rd_map: RangeDopplerMap, noise_floor: float, margin_db: float
) -> list[Feature]:
    """Local maxima above noise_floor * 10^(margin_db/10), strongest first."""
    if margin_db < 0:
        raise ValueError("margin_db must be >= 0")
    if noise_floor <= 0:
        raise ValueError("noise_floor must be positive")
    vals = rd_map.values
    footprint = np.ones((3, 3), dtype=bool)
    footprint[1, 1] = False
    neighbor_max = ndimage.maximum_filter(
        vals, footprint=footprint, mode="constant", cval=0.0
    )
    threshold = noise_floor * 10.0 ** (margin_db / 10.0)
    peaks = np.argwhere((vals > neighbor_max) & (vals > threshold))
    features = [
        Feature(
            range_m=float(rd_map.range_axis[o]),
            velocity_ms=float(rd_map.velocity_axis[p]),
            amplitude=float(vals[o, p]),
        )
        for o, p in peaks
    ]
    features.sort(key=lambda f: (-f.amplitude, f.range_m, f.velocity_ms))
    return features


def peak_amplitude(
    profile: RangeProfile, expected_range: float, tolerance_bins: int
) -> float:
    """Largest profile value within +-tolerance_bins of an expected range."""
    if tolerance_bins < 0:
        raise ValueError("tolerance_bins must be >= 0")
    axis = profile.range_axis
    bin_width = axis[1] - axis[0]
    if not axis[0] <= expected_range <= axis[-1]:
        raise ValueError(
            f"expected range {expected_range:.3f} m outside profile span "
            f"[{axis[0]:.3f}, {axis[-1]:.3f}] m"
        )
    center = round(expected_range / bin_width)
    lo = max(0, center - tolerance_bins)
    hi = min(len(axis) - 1, center + tolerance_bins)
    return float(profile.values[lo : hi + 1].max())
