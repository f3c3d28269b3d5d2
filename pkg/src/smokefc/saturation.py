"""Saturation-histogram smoke classifiers (SAN and SPA)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .image import rgb_to_saturation

N_BINS = 256
SMOKE, CLEAR = 1, 0


@dataclass(frozen=True)
class SatParams:
    t_c: float = 0.35
    peak_min_prominence: float = 0.05
    smooth_radius: int = 2

    def __post_init__(self):
        if not 0 < self.t_c < 1:
            raise ValueError(f"t_c must lie in (0, 1), got {self.t_c}")
        if self.peak_min_prominence < 0 or self.smooth_radius < 0:
            raise ValueError("peak_min_prominence and smooth_radius must be non-negative")


@dataclass(frozen=True)
class SaturationHistogram:
    bins: np.ndarray
    total: int

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(len(self.bins)) + 0.5) / len(self.bins)

    def normalized(self) -> np.ndarray:
        if self.total <= 0:
            raise ValueError("empty saturation histogram")
        return self.bins / self.total


def saturation_histogram(img, n_bins: int = N_BINS) -> SaturationHistogram:
    s = rgb_to_saturation(img).ravel()
    # bin k covers [k/n, (k+1)/n); s == 1 lands in the last bin
    idx = np.minimum((s * n_bins).astype(np.intp), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return SaturationHistogram(bins=counts, total=int(s.size))


def low_saturation_fraction(hist: SaturationHistogram, t_c: float) -> float:
    return float(hist.normalized()[hist.centers < t_c].sum())


def san_classify(hist: SaturationHistogram, params: SatParams | None = None):
    """Smoke when more than half the pixel mass sits below ``t_c``. Returns (label, score)."""
    params = params or SatParams()
    score = low_saturation_fraction(hist, params.t_c)
    return (SMOKE if score > 0.5 else CLEAR), score


def smooth_histogram(hist: SaturationHistogram, radius: int) -> np.ndarray:
    p = hist.normalized()
    if radius == 0:
        return p.astype(np.float64)
    kernel = np.full(2 * radius + 1, 1.0 / (2 * radius + 1))
    return np.convolve(p, kernel, mode="same")


def find_histogram_peaks(hist: SaturationHistogram, params: SatParams | None = None) -> np.ndarray:
    """Bin indices of peaks in the smoothed, normalised histogram.

    A flat-topped maximum counts once (at its middle). The histogram is padded
    with zeros so peaks at either end of the saturation range are found.
    """
    params = params or SatParams()
    smooth = smooth_histogram(hist, params.smooth_radius)
    padded = np.concatenate([[0.0], smooth, [0.0]])
    floor = params.peak_min_prominence * smooth.max()
    peaks, _ = find_peaks(padded, prominence=max(floor, np.finfo(float).tiny))
    return peaks - 1


def spa_classify(hist: SaturationHistogram, params: SatParams | None = None):
    """Smoke when low-saturation peaks are at least as many as high ones (and exist).

    The score is the peak-count difference with the SAN fraction as a 1e-3
    tie-breaker, so images can be ranked.
    """
    params = params or SatParams()
    peaks = find_histogram_peaks(hist, params)
    below_mask = hist.centers[peaks] < params.t_c
    below = int(below_mask.sum())
    above = int(peaks.size - below)
    label = SMOKE if below >= above and below > 0 else CLEAR
    score = (below - above) + 1e-3 * low_saturation_fraction(hist, params.t_c)
    return label, float(score)
