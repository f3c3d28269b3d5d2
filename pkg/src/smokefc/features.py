"""GM/LoG joint-statistics features.

Gradient magnitude and Laplacian-of-Gaussian responses are jointly
normalised by their local energy, quantised, and summarised by the marginal
distributions of the joint histogram plus the "independency" distributions
(mean conditional probabilities). With 10 bins per axis this gives 40 values
ordered ``[P_G, P_L, Q_G, Q_L]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve, uniform_filter

from .image import as_plane

N_FEATURES = 40


@dataclass(frozen=True)
class GmLogParams:
    sigma: float = 0.5
    bins: int = 10
    norm_window: int | None = None  # defaults to 2*ceil(3*sigma)+1
    norm_eps: float = 1e-8
    clip: float = 3.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        if self.norm_eps <= 0 or self.clip <= 0:
            raise ValueError("norm_eps and clip must be positive")
        if self.norm_window is None:
            object.__setattr__(self, "norm_window", _support(self.sigma))

    @property
    def n_features(self):
        return 4 * self.bins


def _support(sigma):
    return 2 * int(np.ceil(3.0 * sigma)) + 1


def _grid(sigma):
    r = int(np.ceil(3.0 * sigma))
    ax = np.arange(-r, r + 1, dtype=np.float64)
    # rows index y, columns index x
    return np.meshgrid(ax, ax, indexing="xy")


def gaussian_derivative_kernels(sigma: float):
    """Sampled first derivatives of a 2-D Gaussian along x (columns) and y (rows)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x, y = _grid(sigma)
    s2 = sigma * sigma
    g = np.exp(-(x * x + y * y) / (2.0 * s2))
    c = -1.0 / (2.0 * np.pi * s2)
    kx = c * (x / s2) * g
    ky = c * (y / s2) * g
    return kx, ky


def log_kernel(sigma: float) -> np.ndarray:
    """Sampled Laplacian of Gaussian, shifted by its mean so it sums to zero.

    On a truncated grid the raw samples do not cancel; the correction is one
    constant subtracted from every tap.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x, y = _grid(sigma)
    s2 = sigma * sigma
    rr = (x * x + y * y) / (2.0 * s2)
    h = -(1.0 / (np.pi * s2 * s2)) * (1.0 - rr) * np.exp(-rr)
    return h - h.mean()


# Zero-sum kernels leave ~1e-17 round-off on flat patches; anything this small
# is flushed to 0 so flat areas quantise deterministically.
RESPONSE_FLOOR = 1e-12


def _flush(response):
    response[np.abs(response) < RESPONSE_FLOOR] = 0.0
    return response


def compute_gm(gray, sigma: float) -> np.ndarray:
    gray = as_plane(gray)
    kx, ky = gaussian_derivative_kernels(sigma)
    gx = _flush(convolve(gray, kx, mode="reflect"))
    gy = _flush(convolve(gray, ky, mode="reflect"))
    return np.sqrt(gx * gx + gy * gy)


def compute_log(gray, sigma: float) -> np.ndarray:
    return _flush(convolve(as_plane(gray), log_kernel(sigma), mode="reflect"))


def joint_adaptive_normalize(gm, log, window: int, eps: float):
    gm = as_plane(gm)
    log = as_plane(log)
    if gm.shape != log.shape:
        raise ValueError(f"GM {gm.shape} and LoG {log.shape} maps differ in shape")
    energy = uniform_filter(gm * gm + log * log, size=window, mode="reflect")
    norm = np.sqrt(np.maximum(energy, 0.0)) + eps
    return gm / norm, log / norm


def _quantize(values, lo, hi, bins):
    idx = np.floor((values - lo) * (bins / (hi - lo))).astype(np.intp)
    return np.clip(idx, 0, bins - 1)


def _conditional_mean(joint, marginal, axis):
    # mean over the conditioning axis of K / P, skipping empty conditioning bins
    ok = marginal > 0
    safe = np.where(ok, marginal, 1.0)
    if axis == 0:
        ratio = np.where(ok[:, None], joint / safe[:, None], 0.0)
    else:
        ratio = np.where(ok[None, :], joint / safe[None, :], 0.0)
    return ratio.sum(axis=axis) / joint.shape[axis]


def histogram_features(gm_n, log_n, params: GmLogParams) -> np.ndarray:
    bins = params.bins
    gi = _quantize(gm_n.ravel(), 0.0, params.clip, bins)
    li = _quantize(log_n.ravel(), -params.clip, params.clip, bins)
    joint = np.bincount(gi * bins + li, minlength=bins * bins).reshape(bins, bins).astype(np.float64)
    joint /= joint.sum()
    p_g = joint.sum(axis=1)
    p_l = joint.sum(axis=0)
    q_g = _conditional_mean(joint, p_l, axis=1)
    q_l = _conditional_mean(joint, p_g, axis=0)
    return np.concatenate([p_g, p_l, q_g, q_l])


def gmlog_features(gray, params: GmLogParams | None = None) -> np.ndarray:
    params = params or GmLogParams()
    gray = as_plane(gray)
    gm = compute_gm(gray, params.sigma)
    log = compute_log(gray, params.sigma)
    gm_n, log_n = joint_adaptive_normalize(gm, log, params.norm_window, params.norm_eps)
    return histogram_features(gm_n, log_n, params)
