"""Comparison enhancers: unsharp masking, bilateral, guided, plain WLS and BF/WLS averaging.

All spatial kernels are normalised over the pixels that fall inside the
image, so borders are handled without padding artefacts and constant images
are fixed points.
"""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.ndimage import correlate1d

from .fc import FcParams, Fusion, enhance_luminance
from .image import YCbCrImage, as_plane, rgb_to_ycbcr, ycbcr_to_rgb
from .wls import WlsParams, wls_filter


class Method(str, enum.Enum):
    NONE = "none"
    IMSHARP = "imsharp"
    BF = "bf"
    GF = "gf"
    WLS = "wls"
    BFWLS_AVG = "bfwls_avg"
    FC_AVG = "fc_avg"
    FC_MAX = "fc_max"


@dataclass(frozen=True)
class BaselineParams:
    bf_sigma_s: float = 5.0
    bf_sigma_r: float = 0.1
    gf_radius: int = 8
    gf_eps: float = 0.04
    sharp_amount: float = 0.8
    sharp_sigma: float = 1.0
    detail_boost: float = 2.0
    wls_lambda: float = 1.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class EnhanceParams:
    """Everything ``enhance_with`` needs, for any method."""

    baseline: BaselineParams = field(default_factory=BaselineParams)
    fc: FcParams = field(default_factory=FcParams)

    def as_dict(self):
        d = asdict(self)
        d["fc"]["fusion"] = self.fc.fusion.value
        return d


def _window_radius(sigma):
    return int(np.ceil(3.0 * sigma))


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    r = _window_radius(sigma)
    x = np.arange(-r, r + 1, dtype=np.float64)
    return np.exp(-(x * x) / (2.0 * sigma * sigma))


def _normalized_separable(y, kernel):
    # zero-extended numerator divided by the in-image kernel mass
    num = correlate1d(correlate1d(y, kernel, axis=0, mode="constant"), kernel, axis=1, mode="constant")
    ones = np.ones_like(y)
    den = correlate1d(correlate1d(ones, kernel, axis=0, mode="constant"), kernel, axis=1, mode="constant")
    return num / den


def gaussian_blur(y, sigma: float) -> np.ndarray:
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return _normalized_separable(as_plane(y), gaussian_kernel1d(sigma))


def bilateral_filter(y, sigma_s: float, sigma_r: float) -> np.ndarray:
    """Brute-force bilateral filter over a (2*ceil(3*sigma_s)+1)^2 window."""
    y = as_plane(y)
    if sigma_s <= 0 or sigma_r <= 0:
        raise ValueError("sigma_s and sigma_r must be positive")
    h, w = y.shape
    r = _window_radius(sigma_s)
    num = np.zeros_like(y)
    den = np.zeros_like(y)
    inv_s = 1.0 / (2.0 * sigma_s * sigma_s)
    inv_r = 1.0 / (2.0 * sigma_r * sigma_r)
    for dy in range(-r, r + 1):
        if abs(dy) >= h:
            continue
        ys_dst = slice(max(0, -dy), min(h, h - dy))
        ys_src = slice(max(0, dy), min(h, h + dy))
        for dx in range(-r, r + 1):
            if abs(dx) >= w:
                continue
            xs_dst = slice(max(0, -dx), min(w, w - dx))
            xs_src = slice(max(0, dx), min(w, w + dx))
            centre = y[ys_dst, xs_dst]
            other = y[ys_src, xs_src]
            diff = other - centre
            wgt = np.exp(-(dx * dx + dy * dy) * inv_s - diff * diff * inv_r)
            num[ys_dst, xs_dst] += wgt * other
            den[ys_dst, xs_dst] += wgt
    return np.clip(num / den, 0.0, 1.0)


def box_mean(y, radius: int) -> np.ndarray:
    """Mean over the (2r+1)^2 window clipped to the image."""
    y = as_plane(y)
    h, w = y.shape
    c = np.zeros((h + 1, w + 1))
    c[1:, 1:] = y.cumsum(0).cumsum(1)
    i = np.arange(h)
    j = np.arange(w)
    i0, i1 = np.clip(i - radius, 0, h), np.clip(i + radius + 1, 0, h)
    j0, j1 = np.clip(j - radius, 0, w), np.clip(j + radius + 1, 0, w)
    s = c[i1][:, j1] - c[i0][:, j1] - c[i1][:, j0] + c[i0][:, j0]
    n = np.outer(i1 - i0, j1 - j0)
    return s / n


def guided_filter(y, guide, radius: int, eps: float) -> np.ndarray:
    y = as_plane(y)
    guide = as_plane(guide)
    if y.shape != guide.shape:
        raise ValueError(f"input {y.shape} and guide {guide.shape} differ in shape")
    mean_i = box_mean(guide, radius)
    mean_p = box_mean(y, radius)
    cov_ip = box_mean(guide * y, radius) - mean_i * mean_p
    var_i = box_mean(guide * guide, radius) - mean_i * mean_i
    a = cov_ip / (var_i + eps)
    b = mean_p - a * mean_i
    return box_mean(a, radius) * guide + box_mean(b, radius)


def unsharp_mask(y, sigma: float, amount: float) -> np.ndarray:
    y = as_plane(y)
    if amount == 0:
        return y.copy()
    return np.clip(y + amount * (y - gaussian_blur(y, sigma)), 0.0, 1.0)


def _boost(y, base, gain):
    return np.clip(base + gain * (y - base), 0.0, 1.0)


def enhance_luminance_with(y, method, params: EnhanceParams | None = None) -> np.ndarray:
    params = params or EnhanceParams()
    method = Method(method)
    bp = params.baseline
    if method is Method.NONE:
        return y.copy()
    if method is Method.IMSHARP:
        return unsharp_mask(y, bp.sharp_sigma, bp.sharp_amount)
    wls = replace(params.fc.wls, lam=bp.wls_lambda)
    if method is Method.BF:
        return _boost(y, bilateral_filter(y, bp.bf_sigma_s, bp.bf_sigma_r), bp.detail_boost)
    if method is Method.GF:
        return _boost(y, guided_filter(y, y, bp.gf_radius, bp.gf_eps), bp.detail_boost)
    if method is Method.WLS:
        return _boost(y, wls_filter(y, y, wls), bp.detail_boost)
    if method is Method.BFWLS_AVG:
        bf = bilateral_filter(y, bp.bf_sigma_s, bp.bf_sigma_r)
        return np.clip((bf + wls_filter(y, y, wls)) / 2.0, 0.0, 1.0)
    fusion = Fusion.AVG if method is Method.FC_AVG else Fusion.MAX
    return enhance_luminance(y, replace(params.fc, fusion=fusion))


def enhance_with(img, method, params: EnhanceParams | None = None) -> np.ndarray:
    """Apply any of the supported enhancers to an RGB image.

    Every method except ``none`` edits luminance only and recombines it with
    the original chrominance.
    """
    try:
        method = Method(method)
    except ValueError:
        raise ValueError(
            f"unknown enhancement method {method!r}; choose from {[m.value for m in Method]}"
        ) from None
    img = np.asarray(img, dtype=np.float64)
    if method is Method.NONE:
        return img.copy()
    ycc = rgb_to_ycbcr(img)
    y_new = enhance_luminance_with(ycc.y, method, params)
    return ycbcr_to_rgb(YCbCrImage(y_new, ycc.cb, ycc.cr))
