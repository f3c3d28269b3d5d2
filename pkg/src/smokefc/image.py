"""Image decoding, resizing and colour conversions.

Images are plain float64 numpy arrays with values in [0, 1]: shape (H, W) for
single-channel planes and (H, W, 3) for RGB.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, UnsupportedFormatError

# BT.601 full-range, rows give (Y, Cb - 0.5, Cr - 0.5) from (R, G, B)
_RGB2YCC = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_YCC2RGB = np.linalg.inv(_RGB2YCC)
LUMA = _RGB2YCC[0]

_SUPPORTED_MODES = {"1", "L", "P", "RGB", "RGBA", "LA", "CMYK", "YCbCr"}


@dataclass(frozen=True)
class YCbCrImage:
    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray

    def __post_init__(self):
        if not (self.y.shape == self.cb.shape == self.cr.shape) or self.y.ndim != 2:
            raise ValueError(
                f"YCbCr planes must be 2-D with equal shapes, got "
                f"{self.y.shape}, {self.cb.shape}, {self.cr.shape}"
            )


def _require_rgb(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected a 3-channel (H, W, 3) image, got shape {img.shape}")
    return img


def _achromatic(img):
    # the luma weights sum to 1 only up to rounding; keep grey pixels exact
    return (img[..., 0] == img[..., 1]) & (img[..., 1] == img[..., 2])


def as_plane(img) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected a single-channel (H, W) image, got shape {img.shape}")
    return img


def decode_image(data: bytes) -> np.ndarray:
    """Decode a JPEG or PNG byte stream into an RGB float image in [0, 1]."""
    try:
        pil = Image.open(io.BytesIO(data))
        pil.load()
    except UnidentifiedImageError as exc:
        head = bytes(data[:8]).hex()
        raise DecodeError(f"unrecognised image stream at offset 0 (header bytes {head})") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"malformed image stream: {exc}") from exc
    if pil.format not in ("JPEG", "PNG"):
        raise UnsupportedFormatError(f"unsupported container {pil.format!r}; expected JPEG or PNG")
    if pil.mode not in _SUPPORTED_MODES:
        raise UnsupportedFormatError(f"unsupported pixel mode {pil.mode!r}; only 8-bit images are handled")
    arr = np.asarray(pil.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def read_image(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_image(fh.read())


def encode_png(img) -> bytes:
    img = np.asarray(img, dtype=np.float64)
    u8 = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(u8).save(buf, format="PNG")
    return buf.getvalue()


def write_png(img, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(img))


def _resize_axis(img, n_out, axis):
    n_in = img.shape[axis]
    if n_out == n_in:
        return img
    # half-pixel centres: output sample i maps to source coordinate (i + 0.5) * n_in / n_out - 0.5
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0.0, n_in - 1)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = pos - lo
    shape = [1] * img.ndim
    shape[axis] = n_out
    frac = frac.reshape(shape)
    a = np.take(img, lo, axis=axis)
    b = np.take(img, hi, axis=axis)
    return a + (b - a) * frac


def resize(img, width: int, height: int) -> np.ndarray:
    """Bilinear resample to ``width`` x ``height`` with half-pixel centre alignment."""
    if width < 1 or height < 1:
        raise ValueError(f"target size must be positive, got {width}x{height}")
    img = np.asarray(img, dtype=np.float64)
    if img.shape[:2] == (height, width):
        return img.copy()
    out = _resize_axis(img, height, 0)
    out = _resize_axis(out, width, 1)
    return np.clip(out, 0.0, 1.0)


def rgb_to_ycbcr(img) -> YCbCrImage:
    img = _require_rgb(img)
    ycc = img @ _RGB2YCC.T
    ycc[..., 1:] += 0.5
    grey = _achromatic(img)
    ycc[grey, 0] = img[grey, 0]
    ycc[grey, 1:] = 0.5
    ycc = np.clip(ycc, 0.0, 1.0)
    return YCbCrImage(ycc[..., 0], ycc[..., 1], ycc[..., 2])


def ycbcr_to_rgb(img: YCbCrImage) -> np.ndarray:
    ycc = np.stack([img.y, img.cb - 0.5, img.cr - 0.5], axis=-1)
    return np.clip(ycc @ _YCC2RGB.T, 0.0, 1.0)


def rgb_to_gray(img) -> np.ndarray:
    img = _require_rgb(img)
    gray = img @ LUMA
    grey = _achromatic(img)
    gray[grey] = img[grey, 0]
    return np.clip(gray, 0.0, 1.0)


def rgb_to_saturation(img) -> np.ndarray:
    """HSV saturation (max - min) / max, with 0 for black pixels."""
    img = _require_rgb(img)
    mx = img.max(axis=2)
    mn = img.min(axis=2)
    out = np.zeros_like(mx)
    np.divide(mx - mn, mx, out=out, where=mx > 0)
    return out
