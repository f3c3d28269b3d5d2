"""Synthetic laparoscopy-like frames for tests and demos.

Clear frames are saturated reddish textures with specular blobs; smoke frames
blend the same kind of texture toward a bright, low-saturation veil, which
lowers contrast and saturation.
"""
from __future__ import annotations

import zlib
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .evaluation import ManifestEntry, write_manifest
from .image import write_png


def tissue_frame(rng: np.random.Generator, width=96, height=64) -> np.ndarray:
    base = gaussian_filter(rng.standard_normal((height, width)), 4.0)
    base = (base - base.min()) / (np.ptp(base) + 1e-12)
    fine = gaussian_filter(rng.standard_normal((height, width)), 1.0)
    tex = np.clip(0.25 + 0.5 * base + 0.08 * fine, 0.0, 1.0)
    tint = np.array([0.95, 0.35 + 0.15 * rng.random(), 0.3 + 0.1 * rng.random()])
    img = tex[..., None] * tint
    for _ in range(rng.integers(1, 4)):
        cy, cx = rng.integers(0, height), rng.integers(0, width)
        yy, xx = np.mgrid[:height, :width]
        blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * rng.uniform(1.5, 4.0) ** 2))
        img = img + 0.6 * blob[..., None]
    return np.clip(img, 0.0, 1.0)


def smoke_frame(rng: np.random.Generator, width=96, height=64) -> np.ndarray:
    img = tissue_frame(rng, width, height)
    veil = gaussian_filter(rng.random((height, width)), 6.0)
    veil = (veil - veil.min()) / (np.ptp(veil) + 1e-12)
    density = rng.uniform(0.35, 0.75) * (0.6 + 0.4 * veil)
    haze = rng.uniform(0.75, 0.95)
    return np.clip(img * (1 - density[..., None]) + haze * density[..., None], 0.0, 1.0)


def make_dataset(root, videos, frames_per_video=10, seed=0, width=96, height=64):
    """Write PNG frames for each video id and return manifest entries.

    Half the frames of every video are smoke frames (label 1).
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for vid in videos:
        rng = np.random.default_rng([seed, zlib.crc32(str(vid).encode())])
        for k in range(frames_per_video):
            label = k % 2
            img = smoke_frame(rng, width, height) if label else tissue_frame(rng, width, height)
            name = f"video{vid}_{k:04d}.png"
            write_png(img, root / name)
            entries.append(ManifestEntry(name, label, str(vid)))
    return entries


def write_split(root, videos, manifest_name, **kwargs):
    root = Path(root)
    entries = make_dataset(root, videos, **kwargs)
    path = root / manifest_name
    write_manifest(entries, path)
    return path
