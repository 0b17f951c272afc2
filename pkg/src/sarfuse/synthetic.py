"""Synthetic SAR-like / optical-like scenes with known labels for demos and tests."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .raster import LabelMap, Raster

OPTICAL_BANDS = ("R", "G", "B", "NIR")
OPTICAL_LEVELS = (80.0, 90.0, 70.0, 140.0)


def smooth_field(rng: np.random.Generator, shape, sigma: float) -> np.ndarray:
    """Zero-mean, unit-variance Gaussian-correlated random field."""
    f = gaussian_filter(rng.normal(size=shape), sigma, mode="reflect")
    return (f - f.mean()) / f.std()


def two_texture_scene(
    size: int = 64,
    seed: int = 42,
    mean_gap: float = 2.0,
    rough_amp: float = 6.0,
    smooth_amp: float = 20.0,
    smooth_sigma: float = 3.0,
    contrast_sigma: float = 0.5,
    illumination: float = 10.0,
    noise: float = 0.5,
    looks: float = 16.0,
    margin: int = 2,
):
    """Two labelled regions with slightly different means and distinct textures.

    The left half (class 1) carries pixel-independent roughness whose
    contrast drifts across the region; the right half (class 2) carries a
    smooth Gaussian-correlated relief. A shared low-frequency illumination
    field and white noise are added to the four optical bands. The SAR-like
    band is backscatter-scaled (around 0.1) with gamma speckle of ``looks``
    looks, so it sits orders of magnitude below the optical values. Columns
    within ``margin`` pixels of the boundary are left unlabelled.

    Returns ``(sar, optical, labels)``.
    """
    rng = np.random.default_rng(seed)
    shape = (size, size)
    left = np.zeros(shape, dtype=bool)
    left[:, : size // 2] = True

    rough = rough_amp * rng.normal(size=shape) * np.exp(contrast_sigma * smooth_field(rng, shape, 6.0))
    relief = smooth_amp * smooth_field(rng, shape, smooth_sigma)
    texture = np.where(left, rough, relief)
    light = illumination * smooth_field(rng, shape, 10.0)
    offset = np.where(left, 0.0, mean_gap)

    bands = [
        level + offset + light + (1.0 + 0.1 * k) * texture + rng.normal(scale=noise, size=shape)
        for k, level in enumerate(OPTICAL_LEVELS)
    ]
    optical = Raster(np.stack(bands), OPTICAL_BANDS)

    speckle = rng.gamma(shape=looks, scale=1.0 / looks, size=shape)
    sar = Raster(((0.1 + 0.002 * texture) * speckle)[np.newaxis], ("VV",))

    labels = np.where(left, 1, 2).astype(np.uint16)
    if margin > 0:
        labels[:, size // 2 - margin: size // 2 + margin] = 0
    return sar, optical, LabelMap(labels)
