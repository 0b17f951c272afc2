"""SAR + optical fusion: weighted base layers plus PCA-weighted detail layers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .diffusion import DiffusionParams, diffuse_array
from .raster import Raster


@dataclass(frozen=True)
class FusionParams:
    diffusion: DiffusionParams = field(default_factory=DiffusionParams)
    base_weight_sar: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.base_weight_sar <= 1.0:
            raise ValueError(f"base_weight_sar must lie in [0, 1], got {self.base_weight_sar}")


class PcaWeights(NamedTuple):
    w1: float
    w2: float


def _check_same_shape(a: np.ndarray, b: np.ndarray, what: str):
    if a.shape != b.shape:
        raise ValueError(f"{what} shape mismatch: {a.shape} vs {b.shape}")


def covariance_2x2(d1, d2) -> tuple[float, float, float]:
    """Unbiased sample covariance entries ``(var1, cov12, var2)`` of two bands."""
    x = np.asarray(d1, dtype=np.float64).ravel()
    y = np.asarray(d2, dtype=np.float64).ravel()
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 pixels for a covariance")
    x = x - x.mean()
    y = y - y.mean()
    return float(x @ x) / (n - 1), float(x @ y) / (n - 1), float(y @ y) / (n - 1)


def principal_weights(a: float, b: float, c: float) -> PcaWeights:
    """Normalised |principal eigenvector| of the symmetric matrix [[a, b], [b, c]].

    With t = (a - c)/2 and r = hypot(t, b), the principal eigenvector is
    proportional to (sqrt(r + t), sqrt(r - t)) up to the sign of b. The two
    radicands are formed so that swapping a and c swaps them bit-for-bit.
    """
    t = 0.5 * (a - c)
    r = math.hypot(t, b)
    if t > 0:
        u1 = r + t
        u2 = b * b / u1
    elif t < 0:
        u2 = r - t
        u1 = b * b / u2
    else:
        u1 = u2 = r
    s1, s2 = math.sqrt(u1), math.sqrt(u2)
    total = s1 + s2
    if total == 0.0:
        return PcaWeights(0.5, 0.5)
    return PcaWeights(s1 / total, s2 / total)


def pca_weights(d1, d2) -> PcaWeights:
    d1 = np.asarray(d1)
    d2 = np.asarray(d2)
    _check_same_shape(d1, d2, "detail")
    return principal_weights(*covariance_2x2(d1, d2))


def fuse_details(d1, d2) -> np.ndarray:
    d1 = np.asarray(d1, dtype=np.float64)
    d2 = np.asarray(d2, dtype=np.float64)
    w = pca_weights(d1, d2)
    return w.w1 * d1 + w.w2 * d2


def fuse_bases(b1, b2, w: float) -> np.ndarray:
    b1 = np.asarray(b1, dtype=np.float64)
    b2 = np.asarray(b2, dtype=np.float64)
    _check_same_shape(b1, b2, "base")
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"base weight must lie in [0, 1], got {w}")
    return w * b1 + (1.0 - w) * b2


def _decompose_band(band: np.ndarray, p: DiffusionParams) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(band, dtype=np.float64)
    base = diffuse_array(x, p)[0]
    return base, x - base


def fuse_pair(sar_band, opt_band, p: FusionParams) -> np.ndarray:
    """Fuse one SAR band with one optical band of the same size (float32 out)."""
    sar_band = np.asarray(sar_band)
    opt_band = np.asarray(opt_band)
    if sar_band.ndim != 2:
        raise ValueError(f"expected a 2-D band, got shape {sar_band.shape}")
    _check_same_shape(sar_band, opt_band, "band")
    base_s, detail_s = _decompose_band(sar_band, p.diffusion)
    base_o, detail_o = _decompose_band(opt_band, p.diffusion)
    fused = fuse_bases(base_s, base_o, p.base_weight_sar) + fuse_details(detail_s, detail_o)
    return fused.astype(np.float32)


def fuse_bandwise(sar: Raster, opt: Raster, p: FusionParams) -> Raster:
    """Fuse a single-band SAR raster into every band of an optical raster."""
    if sar.bands != 1:
        raise ValueError(f"SAR raster must have exactly 1 band, got {sar.bands}")
    if (sar.height, sar.width) != (opt.height, opt.width):
        raise ValueError(
            f"dimension mismatch: SAR is {sar.height}x{sar.width}, "
            f"optical is {opt.height}x{opt.width}"
        )
    bands = [fuse_pair(sar.values[0], opt.values[k], p) for k in range(opt.bands)]
    return Raster(np.stack(bands), opt.band_names)
