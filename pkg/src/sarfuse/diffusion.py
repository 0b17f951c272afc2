"""Perona-Malik anisotropic diffusion and base/detail decomposition.

The explicit scheme updates every voxel from the previous iteration's state::

    v <- v + lam * sum_n g(|v_n - v|) * (v_n - v)

over the four in-band neighbours (``four_2d``) plus the same pixel in the
two adjacent bands (``six_3d``). Missing neighbours contribute no flux, so
total intensity is conserved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import Raster

EXPONENTIAL = "exponential"
RATIONAL = "rational"
FOUR_2D = "four_2d"
SIX_3D = "six_3d"

_NEIGHBOURS = {FOUR_2D: 4, SIX_3D: 6}


@dataclass(frozen=True)
class DiffusionParams:
    iterations: int = 10
    lam: float = 0.15
    kappa: float = 30.0
    conductance_variant: str = EXPONENTIAL
    neighborhood: str = SIX_3D

    def __post_init__(self):
        if int(self.iterations) != self.iterations or self.iterations < 0:
            raise ValueError(f"iterations must be a non-negative integer, got {self.iterations}")
        if self.conductance_variant not in (EXPONENTIAL, RATIONAL):
            raise ValueError(f"unknown conductance variant {self.conductance_variant!r}")
        if self.neighborhood not in _NEIGHBOURS:
            raise ValueError(f"unknown neighborhood {self.neighborhood!r}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        bound = 1.0 / _NEIGHBOURS[self.neighborhood]
        if not 0 < self.lam <= bound:
            raise ValueError(
                f"lambda must lie in (0, {bound:g}] for {self.neighborhood}, got {self.lam}"
            )


def conductance(grad, kappa: float, variant: str = EXPONENTIAL):
    """Edge-stopping coefficient in (0, 1], equal to 1 at zero gradient."""
    if not kappa > 0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    ratio = np.square(np.asarray(grad, dtype=np.float64) / kappa)
    if variant == EXPONENTIAL:
        out = np.exp(-ratio)
    elif variant == RATIONAL:
        out = 1.0 / (1.0 + ratio)
    else:
        raise ValueError(f"unknown conductance variant {variant!r}")
    return float(out) if out.ndim == 0 else out


def _flux(diff: np.ndarray, p: DiffusionParams) -> np.ndarray:
    return conductance(np.abs(diff), p.kappa, p.conductance_variant) * diff


def diffusion_step(v: np.ndarray, p: DiffusionParams) -> np.ndarray:
    """One Jacobi iteration on a float64 ``(bands, height, width)`` array."""
    total = np.zeros_like(v)
    # north/south, west/east, then the previous/next band
    axes = (1, 2, 0) if p.neighborhood == SIX_3D else (1, 2)
    for axis in axes:
        if v.shape[axis] < 2:
            continue
        d = np.diff(v, axis=axis)
        f = _flux(d, p)
        lead = [slice(None)] * 3
        trail = [slice(None)] * 3
        lead[axis] = slice(None, -1)
        trail[axis] = slice(1, None)
        # flux from the next voxel along the axis, then from the previous one
        total[tuple(lead)] += f
        total[tuple(trail)] -= f
    return v + p.lam * total


def diffuse_array(values: np.ndarray, p: DiffusionParams) -> np.ndarray:
    v = np.array(values, dtype=np.float64)
    if v.ndim == 2:
        v = v[np.newaxis]
    for _ in range(p.iterations):
        v = diffusion_step(v, p)
    return v


def diffuse(img: Raster, p: DiffusionParams) -> Raster:
    if p.iterations == 0:
        return img
    return Raster(diffuse_array(img.values, p).astype(np.float32), img.band_names)


def exact_residual(total: np.ndarray, base: np.ndarray, max_nudges: int = 4) -> np.ndarray:
    """float32 ``detail`` with ``base + detail == total`` in float32 arithmetic.

    The difference is formed in float64, rounded, then moved by single ulps
    wherever the float32 sum still misses the target.
    """
    total = np.asarray(total, dtype=np.float32)
    base = np.asarray(base, dtype=np.float32)
    detail = (total.astype(np.float64) - base.astype(np.float64)).astype(np.float32)
    for _ in range(max_nudges):
        miss = (base + detail) != total
        if not miss.any():
            break
        direction = np.where((base + detail) < total, np.float32(np.inf), np.float32(-np.inf))
        detail[miss] = np.nextafter(detail[miss], direction[miss])
    return detail


def decompose(img: Raster, p: DiffusionParams) -> tuple[Raster, Raster]:
    """Split an image into a diffused base layer and the residual detail.

    ``base.values + detail.values`` reproduces ``img.values`` exactly.
    """
    base = diffuse(img, p)
    return base, Raster(exact_residual(img.values, base.values), img.band_names)
