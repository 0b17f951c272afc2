"""Reference-based fusion quality indicators.

All functions take the fused raster first and the reference second and
work in float64. Windowed indices (UIQI, SSIM) use uniform square windows
at stride 1 that lie fully inside the image.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np
from scipy.ndimage import uniform_filter

from .raster import Raster

REPORT_FIELDS = ("ergas", "sam_deg", "rase", "uiqi", "ssim", "psnr_db", "cc")


@dataclass(frozen=True)
class MetricParams:
    """Constants the indicators need.

    ``dynamic_range=None`` means max - min of the reference (1.0 if that is 0).
    """

    ratio: float = 1.0
    uiqi_window: int = 7
    ssim_window: int = 11
    dynamic_range: Optional[float] = None
    psnr_cap: float = 99.0

    def __post_init__(self):
        if not self.ratio > 0:
            raise ValueError(f"ratio must be > 0, got {self.ratio}")
        for name in ("uiqi_window", "ssim_window"):
            w = getattr(self, name)
            if int(w) != w or w < 3 or w % 2 == 0:
                raise ValueError(f"{name} must be an odd integer >= 3, got {w}")
        if self.dynamic_range is not None and not self.dynamic_range > 0:
            raise ValueError(f"dynamic_range must be > 0, got {self.dynamic_range}")


@dataclass(frozen=True)
class QualityReport:
    ergas: float
    sam_deg: float
    rase: float
    uiqi: float
    ssim: float
    psnr_db: float
    cc: float

    def as_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        return "".join(f"{name}={_fmt(getattr(self, name))}\n" for name in REPORT_FIELDS)

    def to_csv(self) -> str:
        row = ",".join(_fmt(getattr(self, name)) for name in REPORT_FIELDS)
        return ",".join(REPORT_FIELDS) + "\n" + row + "\n"

    @classmethod
    def from_text(cls, text: str) -> "QualityReport":
        values = dict(line.split("=", 1) for line in text.splitlines() if line.strip())
        return cls(**{f.name: float(values[f.name]) for f in fields(cls)})


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _pair(f: Raster, r: Raster) -> tuple[np.ndarray, np.ndarray]:
    if f.shape != r.shape:
        raise ValueError(f"dimension mismatch: fused {f.shape} vs reference {r.shape}")
    return f.values.astype(np.float64), r.values.astype(np.float64)


def _rmse_per_band(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.sqrt(np.mean((x - y) ** 2, axis=(1, 2)))


def resolve_dynamic_range(r: Raster, p: MetricParams) -> float:
    if p.dynamic_range is not None:
        return float(p.dynamic_range)
    span = float(r.values.max()) - float(r.values.min())
    return span if span > 0 else 1.0


def ergas(f: Raster, r: Raster, p: MetricParams = MetricParams()) -> float:
    x, y = _pair(f, r)
    rmse = _rmse_per_band(x, y)
    mu = y.mean(axis=(1, 2))
    return float(100.0 * p.ratio * np.sqrt(np.mean((rmse / mu) ** 2)))


def sam(f: Raster, r: Raster) -> float:
    """Mean spectral angle in degrees, skipping pixels with a zero vector.

    The angle is evaluated as 2*atan2(|u - v|, |u + v|) on the unit vectors,
    which equals the clamped arccos of the cosine but stays accurate near 0.
    """
    x, y = _pair(f, r)
    nx = np.sqrt(np.sum(x * x, axis=0))
    ny = np.sqrt(np.sum(y * y, axis=0))
    valid = (nx > 0) & (ny > 0)
    if not valid.any():
        return 0.0
    u = x[:, valid] / nx[valid]
    v = y[:, valid] / ny[valid]
    angle = 2.0 * np.arctan2(
        np.sqrt(np.sum((u - v) ** 2, axis=0)), np.sqrt(np.sum((u + v) ** 2, axis=0))
    )
    return float(np.degrees(angle.mean()))


def rase(f: Raster, r: Raster) -> float:
    x, y = _pair(f, r)
    rmse = _rmse_per_band(x, y)
    return float(100.0 / y.mean() * np.sqrt(np.mean(rmse ** 2)))


def _window_moments(x: np.ndarray, y: np.ndarray, w: int, sample: bool):
    """Means, variances and covariance over every full ``w``x``w`` window."""
    h = w // 2
    if x.shape[0] < w or x.shape[1] < w:
        raise ValueError(f"image {x.shape} smaller than window {w}")
    crop = (slice(h, x.shape[0] - h), slice(h, x.shape[1] - h))

    def mean(a):
        return uniform_filter(a, size=w, mode="nearest")[crop]

    mx, my = mean(x), mean(y)
    n = w * w
    scale = n / (n - 1) if sample else 1.0
    vx = (mean(x * x) - mx * mx) * scale
    vy = (mean(y * y) - my * my) * scale
    cxy = (mean(x * y) - mx * my) * scale
    return mx, my, vx, vy, cxy


def _uiqi_band(x: np.ndarray, y: np.ndarray, w: int) -> float:
    mx, my, vx, vy, cxy = _window_moments(x, y, w, sample=True)
    num = 4.0 * cxy * mx * my
    den = (vx + vy) * (mx * mx + my * my)
    ok = den != 0
    q = np.zeros_like(den)
    q[ok] = num[ok] / den[ok]
    if not ok.all():
        # zero-denominator windows count as 1 only when the windows are identical
        ys, xs = np.nonzero(~ok)
        same = np.array(
            [np.array_equal(x[i:i + w, j:j + w], y[i:i + w, j:j + w]) for i, j in zip(ys, xs)]
        )
        q[ys[same], xs[same]] = 1.0
        ok[ys[same], xs[same]] = True
    if not ok.any():
        return 0.0
    return float(q[ok].mean())


def uiqi(f: Raster, r: Raster, p: MetricParams = MetricParams()) -> float:
    x, y = _pair(f, r)
    return float(np.mean([_uiqi_band(x[k], y[k], p.uiqi_window) for k in range(x.shape[0])]))


def ssim(f: Raster, r: Raster, p: MetricParams = MetricParams()) -> float:
    x, y = _pair(f, r)
    L = resolve_dynamic_range(r, p)
    c1 = (0.01 * L) ** 2
    c2 = (0.03 * L) ** 2
    scores = []
    for k in range(x.shape[0]):
        mx, my, vx, vy, cxy = _window_moments(x[k], y[k], p.ssim_window, sample=True)
        s = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        scores.append(s.mean())
    return float(np.mean(scores))


def psnr(f: Raster, r: Raster, p: MetricParams = MetricParams()) -> float:
    x, y = _pair(f, r)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0:
        return float(p.psnr_cap)
    L = resolve_dynamic_range(r, p)
    return float(min(10.0 * math.log10(L * L / mse), p.psnr_cap))


def cc(f: Raster, r: Raster) -> float:
    x, y = _pair(f, r)
    terms = []
    for k in range(x.shape[0]):
        a = x[k].ravel() - x[k].mean()
        b = y[k].ravel() - y[k].mean()
        den = math.sqrt(float(a @ a) * float(b @ b))
        terms.append(float(a @ b) / den if den > 0 else 0.0)
    return float(np.clip(np.mean(terms), -1.0, 1.0))


def evaluate(f: Raster, r: Raster, p: MetricParams = MetricParams()) -> QualityReport:
    """All seven indicators of ``f`` against the reference ``r``."""
    _pair(f, r)
    return QualityReport(
        ergas=ergas(f, r, p),
        sam_deg=sam(f, r),
        rase=rase(f, r),
        uiqi=uiqi(f, r, p),
        ssim=ssim(f, r, p),
        psnr_db=psnr(f, r, p),
        cc=cc(f, r),
    )
