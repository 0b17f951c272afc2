"""Rotation-invariant uniform LBP codes, feature stacks and patch datasets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .raster import LabelMap, Raster


@dataclass(frozen=True)
class LbpParams:
    samples: int = 8
    radius: float = 1.0
    variant: str = "riu2"

    def __post_init__(self):
        if int(self.samples) != self.samples or self.samples < 4:
            raise ValueError(f"LBP needs at least 4 samples, got {self.samples}")
        if not self.radius >= 1:
            raise ValueError(f"LBP radius must be >= 1, got {self.radius}")
        if self.variant != "riu2":
            raise ValueError(f"unsupported LBP variant {self.variant!r}")


@dataclass(frozen=True)
class PatchParams:
    patch_side: int = 3
    include_lbp: bool = True

    def __post_init__(self):
        if int(self.patch_side) != self.patch_side or self.patch_side < 1 or self.patch_side % 2 == 0:
            raise ValueError(f"patch side must be an odd integer >= 1, got {self.patch_side}")


@dataclass
class Dataset:
    """Patch feature vectors with their centre labels.

    ``positions`` holds the (row, col) of each patch centre when known.
    """

    vectors: np.ndarray
    labels: np.ndarray
    positions: np.ndarray = field(default=None)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.vectors.ndim != 2:
            self.vectors = self.vectors.reshape(len(self.labels), -1)
        if len(self.vectors) != len(self.labels):
            raise ValueError(f"{len(self.vectors)} vectors but {len(self.labels)} labels")
        if np.any(self.labels <= 0):
            raise ValueError("dataset labels must be > 0")
        if self.positions is not None:
            self.positions = np.asarray(self.positions, dtype=np.int64).reshape(-1, 2)

    def __len__(self):
        return len(self.labels)

    @property
    def feature_len(self) -> int:
        return self.vectors.shape[1]

    @property
    def classes(self) -> list[int]:
        return sorted(int(c) for c in np.unique(self.labels))

    def subset(self, index) -> "Dataset":
        index = np.asarray(index, dtype=np.int64)
        pos = None if self.positions is None else self.positions[index]
        return Dataset(self.vectors[index], self.labels[index], pos)


def lbp_code(center: float, neighbors: Sequence[float], samples: int | None = None) -> int:
    """riu2 code: count of ``neighbor >= center`` if the circular pattern is uniform, else P+1."""
    P = len(neighbors) if samples is None else samples
    if len(neighbors) != P:
        raise ValueError(f"expected {P} neighbours, got {len(neighbors)}")
    s = [1 if n >= center else 0 for n in neighbors]
    transitions = sum(s[i] != s[i - 1] for i in range(P))
    return sum(s) if transitions <= 2 else P + 1


def sample_offsets(p: LbpParams) -> list[tuple[float, float]]:
    """(dy, dx) offsets of the circular neighbours, snapped to the grid when exact."""
    out = []
    for k in range(p.samples):
        theta = 2.0 * math.pi * k / p.samples
        dx = p.radius * math.cos(theta)
        dy = -p.radius * math.sin(theta)
        out.append(tuple(round(v) if abs(v - round(v)) < 1e-9 else v for v in (dy, dx)))
    return out


def _bilinear(band: np.ndarray, ys, xs):
    """Bilinear samples with coordinates clamped into the image."""
    h, w = band.shape
    ys = np.clip(ys, 0, h - 1)
    xs = np.clip(xs, 0, w - 1)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = ys - y0
    fx = xs - x0
    top = band[y0, x0] * (1 - fx) + band[y0, x1] * fx
    bottom = band[y1, x0] * (1 - fx) + band[y1, x1] * fx
    return top * (1 - fy) + bottom * fy


def sample_neighbors(band, x: int, y: int, p: LbpParams = LbpParams()) -> np.ndarray:
    band = np.asarray(band, dtype=np.float64)
    offs = sample_offsets(p)
    ys = np.array([y + dy for dy, _ in offs], dtype=np.float64)
    xs = np.array([x + dx for _, dx in offs], dtype=np.float64)
    return _bilinear(band, ys, xs)


def lbp_map(band, p: LbpParams = LbpParams()) -> np.ndarray:
    """Per-pixel riu2 codes as a float band of the same shape."""
    band = np.asarray(band, dtype=np.float64)
    h, w = band.shape
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    bits = np.stack(
        [_bilinear(band, rows + dy, cols + dx) >= band for dy, dx in sample_offsets(p)]
    ).astype(np.int64)
    ones = bits.sum(axis=0)
    transitions = np.sum(bits != np.roll(bits, 1, axis=0), axis=0)
    return np.where(transitions <= 2, ones, p.samples + 1).astype(np.float64)


def standardize(band: np.ndarray) -> np.ndarray:
    band = np.asarray(band, dtype=np.float64)
    sd = band.std()
    if sd == 0:
        return np.zeros_like(band)
    return (band - band.mean()) / sd


def build_feature_stack(fused: Raster, lbp: LbpParams = LbpParams(), include_lbp: bool = True) -> Raster:
    """Standardised spectral bands, optionally followed by one scaled LBP band per band."""
    bands = [standardize(fused.values[k]) for k in range(fused.bands)]
    names = list(fused.band_names)
    if include_lbp:
        scale = 1.0 / (lbp.samples + 1)
        bands += [lbp_map(fused.values[k], lbp) * scale for k in range(fused.bands)]
        names += [f"lbp_{n}" for n in fused.band_names]
    return Raster(np.stack(bands), tuple(names))


def extract_patches(stack: Raster, gt: LabelMap, p: PatchParams) -> Dataset:
    """One flattened p x p window per labelled pixel whose window fits inside the image."""
    if (stack.height, stack.width) != (gt.height, gt.width):
        raise ValueError(
            f"dimension mismatch: stack is {stack.height}x{stack.width}, "
            f"labels are {gt.height}x{gt.width}"
        )
    s = p.patch_side
    h = s // 2
    labels = gt.labels.astype(np.int64)
    interior = np.zeros_like(labels, dtype=bool)
    interior[h:labels.shape[0] - h, h:labels.shape[1] - h] = True
    rows, cols = np.nonzero((labels != 0) & interior)
    n_feat = s * s * stack.bands
    if rows.size == 0:
        return Dataset(np.empty((0, n_feat)), np.empty(0, dtype=np.int64), np.empty((0, 2)))
    # windows[b, i, j] is the s x s block whose top-left corner is (i, j)
    windows = sliding_window_view(stack.values.astype(np.float64), (s, s), axis=(1, 2))
    vectors = windows[:, rows - h, cols - h].transpose(1, 0, 2, 3).reshape(rows.size, n_feat)
    return Dataset(vectors, labels[rows, cols], np.column_stack([rows, cols]))


def split_dataset(d: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified split; each class gives ceil(fraction * n_c) training samples."""
    if not 0.0 < train_fraction <= 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1], got {train_fraction}")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in d.classes:
        idx = np.flatnonzero(d.labels == c)
        if idx.size < 2:
            raise ValueError(f"class {c} has {idx.size} sample(s); at least 2 are required")
        idx = rng.permutation(idx)
        n_train = min(idx.size, math.ceil(train_fraction * idx.size - 1e-9))
        train.append(idx[:n_train])
        test.append(idx[n_train:])
    train_idx = np.sort(np.concatenate(train))
    test_idx = np.sort(np.concatenate(test))
    return d.subset(train_idx), d.subset(test_idx)


def save_dataset(d: Dataset, path) -> None:
    """CSV, label first then features, 9 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for label, vec in zip(d.labels, d.vectors):
            fh.write(str(int(label)) + "," + ",".join(f"{v:.9g}" for v in vec) + "\n")


def load_dataset(path) -> Dataset:
    rows = [line.split(",") for line in Path(path).read_text(encoding="utf-8").splitlines() if line]
    if not rows:
        return Dataset(np.empty((0, 0)), np.empty(0, dtype=np.int64))
    labels = [int(r[0]) for r in rows]
    vectors = [[float(v) for v in r[1:]] for r in rows]
    return Dataset(np.array(vectors), np.array(labels))
