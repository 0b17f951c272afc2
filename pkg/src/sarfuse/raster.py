"""Raster and label-map containers with a header + raw payload file format.

A container is a pair of files sharing a stem::

    scene.hdr   UTF-8 ``key=value`` lines
    scene.raw   band-sequential, row-major, little-endian payload

Header keys are exactly ``width``, ``height``, ``bands``, ``dtype``
(``f32`` or ``u16``), ``interleave`` (``bsq``), ``byteorder`` (``lsb``) and
``bandnames`` (comma separated).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

HEADER_KEYS = ("width", "height", "bands", "dtype", "interleave", "byteorder", "bandnames")
_DTYPES = {"f32": np.dtype("<f4"), "u16": np.dtype("<u2")}


class RasterFormatError(ValueError):
    """Raised when a container file is malformed or inconsistent."""


@dataclass(frozen=True)
class Raster:
    """Band-sequential float32 image.

    ``values`` has shape ``(bands, height, width)``.
    """

    values: np.ndarray
    band_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim == 2:
            values = values[np.newaxis]
        if values.ndim != 3 or values.shape[0] < 1:
            raise ValueError(f"raster values must have shape (bands, height, width), got {values.shape}")
        values = np.ascontiguousarray(values, dtype=np.float32)
        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            b, y, x = (int(v) for v in bad[0])
            raise ValueError(f"non-finite value at band={b}, row={y}, col={x}")
        names = tuple(self.band_names) or tuple(f"band{i + 1}" for i in range(values.shape[0]))
        if len(names) != values.shape[0]:
            raise ValueError(f"{len(names)} band names given for {values.shape[0]} bands")
        for name in names:
            if "," in name or "\n" in name:
                raise ValueError(f"band name {name!r} may not contain ',' or newlines")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "band_names", names)

    @property
    def bands(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def band(self, k: int) -> np.ndarray:
        return self.values[k]

    def __eq__(self, other):
        if not isinstance(other, Raster):
            return NotImplemented
        return (
            self.band_names == other.band_names
            and self.values.shape == other.values.shape
            and self.values.tobytes() == other.values.tobytes()
        )

    __hash__ = None


@dataclass(frozen=True)
class LabelMap:
    """Ground-reference labels, shape ``(height, width)``; 0 means unlabeled."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ValueError(f"label map must be 2-D, got shape {labels.shape}")
        if labels.size and (labels.min() < 0 or labels.max() > np.iinfo(np.uint16).max):
            raise ValueError("labels must fit in an unsigned 16-bit integer")
        labels = np.ascontiguousarray(labels, dtype=np.uint16)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def class_ids(self) -> frozenset[int]:
        ids = np.unique(self.labels)
        return frozenset(int(i) for i in ids if i != 0)

    def __eq__(self, other):
        if not isinstance(other, LabelMap):
            return NotImplemented
        return self.labels.shape == other.labels.shape and np.array_equal(self.labels, other.labels)

    __hash__ = None


def container_paths(path) -> tuple[Path, Path]:
    """Return ``(header, payload)`` paths for a stem, ``.hdr`` or ``.raw`` path."""
    path = Path(path)
    stem = path.with_suffix("") if path.suffix in (".hdr", ".raw") else path
    return stem.with_name(stem.name + ".hdr"), stem.with_name(stem.name + ".raw")


def _read_header(hdr: Path) -> dict:
    if not hdr.exists():
        raise RasterFormatError(f"header not found: {hdr}")
    fields = {}
    for lineno, line in enumerate(hdr.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        if "=" not in line:
            raise RasterFormatError(f"{hdr}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in fields:
            raise RasterFormatError(f"{hdr}:{lineno}: duplicate key {key!r}")
        fields[key] = value.strip()

    missing = [k for k in HEADER_KEYS if k not in fields]
    extra = [k for k in fields if k not in HEADER_KEYS]
    if missing or extra:
        raise RasterFormatError(f"{hdr}: missing keys {missing}, unexpected keys {extra}")
    try:
        dims = {k: int(fields[k]) for k in ("width", "height", "bands")}
    except ValueError as exc:
        raise RasterFormatError(f"{hdr}: width/height/bands must be integers") from exc
    if dims["width"] < 1 or dims["height"] < 1 or dims["bands"] < 1:
        raise RasterFormatError(f"{hdr}: dimensions must be positive, got {dims}")
    if fields["dtype"] not in _DTYPES:
        raise RasterFormatError(f"{hdr}: unsupported dtype {fields['dtype']!r}")
    if fields["interleave"] != "bsq":
        raise RasterFormatError(f"{hdr}: interleave must be 'bsq', got {fields['interleave']!r}")
    if fields["byteorder"] != "lsb":
        raise RasterFormatError(f"{hdr}: byteorder must be 'lsb', got {fields['byteorder']!r}")
    names = fields["bandnames"].split(",") if fields["bandnames"] else []
    if len(names) != dims["bands"]:
        raise RasterFormatError(f"{hdr}: {len(names)} band names for {dims['bands']} bands")
    return {**dims, "dtype": fields["dtype"], "bandnames": names}


def _read_payload(path, expect_dtype=None) -> tuple[dict, np.ndarray]:
    hdr, raw = container_paths(path)
    header = _read_header(hdr)
    if expect_dtype is not None and header["dtype"] != expect_dtype:
        raise RasterFormatError(f"{hdr}: expected dtype {expect_dtype}, found {header['dtype']}")
    dtype = _DTYPES[header["dtype"]]
    shape = (header["bands"], header["height"], header["width"])
    expected = int(np.prod(shape)) * dtype.itemsize
    if not raw.exists():
        raise RasterFormatError(f"payload not found: {raw}")
    payload = raw.read_bytes()
    if len(payload) != expected:
        raise RasterFormatError(
            f"{raw}: payload size mismatch, expected {expected} bytes, found {len(payload)}"
        )
    data = np.frombuffer(payload, dtype=dtype).reshape(shape)
    return header, data


def _write_container(path, data: np.ndarray, dtype_key: str, names: Sequence[str]):
    hdr, raw = container_paths(path)
    bands, height, width = data.shape
    header = {
        "width": width,
        "height": height,
        "bands": bands,
        "dtype": dtype_key,
        "interleave": "bsq",
        "byteorder": "lsb",
        "bandnames": ",".join(names),
    }
    hdr.parent.mkdir(parents=True, exist_ok=True)
    hdr.write_text("".join(f"{k}={header[k]}\n" for k in HEADER_KEYS), encoding="utf-8")
    raw.write_bytes(np.ascontiguousarray(data, dtype=_DTYPES[dtype_key]).tobytes())


def load_raster(path) -> Raster:
    """Read a ``f32`` container; values are returned verbatim."""
    header, data = _read_payload(path, expect_dtype="f32")
    bad = np.argwhere(~np.isfinite(data))
    if bad.size:
        b, y, x = (int(v) for v in bad[0])
        raise RasterFormatError(f"{path}: non-finite value at band={b}, row={y}, col={x}")
    return Raster(data.astype(np.float32), tuple(header["bandnames"]))


def save_raster(r: Raster, path) -> None:
    _write_container(path, r.values, "f32", r.band_names)


def load_labels(path) -> LabelMap:
    header, data = _read_payload(path)
    if header["bands"] != 1:
        raise RasterFormatError(f"{path}: label file must have 1 band, found {header['bands']}")
    if header["dtype"] != "u16":
        raise RasterFormatError(f"{path}: label file must have dtype u16, found {header['dtype']}")
    return LabelMap(data[0].copy())


def save_labels(labels: LabelMap, path) -> None:
    _write_container(path, labels.labels[np.newaxis], "u16", ["labels"])


def percentile_stretch(band: np.ndarray, low: float = 2.0, high: float = 98.0) -> np.ndarray:
    """Linear stretch between two percentiles to uint8; constant bands map to 0."""
    band = np.asarray(band, dtype=np.float64)
    lo, hi = np.percentile(band, [low, high])
    if not hi > lo:
        return np.zeros(band.shape, dtype=np.uint8)
    scaled = (band - lo) * (255.0 / (hi - lo))
    return np.rint(np.clip(scaled, 0.0, 255.0)).astype(np.uint8)


def export_quicklook(r: Raster, band_triplet: Sequence[int], path) -> None:
    """Write a binary PPM colour composite of three bands (e.g. NIR, R, G)."""
    if len(band_triplet) != 3:
        raise ValueError(f"need exactly three band indices, got {len(band_triplet)}")
    for k in band_triplet:
        if not 0 <= int(k) < r.bands:
            raise IndexError(f"band index {k} out of range for {r.bands}-band raster")
    rgb = np.stack([percentile_stretch(r.values[int(k)]) for k in band_triplet], axis=-1)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{r.width} {r.height}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def read_ppm(path) -> np.ndarray:
    """Read a binary ``P6`` image written by :func:`export_quicklook`."""
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    pos += 1
    if tokens[0] != "P6":
        raise RasterFormatError(f"{path}: not a binary PPM")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise RasterFormatError(f"{path}: maxval {maxval} unsupported")
    return np.frombuffer(data[pos:], dtype=np.uint8).reshape(height, width, 3)
