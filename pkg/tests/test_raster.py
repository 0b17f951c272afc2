import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sarfuse.raster import (
    LabelMap,
    Raster,
    RasterFormatError,
    container_paths,
    export_quicklook,
    load_labels,
    load_raster,
    read_ppm,
    save_labels,
    save_raster,
)


def random_raster(rng, bands=3, h=5, w=7):
    return Raster(rng.normal(size=(bands, h, w)).astype(np.float32),
                  tuple(f"b{i}" for i in range(bands)))


def test_round_trip_bit_identical(tmp_path):
    rng = np.random.default_rng(1)
    r = random_raster(rng)
    save_raster(r, tmp_path / "scene")
    back = load_raster(tmp_path / "scene.hdr")
    assert back == r
    assert back.values.tobytes() == r.values.tobytes()
    assert back.band_names == ("b0", "b1", "b2")


def test_round_trip_special_floats(tmp_path):
    vals = np.array([[[-0.0, 1e-45, np.finfo(np.float32).max, -np.finfo(np.float32).tiny]]],
                    dtype=np.float32)
    r = Raster(vals)
    save_raster(r, tmp_path / "x")
    assert load_raster(tmp_path / "x").values.tobytes() == vals.tobytes()


def test_full_scene_sized_header(tmp_path):
    # 964 rows x 1028 columns x 4 bands
    r = Raster(np.zeros((4, 964, 1028), dtype=np.float32), ("R", "G", "B", "NIR"))
    save_raster(r, tmp_path / "s2")
    assert (tmp_path / "s2.hdr").read_text().startswith("width=1028\nheight=964\nbands=4\n")
    back = load_raster(tmp_path / "s2")
    assert (back.height, back.width, back.bands) == (964, 1028, 4)
    assert back.values.size == 964 * 1028 * 4


def test_single_zero_pixel_payload(tmp_path):
    save_raster(Raster(np.zeros((1, 1, 1), dtype=np.float32)), tmp_path / "z")
    assert (tmp_path / "z.raw").read_bytes() == b"\x00" * 4


def test_header_layout(tmp_path):
    save_raster(Raster(np.zeros((2, 3, 4), dtype=np.float32), ("VV", "VH")), tmp_path / "h")
    assert (tmp_path / "h.hdr").read_text() == (
        "width=4\nheight=3\nbands=2\ndtype=f32\ninterleave=bsq\nbyteorder=lsb\nbandnames=VV,VH\n"
    )


def test_payload_is_little_endian_band_sequential(tmp_path):
    vals = np.arange(12, dtype=np.float32).reshape(2, 2, 3)
    save_raster(Raster(vals), tmp_path / "o")
    raw = (tmp_path / "o.raw").read_bytes()
    assert np.array_equal(np.frombuffer(raw, dtype="<f4"), np.arange(12, dtype=np.float32))


def test_save_is_deterministic(tmp_path):
    r = random_raster(np.random.default_rng(3))
    save_raster(r, tmp_path / "a")
    save_raster(r, tmp_path / "b")
    assert (tmp_path / "a.raw").read_bytes() == (tmp_path / "b.raw").read_bytes()
    assert (tmp_path / "a.hdr").read_bytes() == (tmp_path / "b.hdr").read_bytes()


def test_truncated_payload_names_byte_counts(tmp_path):
    save_raster(random_raster(np.random.default_rng(0), 1, 2, 2), tmp_path / "t")
    raw = tmp_path / "t.raw"
    raw.write_bytes(raw.read_bytes()[:-1])
    with pytest.raises(RasterFormatError, match="expected 16 bytes, found 15"):
        load_raster(tmp_path / "t")


@settings(max_examples=30, deadline=None)
@given(cut=st.integers(min_value=1, max_value=4 * 3 * 4 * 5), extra=st.booleans())
def test_any_size_disagreement_rejected(tmp_path_factory, cut, extra):
    d = tmp_path_factory.mktemp("trunc")
    save_raster(Raster(np.ones((3, 4, 5), dtype=np.float32)), d / "r")
    raw = d / "r.raw"
    data = raw.read_bytes()
    raw.write_bytes(data + b"\x00" * cut if extra else data[:-cut])
    with pytest.raises(RasterFormatError, match="size mismatch"):
        load_raster(d / "r")


def test_missing_header(tmp_path):
    with pytest.raises(RasterFormatError, match="header not found"):
        load_raster(tmp_path / "nope")


@pytest.mark.parametrize(
    "edit, match",
    [
        (lambda t: t.replace("interleave=bsq", "interleave=bil"), "interleave"),
        (lambda t: t.replace("byteorder=lsb", "byteorder=msb"), "byteorder"),
        (lambda t: t.replace("dtype=f32", "dtype=f64"), "dtype"),
        (lambda t: t.replace("width=2", "width=two"), "integers"),
        (lambda t: t.replace("bandnames=band1\n", ""), "missing keys"),
        (lambda t: t + "extra=1\n", "unexpected keys"),
        (lambda t: t.replace("bandnames=band1", "bandnames=a,b"), "band names"),
        (lambda t: t + "garbage\n", "key=value"),
    ],
)
def test_bad_headers(tmp_path, edit, match):
    save_raster(Raster(np.zeros((1, 2, 2), dtype=np.float32)), tmp_path / "b")
    hdr = tmp_path / "b.hdr"
    hdr.write_text(edit(hdr.read_text()))
    with pytest.raises(RasterFormatError, match=match):
        load_raster(tmp_path / "b")


def test_non_finite_rejected_with_position(tmp_path):
    save_raster(Raster(np.zeros((2, 3, 3), dtype=np.float32)), tmp_path / "n")
    raw = tmp_path / "n.raw"
    vals = np.frombuffer(raw.read_bytes(), dtype="<f4").copy()
    vals[9 + 3 * 1 + 2] = np.nan
    raw.write_bytes(vals.tobytes())
    with pytest.raises(RasterFormatError, match="band=1, row=1, col=2"):
        load_raster(tmp_path / "n")


def test_raster_invariants():
    with pytest.raises(ValueError, match="non-finite"):
        Raster(np.array([[[np.inf]]]))
    with pytest.raises(ValueError, match="band names"):
        Raster(np.zeros((2, 1, 1)), ("only",))
    r = Raster(np.zeros((2, 3)))
    assert r.shape == (1, 2, 3)
    assert r.values.dtype == np.float32
    with pytest.raises(ValueError):
        r.values[0, 0, 0] = 1.0


def test_container_paths_accept_any_form(tmp_path):
    want = (tmp_path / "a.hdr", tmp_path / "a.raw")
    assert container_paths(tmp_path / "a") == want
    assert container_paths(tmp_path / "a.hdr") == want
    assert container_paths(str(tmp_path / "a.raw")) == want


# --- labels ----------------------------------------------------------------

def test_labels_round_trip_and_class_ids(tmp_path):
    lab = LabelMap(np.array([[0, 1, 2], [2, 0, 1]]))
    save_labels(lab, tmp_path / "gt")
    back = load_labels(tmp_path / "gt")
    assert back == lab
    assert back.class_ids == {1, 2}
    assert "dtype=u16" in (tmp_path / "gt.hdr").read_text()


def test_all_zero_labels_have_no_classes():
    assert LabelMap(np.zeros((4, 4))).class_ids == frozenset()


def test_twelve_classes():
    lab = LabelMap(np.arange(13).reshape(1, 13))
    assert len(lab.class_ids) == 12


def test_labels_reject_float_file(tmp_path):
    save_raster(Raster(np.zeros((1, 2, 2))), tmp_path / "f")
    with pytest.raises(RasterFormatError, match="u16"):
        load_labels(tmp_path / "f")


def test_labels_reject_multiband(tmp_path):
    save_raster(Raster(np.zeros((2, 2, 2))), tmp_path / "m")
    with pytest.raises(RasterFormatError, match="1 band"):
        load_labels(tmp_path / "m")


def test_raster_loader_rejects_label_file(tmp_path):
    save_labels(LabelMap(np.ones((2, 2))), tmp_path / "l")
    with pytest.raises(RasterFormatError, match="dtype"):
        load_raster(tmp_path / "l")


# --- quicklook -----------------------------------------------------------------

def stretch_oracle(band):
    """Percentiles by explicit linear interpolation on the sorted sample."""
    s = np.sort(band.astype(np.float64).ravel())
    n = s.size

    def pct(q):
        pos = q / 100.0 * (n - 1)
        lo = int(np.floor(pos))
        hi = min(lo + 1, n - 1)
        return s[lo] + (pos - lo) * (s[hi] - s[lo])

    lo, hi = pct(2), pct(98)
    out = np.zeros(band.shape, dtype=np.uint8)
    if hi <= lo:
        return out
    for idx, v in np.ndenumerate(band.astype(np.float64)):
        t = (v - lo) / (hi - lo) * 255.0
        out[idx] = int(np.floor(min(255.0, max(0.0, t)) + 0.5))
    return out


def test_quicklook_matches_oracle(tmp_path):
    rng = np.random.default_rng(7)
    r = Raster(rng.gamma(2.0, 30.0, size=(3, 16, 16)).astype(np.float32))
    export_quicklook(r, (2, 0, 1), tmp_path / "q.ppm")
    img = read_ppm(tmp_path / "q.ppm")
    assert img.shape == (16, 16, 3)
    for c, k in enumerate((2, 0, 1)):
        diff = np.abs(img[..., c].astype(int) - stretch_oracle(r.values[k]).astype(int))
        # rint vs round-half-up may disagree on exact .5 ties only
        assert diff.max() <= 1
        assert np.mean(diff == 0) > 0.99


def test_quicklook_constant_band_maps_to_zero(tmp_path):
    r = Raster(np.full((3, 4, 5), 7.0))
    export_quicklook(r, (0, 1, 2), tmp_path / "c.ppm")
    assert not read_ppm(tmp_path / "c.ppm").any()


def test_quicklook_percentile_endpoints(tmp_path):
    # 101 distinct values 0..100: the 2nd/98th percentiles are exactly 2 and 98
    band = np.arange(101, dtype=np.float32).reshape(1, 101)
    r = Raster(np.stack([band, band, band]))
    export_quicklook(r, (0, 1, 2), tmp_path / "e.ppm")
    img = read_ppm(tmp_path / "e.ppm")[..., 0].ravel()
    assert img[2] == 0 and img[98] == 255
    assert img[0] == 0 and img[100] == 255


def test_quicklook_header_and_range(tmp_path):
    r = Raster(np.random.default_rng(0).normal(size=(4, 6, 9)))
    export_quicklook(r, (3, 0, 1), tmp_path / "h.ppm")
    data = (tmp_path / "h.ppm").read_bytes()
    assert data.startswith(b"P6\n9 6\n255\n")
    assert len(data) == len(b"P6\n9 6\n255\n") + 6 * 9 * 3


def test_quicklook_index_out_of_range(tmp_path):
    with pytest.raises(IndexError):
        export_quicklook(Raster(np.zeros((2, 2, 2))), (0, 1, 2), tmp_path / "x.ppm")
