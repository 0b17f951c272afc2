import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import diffusion_step_loops, pca_weights_eig
from sarfuse.diffusion import DiffusionParams
from sarfuse.fusion import (
    FusionParams,
    covariance_2x2,
    fuse_bandwise,
    fuse_bases,
    fuse_details,
    fuse_pair,
    pca_weights,
    principal_weights,
)
from sarfuse.raster import Raster


def test_equal_details_weigh_half():
    d = np.random.default_rng(0).normal(size=(6, 6))
    assert pca_weights(d, d) == (0.5, 0.5)
    assert np.array_equal(fuse_details(d, d), d)


def test_constant_details_use_convention():
    assert pca_weights(np.ones((3, 3)), np.full((3, 3), 2.0)) == (0.5, 0.5)


def test_diagonal_covariance_picks_first():
    assert principal_weights(3.0, 0.0, 1.0) == (1.0, 0.0)
    assert principal_weights(1.0, 0.0, 3.0) == (0.0, 1.0)


def test_uncorrelated_pair_with_larger_first_variance():
    # orthogonal zero-mean patterns with variances 3 and 1
    d1 = np.sqrt(3) * np.array([1.0, -1.0, 1.0, -1.0])
    d2 = np.array([1.0, 1.0, -1.0, -1.0])
    a, b, c = covariance_2x2(d1, d2)
    assert b == 0.0 and a == pytest.approx(4.0) and c == pytest.approx(4 / 3)
    assert pca_weights(d1, d2) == (1.0, 0.0)
    assert np.array_equal(fuse_details(d1, d2), d1)


def test_zero_second_detail_returns_first():
    d1 = np.random.default_rng(3).normal(size=(5, 5))
    assert np.array_equal(fuse_details(d1, np.zeros_like(d1)), d1)


def test_pca_rejects_mismatch_and_single_pixel():
    with pytest.raises(ValueError):
        pca_weights(np.zeros((2, 2)), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        pca_weights(np.zeros(1), np.zeros(1))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), mix=st.floats(-3, 3), scale=st.sampled_from([1e-3, 1.0, 1e3]))
def test_weights_match_eig_oracle_and_swap(seed, mix, scale):
    rng = np.random.default_rng(seed)
    d1 = rng.normal(size=(7, 7)) * scale
    d2 = (mix * d1 + rng.normal(size=(7, 7))) * scale
    w = pca_weights(d1, d2)
    o = pca_weights_eig(d1, d2)
    assert abs(w.w1 - o[0]) < 1e-8 and abs(w.w2 - o[1]) < 1e-8
    assert w.w1 >= 0 and w.w2 >= 0 and abs(w.w1 + w.w2 - 1) <= 1e-12
    assert tuple(pca_weights(d2, d1)) == (w.w2, w.w1)


def test_fuse_bases():
    b1 = np.full((2, 2), 2.0)
    b2 = np.full((2, 2), 4.0)
    assert np.array_equal(fuse_bases(b1, b2, 0.0), b2)
    assert np.array_equal(fuse_bases(b1, b2, 1.0), b1)
    assert np.array_equal(fuse_bases(b1, b2, 0.5), np.full((2, 2), 3.0))
    with pytest.raises(ValueError):
        fuse_bases(b1, b2, 1.5)
    with pytest.raises(ValueError):
        fuse_bases(b1, np.zeros((3, 2)), 0.5)
    with pytest.raises(ValueError):
        FusionParams(base_weight_sar=-0.1)


def test_fuse_pair_self_identity():
    x = np.random.default_rng(4).uniform(0, 255, size=(16, 16))
    out = fuse_pair(x, x, FusionParams(DiffusionParams(iterations=6, kappa=20.0, neighborhood="four_2d")))
    assert np.max(np.abs(out - x)) <= 1e-5 * max(1.0, np.abs(x).max())


def test_zero_iterations_optical_only():
    rng = np.random.default_rng(5)
    s, o = rng.normal(size=(6, 6)), rng.normal(size=(6, 6))
    p = FusionParams(DiffusionParams(iterations=0), base_weight_sar=0.0)
    assert np.array_equal(fuse_pair(s, o, p), o.astype(np.float32))


def fuse_pair_oracle(s, o, iterations, lam, kappa, variant, w):
    def base(x):
        v = x[np.newaxis].astype(np.float64)
        for _ in range(iterations):
            v = diffusion_step_loops(v, lam, kappa, variant, False)
        return v[0]

    bs, bo = base(s), base(o)
    ds, do = s - bs, o - bo
    w1, w2 = pca_weights_eig(ds, do)
    return w * bs + (1 - w) * bo + w1 * ds + w2 * do


@pytest.mark.parametrize("hood", ["four_2d", "six_3d"])
@pytest.mark.parametrize("w", [0.0, 0.3, 0.5, 1.0])
def test_fuse_pair_matches_chained_oracle(hood, w):
    rng = np.random.default_rng(6)
    s = rng.gamma(2.0, 1.0, size=(8, 8))
    o = rng.normal(100, 15, size=(8, 8))
    dp = DiffusionParams(iterations=4, lam=0.15, kappa=10.0, conductance_variant="rational", neighborhood=hood)
    got = fuse_pair(s, o, FusionParams(dp, w))
    want = fuse_pair_oracle(s, o, 4, 0.15, 10.0, "rational", w)
    assert np.max(np.abs(got - want)) < 1e-4


def test_fuse_bandwise_structure():
    rng = np.random.default_rng(7)
    sar = Raster(rng.gamma(4.0, 0.05, size=(1, 12, 10)), ("VV",))
    opt = Raster(rng.normal(100, 10, size=(4, 12, 10)), ("R", "G", "B", "NIR"))
    p = FusionParams(DiffusionParams(iterations=3))
    out = fuse_bandwise(sar, opt, p)
    assert out.shape == (4, 12, 10)
    assert out.band_names == opt.band_names
    for k in range(4):
        assert np.array_equal(out.values[k], fuse_pair(sar.values[0], opt.values[k], p))


@pytest.mark.parametrize("seed", range(3))
def test_fuse_bandwise_self_fusion(seed):
    rng = np.random.default_rng(seed)
    band = rng.uniform(0, 1000, size=(32, 32))
    opt = Raster(np.stack([band] * 4))
    out = fuse_bandwise(Raster(band[np.newaxis]), opt, FusionParams())
    assert np.max(np.abs(out.values - opt.values)) <= 1e-5 * 1000


def test_fuse_bandwise_errors():
    opt = Raster(np.zeros((4, 5, 5)))
    with pytest.raises(ValueError, match="exactly 1 band"):
        fuse_bandwise(Raster(np.zeros((2, 5, 5))), opt, FusionParams())
    with pytest.raises(ValueError, match="5x6"):
        fuse_bandwise(Raster(np.zeros((1, 5, 6))), opt, FusionParams())


def test_fused_mean_decomposes():
    rng = np.random.default_rng(8)
    s, o = rng.normal(5, 2, size=(10, 10)), rng.normal(50, 5, size=(10, 10))
    p = FusionParams(DiffusionParams(iterations=5, neighborhood="four_2d"), 0.25)
    got = float(fuse_pair(s, o, p).astype(np.float64).mean())
    want = float(fuse_pair_oracle(s, o, 5, 0.15, 30.0, "exponential", 0.25).mean())
    assert got == pytest.approx(want, rel=1e-6)
