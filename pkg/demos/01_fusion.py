"""Fusing a SAR-like band into a 4-band optical raster."""
import numpy as np

from sarfuse import DiffusionParams, FusionParams, Raster, decompose, fuse_bandwise, pca_weights
from sarfuse.synthetic import two_texture_scene

sar, opt, labels = two_texture_scene(size=64, seed=42)
print("SAR", sar.shape, "mean %.3f" % sar.values.mean())
print("optical", opt.shape, opt.band_names)

# Diffusion splits each image into a smooth base and a residual detail layer.
p = DiffusionParams(iterations=10, lam=0.15, kappa=30.0, neighborhood="four_2d")
base, detail = decompose(opt, p)
print("detail std per band:", np.round(detail.values.std(axis=(1, 2)), 3))

# Detail weights come from the principal axis of the two details' covariance.
sar_base, sar_detail = decompose(sar, p)
w = pca_weights(sar_detail.values[0], detail.values[3])
print("NIR detail weights (SAR, optical): %.4f %.4f" % w)

# Backscatter is tiny next to reflectance, so optical detail dominates the
# detail layer, while the 50/50 base weighting halves every band's level.
fused = fuse_bandwise(sar, opt, FusionParams(p, base_weight_sar=0.5))
print("fused", fused.shape, fused.band_names)
print("per-band mean optical:", np.round(opt.values.mean(axis=(1, 2)), 2))
print("per-band mean fused:  ", np.round(fused.values.mean(axis=(1, 2)), 2))

# Fusing a band with itself gives the band back.
band = opt.values[:1]
self_fused = fuse_bandwise(Raster(band), Raster(np.repeat(band, 4, axis=0)), FusionParams(p))
print("self-fusion max error:", float(np.abs(self_fused.values - band).max()))
