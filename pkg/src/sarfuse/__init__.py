"""SAR/optical fusion by anisotropic diffusion and PCA, fusion quality indices,
and LBP-augmented patch-based RBF SVM classification."""

from .diffusion import DiffusionParams, conductance, decompose, diffuse
from .features import (
    Dataset,
    LbpParams,
    PatchParams,
    build_feature_stack,
    extract_patches,
    lbp_code,
    lbp_map,
    sample_neighbors,
    split_dataset,
)
from .fusion import FusionParams, PcaWeights, fuse_bandwise, fuse_bases, fuse_details, fuse_pair, pca_weights
from .metrics import MetricParams, QualityReport, cc, ergas, evaluate, psnr, rase, sam, ssim, uiqi
from .raster import LabelMap, Raster, export_quicklook, load_labels, load_raster, save_labels, save_raster
from .svm import (
    BinaryModel,
    MulticlassModel,
    SvmParams,
    confusion_matrix,
    decision,
    grid_search,
    overall_accuracy,
    predict,
    rbf_kernel,
    train_binary,
    train_multiclass,
)

__version__ = "0.1.0"
