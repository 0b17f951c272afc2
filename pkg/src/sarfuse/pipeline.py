"""End-to-end fuse / evaluate / classify steps operating on in-memory objects."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .features import PatchParams, build_feature_stack, extract_patches, split_dataset
from .raster import LabelMap, Raster
from .svm import (
    MulticlassModel,
    SvmParams,
    confusion_matrix,
    grid_search,
    overall_accuracy,
    predict_many,
    train_multiclass,
)

MODES = ("svm", "psvm", "lbp_psvm")
MODE_TITLES = {"svm": "SVM", "psvm": "PSVM", "lbp_psvm": "LBP-PSVM"}


def normalize_mode(mode: str) -> str:
    m = mode.replace("-", "_").lower()
    if m not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of svm, psvm, lbp-psvm")
    return m


def patch_params_for(mode: str, cfg: PipelineConfig) -> PatchParams:
    mode = normalize_mode(mode)
    if mode == "svm":
        return PatchParams(1, include_lbp=False)
    return PatchParams(cfg.patch_side, include_lbp=mode == "lbp_psvm")


@dataclass
class ClassificationResult:
    mode: str
    patch: PatchParams
    svm: SvmParams
    cv_accuracy: float | None
    oa: float
    classes: list[int]
    confusion: np.ndarray
    classified: LabelMap
    model: MulticlassModel
    n_train: int
    n_test: int

    def report(self) -> str:
        lines = [
            f"mode={self.mode}",
            f"patch_side={self.patch.patch_side}",
            f"include_lbp={'true' if self.patch.include_lbp else 'false'}",
            f"C={self.svm.C!r}",
            f"gamma={self.svm.gamma!r}",
        ]
        if self.cv_accuracy is not None:
            lines.append(f"cv_accuracy={self.cv_accuracy:.4f}")
        lines += [
            f"n_train={self.n_train}",
            f"n_test={self.n_test}",
            f"OA={self.oa:.4f}",
            "confusion (rows=truth, cols=predicted)",
            "class," + ",".join(str(c) for c in self.classes),
        ]
        for c, row in zip(self.classes, self.confusion):
            lines.append(f"{c}," + ",".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"


def classify_scene(fused: Raster, gt: LabelMap, cfg: PipelineConfig, mode: str) -> ClassificationResult:
    """Train on a stratified split of the labelled patches and score the rest."""
    mode = normalize_mode(mode)
    patch = patch_params_for(mode, cfg)
    stack = build_feature_stack(fused, cfg.lbp, patch.include_lbp)
    data = extract_patches(stack, gt, patch)
    if len(data.classes) < 2:
        raise ValueError(f"need at least 2 labelled classes with full patches, found {data.classes}")
    train, test = split_dataset(data, cfg.split.train_fraction, cfg.seed)

    params = cfg.svm
    cv = None
    if cfg.grid.enabled:
        C, gamma, cv = grid_search(
            train, cfg.grid.c_grid, cfg.grid.gamma_grid, cfg.grid.folds, cfg.seed,
            tol=params.tol, max_passes=params.max_passes,
        )
        params = SvmParams(C, gamma, params.tol, params.max_passes)
    model = train_multiclass(train, params)

    if len(test):
        pred = predict_many(model, test.vectors)
        oa = overall_accuracy(pred, test.labels)
        confusion = confusion_matrix(pred, test.labels, data.classes)
    else:
        oa = float("nan")
        confusion = np.zeros((len(data.classes),) * 2, dtype=np.int64)

    classified = np.zeros((gt.height, gt.width), dtype=np.uint16)
    all_pred = predict_many(model, data.vectors)
    classified[data.positions[:, 0], data.positions[:, 1]] = all_pred
    return ClassificationResult(
        mode, patch, params, cv, oa, data.classes, confusion, LabelMap(classified), model,
        len(train), len(test),
    )


def summary_table(results: dict[str, float]) -> str:
    """OA table in the fixed column order SVM, PSVM, LBP-PSVM."""
    header = "measure," + ",".join(MODE_TITLES[m] for m in MODES)
    row = "OA," + ",".join(f"{results[m]:.2f}" if m in results else "-" for m in MODES)
    return header + "\n" + row + "\n"
