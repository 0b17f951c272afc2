"""Flat ``key=value`` pipeline configuration.

Keys mirror the parameter objects, e.g. ``diffusion.kappa=30`` or
``svm.c_grid=0.1,1,10``. Unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from .diffusion import DiffusionParams
from .features import LbpParams, PatchParams
from .fusion import FusionParams
from .metrics import MetricParams
from .svm import DEFAULT_C_GRID, DEFAULT_GAMMA_GRID, SvmParams


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "auto", "none") else float(text)


@dataclass(frozen=True)
class GridSpec:
    enabled: bool = False
    c_grid: tuple[float, ...] = DEFAULT_C_GRID
    gamma_grid: tuple[float, ...] = DEFAULT_GAMMA_GRID
    folds: int = 5


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.5


@dataclass(frozen=True)
class PipelineConfig:
    diffusion: DiffusionParams = field(default_factory=DiffusionParams)
    base_weight_sar: float = 0.5
    metrics: MetricParams = field(default_factory=MetricParams)
    lbp: LbpParams = field(default_factory=LbpParams)
    patch_side: int = 3
    svm: SvmParams = field(default_factory=SvmParams)
    grid: GridSpec = field(default_factory=GridSpec)
    split: SplitSpec = field(default_factory=SplitSpec)
    seed: int = 0

    def __post_init__(self):
        # validates the patch side and base weight eagerly
        PatchParams(self.patch_side)
        FusionParams(self.diffusion, self.base_weight_sar)
        if not 0 < self.split.train_fraction <= 1:
            raise ValueError(f"split.train_fraction must lie in (0, 1], got {self.split.train_fraction}")

    @property
    def fusion(self) -> FusionParams:
        return FusionParams(self.diffusion, self.base_weight_sar)

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.items())

    def items(self) -> list[tuple[str, str]]:
        d, m, g = self.diffusion, self.metrics, self.grid
        return [
            ("seed", str(self.seed)),
            ("diffusion.iterations", str(d.iterations)),
            ("diffusion.lambda", repr(d.lam)),
            ("diffusion.kappa", repr(d.kappa)),
            ("diffusion.conductance", d.conductance_variant),
            ("diffusion.neighborhood", d.neighborhood),
            ("fusion.base_weight_sar", repr(self.base_weight_sar)),
            ("metrics.ratio", repr(m.ratio)),
            ("metrics.uiqi_window", str(m.uiqi_window)),
            ("metrics.ssim_window", str(m.ssim_window)),
            ("metrics.dynamic_range", "auto" if m.dynamic_range is None else repr(m.dynamic_range)),
            ("metrics.psnr_cap", repr(m.psnr_cap)),
            ("lbp.samples", str(self.lbp.samples)),
            ("lbp.radius", repr(self.lbp.radius)),
            ("patch.side", str(self.patch_side)),
            ("svm.C", repr(self.svm.C)),
            ("svm.gamma", repr(self.svm.gamma)),
            ("svm.tol", repr(self.svm.tol)),
            ("svm.max_passes", str(self.svm.max_passes)),
            ("svm.grid_search", "true" if g.enabled else "false"),
            ("svm.c_grid", ",".join(repr(v) for v in g.c_grid)),
            ("svm.gamma_grid", ",".join(repr(v) for v in g.gamma_grid)),
            ("svm.folds", str(g.folds)),
            ("split.train_fraction", repr(self.split.train_fraction)),
        ]


# key -> (section, attribute, parser)
_KEYS = {
    "seed": (None, "seed", int),
    "diffusion.iterations": ("diffusion", "iterations", int),
    "diffusion.lambda": ("diffusion", "lam", float),
    "diffusion.kappa": ("diffusion", "kappa", float),
    "diffusion.conductance": ("diffusion", "conductance_variant", str),
    "diffusion.neighborhood": ("diffusion", "neighborhood", str),
    "fusion.base_weight_sar": (None, "base_weight_sar", float),
    "metrics.ratio": ("metrics", "ratio", float),
    "metrics.uiqi_window": ("metrics", "uiqi_window", int),
    "metrics.ssim_window": ("metrics", "ssim_window", int),
    "metrics.dynamic_range": ("metrics", "dynamic_range", _opt_float),
    "metrics.psnr_cap": ("metrics", "psnr_cap", float),
    "lbp.samples": ("lbp", "samples", int),
    "lbp.radius": ("lbp", "radius", float),
    "patch.side": (None, "patch_side", int),
    "svm.C": ("svm", "C", float),
    "svm.gamma": ("svm", "gamma", float),
    "svm.tol": ("svm", "tol", float),
    "svm.max_passes": ("svm", "max_passes", int),
    "svm.grid_search": ("grid", "enabled", _bool),
    "svm.c_grid": ("grid", "c_grid", _floats),
    "svm.gamma_grid": ("grid", "gamma_grid", _floats),
    "svm.folds": ("grid", "folds", int),
    "split.train_fraction": ("split", "train_fraction", float),
}


def parse_pairs(lines: Iterable[str], origin: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{origin}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def apply_overrides(cfg: PipelineConfig, pairs: Mapping[str, str]) -> PipelineConfig:
    top: dict = {}
    sections: dict[str, dict] = {}
    for key, text in pairs.items():
        if key not in _KEYS:
            raise ValueError(f"unknown config key {key!r}")
        section, attr, parse = _KEYS[key]
        try:
            value = parse(text)
        except ValueError as exc:
            raise ValueError(f"bad value for {key}: {text!r}") from exc
        if section is None:
            top[attr] = value
        else:
            sections.setdefault(section, {})[attr] = value
    for section, values in sections.items():
        top[section] = replace(getattr(cfg, section), **values)
    return replace(cfg, **top)


def load_config(path=None, overrides: Mapping[str, str] | None = None) -> PipelineConfig:
    cfg = PipelineConfig()
    if path is not None:
        path = Path(path)
        cfg = apply_overrides(cfg, parse_pairs(path.read_text(encoding="utf-8").splitlines(), str(path)))
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg
