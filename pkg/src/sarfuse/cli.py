"""Command-line interface: ``sarfuse {fuse,evaluate,classify,pipeline,quicklook}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import PipelineConfig, load_config, parse_pairs
from .fusion import fuse_bandwise
from .metrics import evaluate
from .pipeline import MODES, classify_scene, normalize_mode, summary_table
from .raster import RasterFormatError, export_quicklook, load_labels, load_raster, save_labels, save_raster
from .svm import save_model

log = logging.getLogger("sarfuse")

EXIT_OK = 0
EXIT_IO = 1
EXIT_INPUT = 2


def _fusion_lines(cfg: PipelineConfig) -> str:
    keep = ("diffusion.", "fusion.")
    return "".join(f"{k}={v}\n" for k, v in cfg.items() if k.startswith(keep))


def cmd_fuse(sar_path, opt_path, out_path, config: PipelineConfig) -> int:
    sar = load_raster(sar_path)
    opt = load_raster(opt_path)
    if sar.bands != 1 or (sar.height, sar.width) != (opt.height, opt.width):
        raise ValueError(
            f"shape mismatch: SAR is {sar.bands}x{sar.height}x{sar.width} (bands x rows x cols), "
            f"optical is {opt.bands}x{opt.height}x{opt.width}; need a 1-band SAR of equal size"
        )
    fused = fuse_bandwise(sar, opt, config.fusion)
    save_raster(fused, out_path)
    print(_fusion_lines(config), end="")
    return EXIT_OK


def cmd_evaluate(fused_path, reference_path, config: PipelineConfig, out_path=None) -> int:
    report = evaluate(load_raster(fused_path), load_raster(reference_path), config.metrics)
    csv = report.to_csv()
    print(csv, end="")
    if out_path is not None:
        out = Path(out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(csv, encoding="utf-8")
    return EXIT_OK


def cmd_classify(fused_path, labels_path, config: PipelineConfig, mode: str, out_path=None) -> int:
    result = classify_scene(load_raster(fused_path), load_labels(labels_path), config, mode)
    text = result.report()
    print(text, end="")
    if out_path is not None:
        save_labels(result.classified, out_path)
        stem = Path(out_path).with_suffix("") if Path(out_path).suffix in (".hdr", ".raw") else Path(out_path)
        stem.with_name(stem.name + "_report.txt").write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_pipeline(sar_path, opt_path, labels_path, outdir, config: PipelineConfig) -> int:
    """Fuse, score against the optical input, then classify in all three modes."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    sar = load_raster(sar_path)
    opt = load_raster(opt_path)
    fused = fuse_bandwise(sar, opt, config.fusion)
    save_raster(fused, outdir / "fused")
    report = evaluate(fused, opt, config.metrics)
    (outdir / "quality.txt").write_text(report.to_text(), encoding="utf-8")
    (outdir / "quality.csv").write_text(report.to_csv(), encoding="utf-8")
    print(report.to_csv(), end="")

    manifest = [
        f"input.sar={Path(sar_path)}",
        f"input.optical={Path(opt_path)}",
        f"input.labels={'' if labels_path is None else Path(labels_path)}",
    ]
    (outdir / "manifest.txt").write_text(
        "# re-run with --config manifest.txt\n" + "\n".join("# " + m for m in manifest) + "\n"
        + config.to_text(),
        encoding="utf-8",
    )

    if labels_path is None or not (Path(labels_path).exists() or Path(str(labels_path) + ".hdr").exists()):
        log.warning("label file %s not found; classification skipped", labels_path)
        print(f"warning: label file {labels_path} not found; classification skipped", file=sys.stderr)
        return EXIT_OK

    gt = load_labels(labels_path)
    oa = {}
    for mode in MODES:
        result = classify_scene(fused, gt, config, mode)
        oa[mode] = result.oa
        (outdir / f"classify_{mode}.txt").write_text(result.report(), encoding="utf-8")
        save_labels(result.classified, outdir / f"classified_{mode}")
        save_model(result.model, outdir / f"model_{mode}.txt")
    table = summary_table(oa)
    (outdir / "summary.csv").write_text(table, encoding="utf-8")
    print(table, end="")
    return EXIT_OK


def cmd_quicklook(raster_path, bands, out_path) -> int:
    export_quicklook(load_raster(raster_path), bands, out_path)
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, out_required=False):
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a single config key (repeatable)")
    p.add_argument("--out", required=out_required, help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sarfuse", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="fuse a 1-band SAR raster into an optical raster")
    p.add_argument("sar")
    p.add_argument("optical")
    _add_common(p, out_required=True)

    p = sub.add_parser("evaluate", help="score a fused raster against a reference")
    p.add_argument("fused")
    p.add_argument("reference")
    _add_common(p)

    p = sub.add_parser("classify", help="patch-based SVM classification of a fused raster")
    p.add_argument("fused")
    p.add_argument("labels")
    p.add_argument("--mode", default="lbp-psvm", choices=["svm", "psvm", "lbp-psvm"])
    _add_common(p)

    p = sub.add_parser("pipeline", help="fuse, evaluate and classify in all modes")
    p.add_argument("sar")
    p.add_argument("optical")
    p.add_argument("labels", nargs="?")
    _add_common(p, out_required=True)

    p = sub.add_parser("quicklook", help="write a PPM colour composite of three bands")
    p.add_argument("raster")
    p.add_argument("--bands", default="3,0,1", help="comma-separated band indices (default NIR,R,G)")
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "quicklook":
            bands = [int(b) for b in args.bands.split(",")]
            return cmd_quicklook(args.raster, bands, args.out)
        overrides = parse_pairs(args.set, "--set")
        if args.seed is not None:
            overrides["seed"] = str(args.seed)
        cfg = load_config(args.config, overrides)
        if args.command == "fuse":
            return cmd_fuse(args.sar, args.optical, args.out, cfg)
        if args.command == "evaluate":
            return cmd_evaluate(args.fused, args.reference, cfg, args.out)
        if args.command == "classify":
            return cmd_classify(args.fused, args.labels, cfg, normalize_mode(args.mode), args.out)
        return cmd_pipeline(args.sar, args.optical, args.labels, args.out, cfg)
    except (ValueError, IndexError, RasterFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
