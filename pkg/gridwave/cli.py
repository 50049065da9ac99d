"""
gridwave command line.

Usage:
    python run.py <subcommand> [options]

Examples:
    python run.py rope-analyze --theta 100 --d 56 --threshold 5
    python run.py artifact-scan out/ --period 32 --json scan.json
    python run.py train --config data/toy_config.json --dataset corpus/train --iterations 200 --out ckpt/

Exit codes: 0 success, 1 bad input data, 2 usage error.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
from loguru import logger

from . import config
from .artifact_diagnostics import log_spectrum, scan_paths
from .core import load_image, save_image
from .curation import curate, load_external_scores, load_thresholds
from .errors import ConfigError, GridwaveError, ImageFileMissing
from .latent_pack import periodic_tile_demo
from .metrics import metric_report
from .models import Image, LagSpec, RopeConfig, RunConfig, Seed, ToyModelConfig
from .periodicity_loss import autocorrelation_terms, l_ap_with_gradient
from .reports_store import dumps, envelope, load_json, save_csv, save_json, save_text
from .rope2d import adjacent_similarity_map, phase_delta_table, similarity_zone_size, strong_bandwidth

USAGE_ERROR = 2
DOMAIN_ERROR = 1


def configure_logging(verbose: bool = False) -> None:
    logger.remove()
    logger.add(
        sys.stderr,
        level="DEBUG" if verbose else config.LOG_LEVEL,
        format="{time:HH:mm:ss} | {level: <7} | {message}",
    )


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _image_paths(target: str) -> List[Path]:
    path = Path(target)
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.suffix.lower() == ".png")
    if path.is_file():
        return [path]
    raise ImageFileMissing(f"no such file or directory: {path}")


def load_toy_config(path: Optional[str] = None) -> ToyModelConfig:
    """Read a ToyModelConfig JSON file; without a path the shipped template is used"""
    if path is None:
        path = config.TOY_CONFIG_TEMPLATE
        if not path.is_file():
            logger.warning(f"[config] no template at {path}, using built-in defaults")
            return ToyModelConfig()
    try:
        data = load_json(path)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    return ToyModelConfig.from_dict(data)


def _run_config(args: argparse.Namespace) -> RunConfig:
    options = {
        k: (list(v) if isinstance(v, tuple) else v)
        for k, v in vars(args).items()
        if k not in ("handler", "verbose", "command")
    }
    return RunConfig(subcommand=args.command, options=options)


def _emit(args: argparse.Namespace, body: dict, out: Optional[str] = None) -> None:
    report = envelope(_run_config(args), body)
    if out and out != "-":
        save_json(out, report)
    else:
        sys.stdout.write(dumps(report))


def cmd_rope_analyze(args) -> int:
    cfg = RopeConfig(d=args.d, theta=args.theta, grid_h=args.grid, grid_w=args.grid)
    table = phase_delta_table(cfg, args.threshold)
    body = {
        "strong_dims": strong_bandwidth(cfg, args.threshold),
        "pairs": cfg.pairs,
        "phase_deltas": [row["radians"] for row in table],
    }
    if args.csv:
        save_csv(args.csv, ("index", "radians", "degrees", "strong"),
                 [(r["index"], repr(r["radians"]), repr(r["degrees"]), int(r["strong"])) for r in table])

    if args.similarity or args.map_csv or args.map_png:
        grid = adjacent_similarity_map(cfg, args.samples, Seed(args.seed))
        body["similarity_zone"] = {"level": args.zone_level, "cells": similarity_zone_size(grid, args.zone_level)}
        if args.map_csv:
            save_csv(args.map_csv, None, [[repr(float(v)) for v in row] for row in grid.data])
        if args.map_png:
            lo, hi = grid.data.min(), grid.data.max()
            save_image(Image((grid.data - lo) / (hi - lo) if hi > lo else np.zeros_like(grid.data)), args.map_png)

    _emit(args, body, args.json)
    return 0


def cmd_artifact_scan(args) -> int:
    paths = _image_paths(args.target)
    records = scan_paths(paths, args.period, args.threshold, args.workers)
    scanned = [r for r in records if "error" not in r]
    if args.spectrum_png:
        out_dir = Path(args.spectrum_png)
        out_dir.mkdir(parents=True, exist_ok=True)
        for record in scanned:
            path = Path(record["path"])
            save_image(log_spectrum(load_image(path)), out_dir / f"{path.stem}_spectrum.png")
    skipped = [r for r in records if "error" in r]
    _emit(args, {"images": scanned, "skipped": skipped}, args.json)
    return 0


def cmd_demo_tile(args) -> int:
    img = periodic_tile_demo(args.token, args.h, args.w, args.f)
    save_image(img, args.out)
    logger.info(f"[demo-tile] wrote {img.height}x{img.width} tile demo to {args.out}")
    _emit(args, {"height": img.height, "width": img.width, "period": args.f, "output": args.out}, args.json)
    return 0


def cmd_loss_eval(args) -> int:
    spec = LagSpec(lags=args.lags, quadrants=args.quadrants)
    pred, gt = load_image(args.pred), load_image(args.gt)
    loss, grad = l_ap_with_gradient(pred, gt, spec)
    body = {
        "loss": loss,
        "lag_spec": spec.to_dict(),
        "pred_terms": autocorrelation_terms(pred, spec),
        "gt_terms": autocorrelation_terms(gt, spec),
    }
    if args.gradient_norm:
        body["gradient_l2"] = float(np.linalg.norm(grad))
    _emit(args, body, args.json)
    return 0


def cmd_curate(args) -> int:
    thresholds = load_thresholds(args.thresholds)
    external = load_external_scores(args.external_scores) if args.external_scores else None
    manifest = curate(_image_paths(args.target), args.keep, thresholds, external, args.workers)
    _emit(args, manifest, args.out)
    return 0


def cmd_train(args) -> int:
    from .one_step_sr.trainer import train_toy

    cfg = load_toy_config(args.config)
    result = train_toy(cfg, args.dataset, args.iterations, args.out, progress=sys.stderr.isatty())
    body = {
        "model": cfg.to_dict(),
        "initial_mse": result.initial_mse,
        "final_mse": result.final_mse,
        "final_loss": result.log[-1][3],
        "checkpoint": str(result.checkpoint),
    }
    _emit(args, body, str(Path(args.out) / "train_report.json"))
    return 0


def cmd_infer(args) -> int:
    from .one_step_sr.trainer import load_checkpoint, one_step_infer

    model = load_checkpoint(args.checkpoint)
    sr = one_step_infer(model, load_image(args.input))
    save_image(sr, args.out)
    logger.info(f"[infer] wrote {sr.height}x{sr.width} image to {args.out}")
    return 0


def cmd_ablate(args) -> int:
    from .one_step_sr.ablation import render_html, run_ablation

    cfg = load_toy_config(args.config)
    report = run_ablation(cfg, args.dataset, args.iterations, args.eval, progress=sys.stderr.isatty())
    body = report.to_dict()
    body["model"] = cfg.to_dict()
    _emit(args, body, args.json)
    if args.html:
        save_text(args.html, render_html(report))
    return 0


def cmd_metrics(args) -> int:
    report = metric_report(load_image(args.a), load_image(args.b), args.patch)
    _emit(args, report.to_dict(), args.json)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridwave", description="Grid artifact analysis for patch-based image models")
    parser.add_argument("--version", action="version", version=f"gridwave {config.ARTIFACT_VERSION}")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", metavar="<subcommand>")

    p = sub.add_parser("rope-analyze", help="Phase deltas, strong bandwidth and similarity maps")
    p.add_argument("--theta", type=float, default=config.THETA_DEFAULT)
    p.add_argument("--d", type=int, default=config.ROPE_DIM, help="Per-axis feature dimension")
    p.add_argument("--threshold", type=float, default=config.PHASE_THRESHOLD_DEG, help="Degrees")
    p.add_argument("--grid", type=int, default=config.ANALYSIS_GRID)
    p.add_argument("--samples", type=int, default=config.ANALYSIS_SAMPLES)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--zone-level", type=float, default=config.SIMILARITY_ZONE_LEVEL)
    p.add_argument("--similarity", action="store_true", help="Also compute the similarity zone size")
    p.add_argument("--csv", help="Write the per-pair phase table")
    p.add_argument("--map-csv", help="Write the similarity map as CSV")
    p.add_argument("--map-png", help="Write the similarity map as PNG")
    p.add_argument("--json", nargs="?", const="-", help="Write the report here (stdout when omitted or '-')")
    p.set_defaults(handler=cmd_rope_analyze)

    p = sub.add_parser("artifact-scan", help="Spectral and spatial grid artifact detection")
    p.add_argument("target", help="PNG file or directory")
    p.add_argument("--period", type=int, default=config.ARTIFACT_PERIOD)
    p.add_argument("--threshold", type=float, default=config.SPIKE_THRESHOLD)
    p.add_argument("--workers", type=int, default=config.MAX_WORKERS)
    p.add_argument("--spectrum-png", help="Directory for log-spectrum PNGs")
    p.add_argument("--json", nargs="?", const="-", help="Write the report here (stdout when omitted or '-')")
    p.set_defaults(handler=cmd_artifact_scan)

    p = sub.add_parser("demo-tile", help="Decode a grid of identical tokens")
    p.add_argument("--token", type=_float_list, required=True, help="Comma-separated token values")
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--f", type=int, required=True, help="Pack factor")
    p.add_argument("--out", required=True)
    p.add_argument("--json", nargs="?", const="-", help="Write the report here (stdout when omitted or '-')")
    p.set_defaults(handler=cmd_demo_tile)

    p = sub.add_parser("loss-eval", help="Autocorrelation terms and periodicity loss of an image pair")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--lags", type=_int_list, default=config.DEFAULT_LAGS)
    p.add_argument("--quadrants", type=int, choices=(1, 4), default=config.QUADRANTS)
    p.add_argument("--gradient-norm", action="store_true")
    p.add_argument("--json", nargs="?", const="-", help="Write the report here (stdout when omitted or '-')")
    p.set_defaults(handler=cmd_loss_eval)

    p = sub.add_parser("curate", help="Score and filter an image directory")
    p.add_argument("target", help="PNG file or directory")
    p.add_argument("--keep", type=float, default=config.KEEP_FRACTION)
    p.add_argument("--thresholds", default=str(config.CURATION_THRESHOLDS_FILE))
    p.add_argument("--external-scores")
    p.add_argument("--workers", type=int, default=config.MAX_WORKERS)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_curate)

    p = sub.add_parser("train", help="Train the toy one-step denoiser")
    p.add_argument("--config")
    p.add_argument("--dataset", required=True)
    p.add_argument("--iterations", type=int, required=True)
    p.add_argument("--out", required=True, help="Directory for checkpoint, log and report")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("infer", help="One-step super-resolution with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_infer)

    p = sub.add_parser("ablate", help="Train and evaluate the four ablation arms")
    p.add_argument("--config")
    p.add_argument("--dataset", required=True)
    p.add_argument("--eval", required=True)
    p.add_argument("--iterations", type=int, required=True)
    p.add_argument("--json", nargs="?", const="-", help="Write the report here (stdout when omitted or '-')")
    p.add_argument("--html")
    p.set_defaults(handler=cmd_ablate)

    p = sub.add_parser("metrics", help="Y-channel PSNR and SSIM")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--patch", type=int)
    p.add_argument("--json", nargs="?", const="-", help="Write the report here (stdout when omitted or '-')")
    p.set_defaults(handler=cmd_metrics)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return USAGE_ERROR
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return USAGE_ERROR

    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except GridwaveError as e:
        logger.error(f"[{args.command}] {e}")
        return DOMAIN_ERROR
