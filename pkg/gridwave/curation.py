"""
Stage-one dataset curation: sharpness, edge density, texture and entropy
scores per image, absolute blur/flat rejection, then rank-based top-fraction
selection.

Every score is computed on the luma plane. Convolutions use 'valid' mode,
so only interior pixels contribute and no padding rule leaks into the
numbers.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import signal, stats
from skimage.feature import graycomatrix, graycoprops

from . import config
from .core import PathLike, load_image, luma
from .errors import ConfigError, DatasetError, ImageTooSmall
from .models import CurationScores, Image

LAPLACIAN_KERNEL = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=np.float64)
SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = SOBEL_X.T

# std below this makes a GLCM marginal degenerate
_GLCM_STD_EPS = 1e-15


def _luma_interior(img: Image) -> np.ndarray:
    plane = luma(img)
    if plane.shape[0] < 3 or plane.shape[1] < 3:
        raise ImageTooSmall(f"need at least 3x3 pixels, got {plane.shape[0]}x{plane.shape[1]}")
    return plane


def laplacian_variance(img: Image) -> float:
    response = signal.correlate2d(_luma_interior(img), LAPLACIAN_KERNEL, mode="valid")
    return float(response.var())


def sobel_mean_gradient(img: Image) -> float:
    plane = _luma_interior(img)
    gx = signal.correlate2d(plane, SOBEL_X, mode="valid")
    gy = signal.correlate2d(plane, SOBEL_Y, mode="valid")
    return float(np.mean(np.hypot(gx, gy)))


def quantize_levels(plane: np.ndarray, levels: int) -> np.ndarray:
    """Uniform bins over [0, 1]; 1.0 lands in the top bin"""
    clipped = np.clip(plane, 0.0, 1.0)
    return np.minimum(np.floor(clipped * levels), levels - 1).astype(np.uint8)


def glcm_features(img: Image, offset: Tuple[int, int] = (0, 1),
                  levels: int = config.GLCM_LEVELS) -> Tuple[float, float]:
    """Contrast and correlation of the symmetric normalized co-occurrence matrix at one offset"""
    if levels < 2 or levels > 256:
        raise ConfigError(f"levels must lie in [2, 256], got {levels}")
    dr, dc = int(offset[0]), int(offset[1])
    if dr == 0 and dc == 0:
        raise ConfigError("GLCM offset (0, 0) pairs every pixel with itself")

    plane = luma(img)
    if abs(dr) >= plane.shape[0] or abs(dc) >= plane.shape[1]:
        raise ImageTooSmall(f"offset {offset} does not fit a {plane.shape[0]}x{plane.shape[1]} image")

    glcm = graycomatrix(
        quantize_levels(plane, levels),
        distances=[math.hypot(dr, dc)],
        angles=[math.atan2(dr, dc)],
        levels=levels,
        symmetric=True,
        normed=True,
    )
    contrast = float(graycoprops(glcm, "contrast")[0, 0])

    # graycoprops reports 1 for a degenerate marginal, we report 0
    p = glcm[:, :, 0, 0]
    idx = np.arange(levels, dtype=np.float64)
    marginal = p.sum(axis=1)
    mean = np.sum(idx * marginal)
    std = math.sqrt(np.sum(marginal * (idx - mean) ** 2))
    if std < _GLCM_STD_EPS:
        return contrast, 0.0
    return contrast, float(graycoprops(glcm, "correlation")[0, 0])


def glcm_texture(img: Image, offsets: Sequence[Tuple[int, int]] = config.GLCM_OFFSETS,
                 levels: int = config.GLCM_LEVELS) -> Tuple[float, float]:
    """glcm_features averaged over several offsets"""
    pairs = [glcm_features(img, offset, levels) for offset in offsets]
    return float(np.mean([p[0] for p in pairs])), float(np.mean([p[1] for p in pairs]))


def shannon_entropy(img: Image, bins: int = config.ENTROPY_BINS) -> float:
    """Entropy in bits of the luma histogram over [0, 1]"""
    if bins < 2:
        raise ConfigError(f"bins must be >= 2, got {bins}")
    counts, _ = np.histogram(np.clip(luma(img), 0.0, 1.0), bins=bins, range=(0.0, 1.0))
    return float(stats.entropy(counts, base=2))


def score_image(path: PathLike, offsets: Sequence[Tuple[int, int]] = config.GLCM_OFFSETS,
                levels: int = config.GLCM_LEVELS) -> CurationScores:
    img = load_image(path)
    contrast, correlation = glcm_texture(img, offsets, levels)
    return CurationScores(
        path=str(path),
        laplacian_var=laplacian_variance(img),
        sobel_mean=sobel_mean_gradient(img),
        glcm_contrast=contrast,
        glcm_correlation=correlation,
        entropy_bits=shannon_entropy(img),
    )


def score_paths(paths: Iterable[PathLike], workers: Optional[int] = None) -> List[CurationScores]:
    paths = sorted(str(Path(p)) for p in paths)
    with ThreadPoolExecutor(max_workers=workers or config.MAX_WORKERS) as pool:
        scores = list(pool.map(score_image, paths))
    return sorted(scores, key=lambda s: s.path)


def _percentiles(values: Sequence[float]) -> np.ndarray:
    if len(values) == 1:
        return np.ones(1)
    ranks = stats.rankdata(values, method="average")
    return (ranks - 1.0) / (len(values) - 1.0)


def rank_and_filter(scores: Sequence[CurationScores],
                    keep_fraction: float = config.KEEP_FRACTION) -> Tuple[List[CurationScores], List[CurationScores]]:
    """
    Keep the ceil(keep_fraction * N) images with the highest aggregate.

    The aggregate is the mean rank percentile of glcm_contrast,
    |glcm_correlation| and entropy_bits, plus the external score as a
    fourth column when every entry carries one. Ties go to the
    lexicographically smaller path.
    """
    if not scores:
        raise DatasetError("nothing to rank: empty score list")
    if not 0.0 < keep_fraction <= 1.0:
        raise ConfigError(f"keep_fraction must lie in (0, 1], got {keep_fraction}")

    columns = [
        [s.glcm_contrast for s in scores],
        [abs(s.glcm_correlation) for s in scores],
        [s.entropy_bits for s in scores],
    ]
    externals = [s.external for s in scores]
    if all(e is not None for e in externals):
        columns.append(externals)
    elif any(e is not None for e in externals):
        raise DatasetError("external scores are present for some images but not all")

    aggregate = np.mean([_percentiles(col) for col in columns], axis=0)
    ranked = sorted(
        (replace(s, aggregate=float(a)) for s, a in zip(scores, aggregate)),
        key=lambda s: (-s.aggregate, s.path),
    )
    n_keep = math.ceil(keep_fraction * len(ranked))
    return ranked[:n_keep], ranked[n_keep:]


def apply_thresholds(scores: Sequence[CurationScores], min_laplacian_var: float = 0.0,
                     min_sobel_mean: float = 0.0) -> Tuple[List[CurationScores], List[dict]]:
    """Absolute blur/flat cut applied before ranking"""
    passed, rejected = [], []
    for s in scores:
        if s.laplacian_var < min_laplacian_var:
            rejected.append({"path": s.path, "reason": "blur"})
        elif s.sobel_mean < min_sobel_mean:
            rejected.append({"path": s.path, "reason": "flat"})
        else:
            passed.append(s)
    return passed, rejected


def load_thresholds(path: PathLike = config.CURATION_THRESHOLDS_FILE) -> Dict[str, float]:
    path = Path(path)
    if not path.is_file():
        logger.warning(f"[curate] no thresholds file at {path}, absolute cut disabled")
        return {"min_laplacian_var": 0.0, "min_sobel_mean": 0.0}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid thresholds file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"thresholds file {path} must hold a JSON object")
    unknown = sorted(set(data) - {"min_laplacian_var", "min_sobel_mean"})
    if unknown:
        raise ConfigError(f"unknown threshold keys in {path}: {', '.join(unknown)}")
    return {
        "min_laplacian_var": float(data.get("min_laplacian_var", 0.0)),
        "min_sobel_mean": float(data.get("min_sobel_mean", 0.0)),
    }


def load_external_scores(path: PathLike) -> Dict[str, float]:
    """{image file name or path: score} written by an outside quality model"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DatasetError(f"cannot read external scores {path}: {e}") from e
    if not isinstance(data, dict):
        raise DatasetError(f"external score file {path} must hold a JSON object")
    return {str(k): float(v) for k, v in data.items()}


def _attach_external(scores: List[CurationScores], external: Dict[str, float]) -> List[CurationScores]:
    attached = []
    for s in scores:
        value = external.get(s.path, external.get(Path(s.path).name))
        if value is None:
            raise DatasetError(f"no external score for {s.path}")
        attached.append(replace(s, external=value))
    return attached


def curate(paths: Iterable[PathLike], keep_fraction: float = config.KEEP_FRACTION,
           thresholds: Optional[Dict[str, float]] = None,
           external: Optional[Dict[str, float]] = None,
           workers: Optional[int] = None) -> dict:
    """Score, cut and rank a batch of images into a manifest"""
    paths = list(paths)
    if not paths:
        raise DatasetError("no images to curate")
    logger.info(f"[curate] scoring {len(paths)} images")

    scores = score_paths(paths, workers)
    if external is not None:
        scores = _attach_external(scores, external)

    thresholds = thresholds or {}
    passed, cut = apply_thresholds(
        scores,
        thresholds.get("min_laplacian_var", 0.0),
        thresholds.get("min_sobel_mean", 0.0),
    )
    kept, ranked_out = rank_and_filter(passed, keep_fraction) if passed else ([], [])
    rejected = cut + [{"path": s.path, "reason": "rank"} for s in ranked_out]
    logger.info(f"[curate] kept {len(kept)}, rejected {len(rejected)} ({len(cut)} by threshold)")

    by_path = {s.path: s for s in kept + ranked_out}
    return {
        "keep_fraction": keep_fraction,
        "thresholds": {k: thresholds.get(k, 0.0) for k in ("min_laplacian_var", "min_sobel_mean")},
        "scores": [by_path.get(s.path, s).to_dict() for s in scores],
        "kept": sorted(s.path for s in kept),
        "rejected": sorted(rejected, key=lambda r: r["path"]),
    }
