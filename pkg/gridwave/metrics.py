"""
Full-reference fidelity metrics on the luma channel.

PSNR uses peak 1 and reports PSNR_CAP_DB for identical inputs. SSIM is the
standard Gaussian-window form (11x11, sigma 1.5, K1 0.01, K2 0.03, data
range 1, population covariance). Patch evaluation tiles both images with
non-overlapping squares, drops any remainder strip, and averages the
per-patch values arithmetically.
"""

from typing import Optional, Tuple

import numpy as np
from skimage.metrics import structural_similarity

from . import config
from .core import luma
from .errors import ImageTooSmall, ShapeMismatch
from .models import Image, MetricReport


def _luma_pair(a: Image, b: Image) -> Tuple[np.ndarray, np.ndarray]:
    if a.shape != b.shape:
        raise ShapeMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    return luma(a), luma(b)


def _psnr(ya: np.ndarray, yb: np.ndarray) -> float:
    mse = float(np.mean((ya - yb) ** 2))
    if mse == 0.0:
        return config.PSNR_CAP_DB
    return float(min(10.0 * np.log10(1.0 / mse), config.PSNR_CAP_DB))


def _ssim(ya: np.ndarray, yb: np.ndarray) -> float:
    if min(ya.shape) < config.MIN_SSIM_EXTENT:
        raise ImageTooSmall(f"SSIM needs extents >= {config.MIN_SSIM_EXTENT}, got {ya.shape[0]}x{ya.shape[1]}")
    return float(structural_similarity(
        ya,
        yb,
        data_range=1.0,
        gaussian_weights=True,
        sigma=config.SSIM_SIGMA,
        use_sample_covariance=False,
        K1=config.SSIM_K1,
        K2=config.SSIM_K2,
    ))


def psnr_y(a: Image, b: Image) -> float:
    return _psnr(*_luma_pair(a, b))


def ssim_y(a: Image, b: Image) -> float:
    return _ssim(*_luma_pair(a, b))


def patch_eval(a: Image, b: Image, patch: int) -> MetricReport:
    ya, yb = _luma_pair(a, b)
    h, w = ya.shape
    if patch < 1 or patch > min(h, w):
        raise ShapeMismatch(f"patch {patch} does not fit a {h}x{w} image")

    psnrs, ssims = [], []
    for top in range(0, h - patch + 1, patch):
        for left in range(0, w - patch + 1, patch):
            pa = ya[top:top + patch, left:left + patch]
            pb = yb[top:top + patch, left:left + patch]
            psnrs.append(_psnr(pa, pb))
            ssims.append(_ssim(pa, pb))

    return MetricReport(
        psnr_db=float(np.mean(psnrs)),
        ssim=float(np.mean(ssims)),
        patch_size=patch,
        per_patch_psnr=psnrs,
        per_patch_ssim=ssims,
    )


def metric_report(a: Image, b: Image, patch: Optional[int] = None) -> MetricReport:
    """Whole-image metrics, or the patch protocol when patch is given"""
    if patch is not None:
        return patch_eval(a, b, patch)
    ya, yb = _luma_pair(a, b)
    return MetricReport(psnr_db=_psnr(ya, yb), ssim=_ssim(ya, yb), patch_size=min(ya.shape))
