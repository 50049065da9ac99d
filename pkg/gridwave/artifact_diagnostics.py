"""
Periodic grid artifact detectors.

Spectral: the luma plane is detrended (least-squares plane removed) and
tapered with a half-sample-shifted Hann window, then every lattice bin
(k * H / P, l * W / P) up to Nyquist is compared with the median magnitude
of the surrounding 7x7 ring (the bin's own 3x3 core excluded). A bin's
magnitude is the maximum over its 3x3 core so that harmonics landing
between bins on non-divisible extents are still caught. Indices wrap
modulo the extent, which keeps the score invariant under image flips.

Spatial: per quadrant, the luma autocorrelation at lag = period averaged
over both axes; the aggregate is the median over quadrants.
"""

import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import numpy as np
from loguru import logger
from tqdm import tqdm

from . import config
from .core import PathLike, load_image, luma
from .errors import GridwaveError, PeriodOutOfRange
from .models import Grid2D, Image, LagSpec, PeriodicityScore, SpectrumReport
from .periodicity_loss import _quadrant_slices, _plane_autocorrelation

_FLAT_TOLERANCE = 1e-9


def magnitude_spectrum(img: Image) -> Grid2D:
    """|DFT| of the zero-mean luma plane, DC moved to the center"""
    plane = luma(img)
    spectrum = np.abs(np.fft.fft2(plane - plane.mean()))
    return Grid2D(np.fft.fftshift(spectrum))


def log_spectrum(img: Image) -> Image:
    """log(1 + |F|) normalized to [0, 1], ready for PNG export"""
    logged = np.log1p(magnitude_spectrum(img).data)
    span = logged.max() - logged.min()
    if span <= 0:
        return Image(np.zeros_like(logged))
    return Image((logged - logged.min()) / span)


def _detrend(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    rows, cols = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    design = np.column_stack([np.ones(plane.size), rows.ravel(), cols.ravel()])
    coeffs, *_ = np.linalg.lstsq(design, plane.ravel(), rcond=None)
    return plane - (design @ coeffs).reshape(h, w)


def taper(n: int) -> np.ndarray:
    """sin^2(pi (k + 1/2) / n): mirror-symmetric, and its DFT is zero outside bins 0 and +-1"""
    return np.sin(np.pi * (np.arange(n) + 0.5) / n) ** 2


def _detector_spectrum(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    residual = _detrend(plane)
    # a plane (constant or ramp) leaves only rounding noise behind
    if np.ptp(residual) <= _FLAT_TOLERANCE * max(1.0, float(np.abs(plane).max())):
        return np.zeros_like(plane)
    window = np.outer(taper(h), taper(w))
    return np.abs(np.fft.fft2(residual * window))


def harmonic_bins(h: int, w: int, period: int) -> List[Tuple[int, int]]:
    """Signed frequency offsets of every lattice bin of the given period, DC excluded"""
    kmax_r, kmax_c = int(period // 2), int(period // 2)
    seen = set()
    bins = []
    for k in range(-kmax_r, kmax_r + 1):
        for l in range(-kmax_c, kmax_c + 1):
            if k == 0 and l == 0:
                continue
            fr, fc = int(np.round(k * h / period)), int(np.round(l * w / period))
            if abs(fr) > h // 2 or abs(fc) > w // 2:
                continue
            key = (fr % h, fc % w)
            if key in seen:
                continue
            seen.add(key)
            bins.append((fr, fc))
    return bins


def _ring_offsets(radius: int) -> Tuple[np.ndarray, np.ndarray]:
    dr, dc = np.meshgrid(np.arange(-radius, radius + 1), np.arange(-radius, radius + 1), indexing="ij")
    ring = np.maximum(np.abs(dr), np.abs(dc)) > 1
    return dr[ring], dc[ring]


def grid_spike_score(img: Image, period: int = config.ARTIFACT_PERIOD,
                     threshold: float = config.SPIKE_THRESHOLD) -> SpectrumReport:
    """Peak-to-background ratios at the lattice bins of a period-P grid"""
    period = int(period)
    if period < 2:
        raise PeriodOutOfRange(f"period must be >= 2, got {period}")
    if min(img.height, img.width) < 4 * period:
        raise PeriodOutOfRange(
            f"period {period} too large for a {img.height}x{img.width} image (extents must be >= {4 * period})"
        )

    mags = _detector_spectrum(luma(img))
    h, w = mags.shape
    floor = config.SPECTRUM_FLOOR * mags.max() + np.finfo(np.float64).tiny

    bins = harmonic_bins(h, w, period)
    rows = np.array([b[0] for b in bins])[:, None]
    cols = np.array([b[1] for b in bins])[:, None]

    core_r, core_c = np.meshgrid(np.arange(-1, 2), np.arange(-1, 2), indexing="ij")
    peaks = mags[(rows + core_r.ravel()) % h, (cols + core_c.ravel()) % w].max(axis=1)

    ring_r, ring_c = _ring_offsets(config.ANNULUS_RADIUS)
    background = np.median(mags[(rows + ring_r) % h, (cols + ring_c) % w], axis=1)

    ratios = peaks / np.maximum(background, floor)
    score = float(ratios.max()) if ratios.size else 0.0
    return SpectrumReport(
        period=period,
        spike_bins=bins,
        peak_to_background=[float(r) for r in ratios],
        flagged=score > threshold,
        score=score,
        threshold=float(threshold),
    )


def periodicity_score_spatial(img: Image, period: int = config.ARTIFACT_PERIOD,
                              spec: LagSpec = LagSpec(lags=(config.ARTIFACT_PERIOD,))) -> PeriodicityScore:
    """Per-quadrant luma autocorrelation at lag = period, averaged over the lag spec's axes"""
    plane = luma(img)
    slices = _quadrant_slices(plane.shape[0], plane.shape[1], spec.quadrants)
    smallest = min(min(r.stop - r.start, c.stop - c.start) for r, c in slices)
    if not 1 <= period < smallest:
        raise PeriodOutOfRange(f"period {period} must be smaller than the quadrant extent {smallest}")

    per_quadrant = tuple(
        float(np.mean([_plane_autocorrelation(plane[rows, cols], axis, period) for axis in spec.axes]))
        for rows, cols in slices
    )
    return PeriodicityScore(period=period, per_quadrant=per_quadrant, aggregate=float(np.median(per_quadrant)))


def scan_image(path: PathLike, period: int, threshold: float) -> dict:
    """One scan record; an image the detectors reject yields a record with an error entry instead"""
    try:
        return _scan_record(path, period, threshold)
    except GridwaveError as e:
        logger.warning(f"[scan] skipping {path}: {e}")
        return {"path": str(path), "error": str(e)}


def _scan_record(path: PathLike, period: int, threshold: float) -> dict:
    img = load_image(path)
    spectral = grid_spike_score(img, period, threshold)
    spatial = periodicity_score_spatial(img, period)
    return {
        "path": str(path),
        "spectrum": spectral.to_dict(),
        "periodicity": spatial.to_dict(),
        "spatial_flagged": spatial.flagged(),
    }


def scan_paths(paths: Iterable[PathLike], period: int = config.ARTIFACT_PERIOD,
               threshold: float = config.SPIKE_THRESHOLD,
               workers: Optional[int] = None) -> List[dict]:
    """Scan images on a bounded thread pool; records come back sorted by path, failures included"""
    paths = sorted(str(Path(p)) for p in paths)
    logger.info(f"[scan] {len(paths)} images, period {period}, threshold {threshold}")
    with ThreadPoolExecutor(max_workers=workers or config.MAX_WORKERS) as pool:
        jobs = pool.map(lambda p: scan_image(p, period, threshold), paths)
        records = list(tqdm(jobs, total=len(paths), desc="scan", unit="img", disable=not sys.stderr.isatty()))
    scanned = [r for r in records if "error" not in r]
    flagged = sum(r["spectrum"]["flagged"] for r in scanned)
    logger.info(f"[scan] {flagged}/{len(scanned)} flagged, {len(records) - len(scanned)} skipped")
    return sorted(records, key=lambda r: r["path"])
