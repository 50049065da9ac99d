"""
Two-axis rotary positional embedding.

A feature vector holds 2*d values: the first d belong to the height axis,
the next d to the width axis. Inside each half, values (2i, 2i+1) form
pair i and rotate by ``m * theta**(-2i/d)`` where m is the token's
coordinate on that axis. All math is binary64.
"""

from typing import List, Sequence, Tuple

import numpy as np

from . import config
from .core import rng_stream
from .errors import ConfigError, ShapeMismatch
from .models import Grid2D, RopeConfig, Seed


def phase_deltas(cfg: RopeConfig) -> np.ndarray:
    """Rotation angle difference between adjacent tokens for each pair, in radians"""
    exponents = -2.0 * np.arange(cfg.pairs) / cfg.d
    return np.power(float(cfg.theta), exponents)


def strong_bandwidth(cfg: RopeConfig, threshold_deg: float = config.PHASE_THRESHOLD_DEG) -> int:
    """Number of pairs whose adjacent-token rotation exceeds threshold_deg"""
    if not threshold_deg > 0:
        raise ConfigError(f"threshold must be positive, got {threshold_deg}")
    return int(np.count_nonzero(phase_deltas(cfg) > np.deg2rad(threshold_deg)))


def phase_delta_table(cfg: RopeConfig, threshold_deg: float = config.PHASE_THRESHOLD_DEG) -> List[dict]:
    deltas = phase_deltas(cfg)
    limit = np.deg2rad(threshold_deg)
    return [
        {"index": i, "radians": float(r), "degrees": float(np.rad2deg(r)), "strong": bool(r > limit)}
        for i, r in enumerate(deltas)
    ]


def _angles(pos_h, pos_w, deltas: np.ndarray) -> np.ndarray:
    """Per-pair rotation angles, shape (..., d): height pairs first, then width pairs"""
    pos_h = np.asarray(pos_h, dtype=np.float64)[..., None]
    pos_w = np.asarray(pos_w, dtype=np.float64)[..., None]
    return np.concatenate(np.broadcast_arrays(pos_h * deltas, pos_w * deltas), axis=-1)


def _rotate(values: np.ndarray, angles: np.ndarray) -> np.ndarray:
    cos, sin = np.cos(angles), np.sin(angles)
    even, odd = values[..., 0::2], values[..., 1::2]
    rotated = np.stack([even * cos - odd * sin, even * sin + odd * cos], axis=-1)
    return rotated.reshape(values.shape)


def rotate_features(v: Sequence[float], pos: Tuple[int, int], cfg: RopeConfig) -> np.ndarray:
    """
    Rotate one feature vector to token position pos = (m_h, m_w).

    Positions outside the configured grid (including negative ones) are
    accepted; the rotation is defined for any integer coordinate.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (2 * cfg.d,):
        raise ShapeMismatch(f"feature vector must have length {2 * cfg.d}, got {v.shape}")
    return _rotate(v, _angles(pos[0], pos[1], phase_deltas(cfg)))


def position_tables(cfg: RopeConfig, pos_h, pos_w) -> Tuple[np.ndarray, np.ndarray]:
    """cos/sin tables of shape (n, d) for n tokens at the given coordinates"""
    angles = _angles(np.ravel(pos_h), np.ravel(pos_w), phase_deltas(cfg))
    return np.cos(angles), np.sin(angles)


def grid_positions(h: int, w: int) -> Tuple[np.ndarray, np.ndarray]:
    """Row-major (m_h, m_w) coordinates of an h x w token grid"""
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    return rows.ravel(), cols.ravel()


def rotation_tables(cfg: RopeConfig, h: int, w: int) -> Tuple[np.ndarray, np.ndarray]:
    """cos/sin tables of shape (h*w, d) for a row-major token grid"""
    return position_tables(cfg, *grid_positions(h, w))


def rotate_grid(features: np.ndarray, cfg: RopeConfig) -> np.ndarray:
    """Rotate every vector of an (h, w, 2d) grid to its own grid position"""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 3 or features.shape[2] != 2 * cfg.d:
        raise ShapeMismatch(f"expected (h, w, {2 * cfg.d}) features, got {features.shape}")
    h, w, _ = features.shape
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    return _rotate(features, _angles(rows, cols, phase_deltas(cfg)))


def adjacent_similarity_map(cfg: RopeConfig, num_samples: int = config.ANALYSIS_SAMPLES,
                            seed: Seed = Seed(42)) -> Grid2D:
    """
    Mean cosine similarity between a unit vector rotated to the grid center
    and the same vector rotated to every grid position.

    For a unit vector u, cos(R_c u, R_p u) = u . R_(p-c) u, which splits into
    per-pair terms r_k^2 * cos(angle_k(p - c)) where r_k^2 is the energy of
    pair k. Averaging over samples therefore only needs the mean pair energies.
    """
    if cfg.grid_h < 3 or cfg.grid_w < 3:
        raise ShapeMismatch(f"similarity map needs a grid of at least 3x3, got {cfg.grid_h}x{cfg.grid_w}")
    if num_samples < 1:
        raise ConfigError(f"num_samples must be >= 1, got {num_samples}")

    rng = rng_stream(seed)
    samples = rng.standard_normal((num_samples, 2 * cfg.d))
    samples /= np.linalg.norm(samples, axis=1, keepdims=True)
    pair_energy = (samples[:, 0::2] ** 2 + samples[:, 1::2] ** 2).mean(axis=0)

    center = (cfg.grid_h // 2, cfg.grid_w // 2)
    rows, cols = np.meshgrid(np.arange(cfg.grid_h) - center[0], np.arange(cfg.grid_w) - center[1], indexing="ij")
    similarity = np.cos(_angles(rows, cols, phase_deltas(cfg))) @ pair_energy / pair_energy.sum()
    similarity[center] = 1.0  # identical rotation
    return Grid2D(similarity)


def similarity_zone_size(grid: Grid2D, level: float = config.SIMILARITY_ZONE_LEVEL) -> int:
    """Cells whose similarity to the center exceeds level"""
    return int(np.count_nonzero(grid.data > level))
