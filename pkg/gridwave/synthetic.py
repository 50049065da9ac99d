"""
Seeded synthetic images: smooth gradients, smoothed noise, sinusoidal
textures and period-P tile composites. Every generator draws from its own
PCG64 stream, so a (seed, size) pair always produces the same pixels.
"""

from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy import ndimage

from . import config
from .core import PathLike, rng_stream, save_image
from .errors import DivisibilityError
from .latent_pack import periodic_tile_demo
from .models import Image, Seed

# Eval images are drawn from seeds offset by this much so they never
# coincide with training seeds.
EVAL_SEED_OFFSET = 1_000_000

TEXTURE_PERIODS = (5.0, 13.0)


def linear_gradient(h: int, w: int, rng: np.random.Generator, amplitude: float = 0.3) -> np.ndarray:
    angle = rng.uniform(0.0, 2.0 * np.pi)
    rows, cols = np.meshgrid(np.linspace(-0.5, 0.5, h), np.linspace(-0.5, 0.5, w), indexing="ij")
    return 0.5 + amplitude * (np.cos(angle) * cols + np.sin(angle) * rows)


def smoothed_noise(h: int, w: int, rng: np.random.Generator, sigma: float = 2.0, std: float = 0.03) -> np.ndarray:
    """Gaussian-filtered white noise rescaled to the requested standard deviation"""
    field = ndimage.gaussian_filter(rng.standard_normal((h, w)), sigma=sigma, mode="wrap")
    return std * (field - field.mean()) / field.std()


def sinusoid_texture(h: int, w: int, rng: np.random.Generator, amplitude: float = 0.1,
                     periods: Tuple[float, float] = TEXTURE_PERIODS) -> np.ndarray:
    """Sum of two sinusoids with periods drawn from the given range and random orientations"""
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    out = np.zeros((h, w))
    for _ in range(2):
        period = rng.uniform(*periods)
        angle = rng.uniform(0.0, np.pi)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        out += np.sin(2.0 * np.pi * (np.cos(angle) * cols + np.sin(angle) * rows) / period + phase)
    return amplitude * out / 2.0


def clean_image(seed: int, size: int = 256) -> Image:
    """Gray gradient plus mild smoothed noise: free of any grid structure"""
    rng = rng_stream(Seed(seed))
    return Image(linear_gradient(size, size, rng) + smoothed_noise(size, size, rng))


def natural_texture(seed: int, size: int = 256, sigma: float = 2.0) -> Image:
    rng = rng_stream(Seed(seed))
    return Image(0.5 + smoothed_noise(size, size, rng, sigma=sigma, std=0.1))


def tile_pattern(period: int, h: int, w: int, rng: np.random.Generator,
                 amplitude: float = 0.1, channels: int = 1) -> np.ndarray:
    """Zero-mean period-P tiling of one random token"""
    if h % period or w % period:
        raise DivisibilityError(f"period {period} does not divide {h}x{w}")
    token = rng.uniform(-1.0, 1.0, period * period * channels)
    token -= token.mean()
    return amplitude * periodic_tile_demo(token, h // period, w // period, period).data


def with_tile_pattern(img: Image, period: int, amplitude: float = 0.1, seed: int = 0) -> Image:
    """Add a period-P tile pattern to every channel of img"""
    pattern = tile_pattern(period, img.height, img.width, rng_stream(Seed(seed)), amplitude)
    return Image(img.data + pattern)


def grid_free_periods(token_period: int) -> Tuple[float, float]:
    """
    Sinusoid period range whose frequencies stay clear of the token-period
    lattice: every frequency is below 1 / (1.3 P), roughly two spectral bins
    under the first lattice frequency 1 / P on 64-pixel images.
    """
    return 1.3 * token_period, 1.75 * token_period


def texture_image(seed: int, size: int = 64, periods: Tuple[float, float] = TEXTURE_PERIODS) -> Image:
    """RGB training texture: per-channel gradient, smoothed noise and sinusoids, clamped to [0, 1]"""
    rng = rng_stream(Seed(seed))
    planes = [
        linear_gradient(size, size, rng, amplitude=0.4)
        + smoothed_noise(size, size, rng, sigma=1.5, std=0.08)
        + sinusoid_texture(size, size, rng, periods=periods)
        for _ in range(3)
    ]
    return Image(np.clip(np.stack(planes, axis=-1), 0.0, 1.0))


def write_corpus(out_dir: PathLike, count: int, seed: int = 0, size: int = 64, prefix: str = "tex",
                 periods: Tuple[float, float] = TEXTURE_PERIODS) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        path = out_dir / f"{prefix}_{i:04d}.png"
        save_image(texture_image(seed + i, size, periods), path)
        paths.append(path)
    logger.info(f"[synthetic] wrote {count} {size}x{size} images to {out_dir}")
    return paths


def write_train_eval(root: PathLike, train_count: int, eval_count: int, seed: int = 0, size: int = 64,
                     token_period: Optional[int] = config.VAE_FACTOR * config.PACK_FACTOR) -> dict:
    """
    Training corpus under root/train and a disjoint eval set under root/eval.

    With a token period, both sets draw their sinusoids from
    grid_free_periods(token_period) so that periodicity measured at that
    period comes from the model and not from the textures.
    """
    root = Path(root)
    periods = grid_free_periods(token_period) if token_period else TEXTURE_PERIODS
    return {
        "train": write_corpus(root / "train", train_count, seed, size, prefix="train", periods=periods),
        "eval": write_corpus(root / "eval", eval_count, seed + EVAL_SEED_OFFSET, size, prefix="eval", periods=periods),
    }
