"""
Image I/O, luma conversion and the seeded randomness contract.

PNG is the only on-disk format. Samples are held as binary64 in [0, 1]:
loading divides by the bit-depth maximum, saving clamps and quantizes with
round-half-up (``floor(x * 255 + 0.5)``), so 0.5 is written as byte 128.

Random streams come from NumPy's ``Generator`` over the PCG64 bit
generator seeded with the 64-bit seed value. PCG64 output is defined
bit-for-bit independent of platform; normals use NumPy's ziggurat sampler.
"""

from pathlib import Path
from typing import Union

import cv2
import numpy as np
from loguru import logger

from .errors import (
    ChannelError,
    CorruptImageData,
    ImageFileMissing,
    ImageWriteError,
    UnsupportedImageFormat,
)
from .models import Grid2D, Image, Seed

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

# BT.601 full-range luma weights
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

PathLike = Union[str, Path]


def load_image(path: PathLike) -> Image:
    """Load an 8- or 16-bit grayscale/RGB PNG as an Image in [0, 1]"""
    path = Path(path)
    if not path.is_file():
        raise ImageFileMissing(f"image not found: {path}")

    raw = np.fromfile(str(path), dtype=np.uint8)
    if raw[:8].tobytes() != PNG_SIGNATURE:
        raise UnsupportedImageFormat(f"not a PNG file: {path}")

    decoded = cv2.imdecode(raw, cv2.IMREAD_UNCHANGED)
    if decoded is None:
        raise CorruptImageData(f"could not decode PNG data: {path}")

    if decoded.dtype == np.uint8:
        scale = 255.0
    elif decoded.dtype == np.uint16:
        scale = 65535.0
    else:
        raise UnsupportedImageFormat(f"unsupported sample type {decoded.dtype}: {path}")

    if decoded.ndim == 2:
        pixels = decoded[:, :, None]
    elif decoded.shape[2] == 4:
        logger.warning(f"[core] dropping alpha channel of {path}")
        pixels = cv2.cvtColor(decoded, cv2.COLOR_BGRA2RGB)
    elif decoded.shape[2] == 3:
        pixels = cv2.cvtColor(decoded, cv2.COLOR_BGR2RGB)
    else:
        raise UnsupportedImageFormat(f"unsupported channel layout {decoded.shape}: {path}")

    return Image(pixels.astype(np.float64) / scale)


def quantize(img: Image) -> np.ndarray:
    """Clamp to [0, 1] and map to bytes with round-half-up"""
    return np.floor(np.clip(img.data, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def save_image(img: Image, path: PathLike) -> None:
    """Write an 8-bit PNG"""
    path = Path(path)
    pixels = quantize(img)
    if img.channels == 3:
        pixels = cv2.cvtColor(pixels, cv2.COLOR_RGB2BGR)
    else:
        pixels = pixels[:, :, 0]

    ok, encoded = cv2.imencode(".png", pixels)
    if not ok:
        raise ImageWriteError(f"PNG encoding failed for {path}")
    try:
        path.write_bytes(encoded.tobytes())
    except OSError as e:
        raise ImageWriteError(f"cannot write {path}: {e}") from e


def rgb_to_y(img: Image) -> Grid2D:
    """BT.601 full-range luma of an RGB image"""
    if img.channels != 3:
        raise ChannelError(f"rgb_to_y needs 3 channels, got {img.channels}")
    return Grid2D(img.data @ LUMA_WEIGHTS)


def luma(img: Image) -> np.ndarray:
    """Luma plane of any image; single-channel images are their own luma"""
    if img.channels == 1:
        return np.array(img.data[:, :, 0])
    return rgb_to_y(img).data


def rng_stream(seed: Union[Seed, int]) -> np.random.Generator:
    """PCG64-backed generator; one stream per worker, never shared"""
    if not isinstance(seed, Seed):
        seed = Seed(seed)
    return np.random.Generator(np.random.PCG64(seed.value))


def rng_substream(seed: Union[Seed, int], index: int) -> np.random.Generator:
    """Independent stream number `index` derived from one seed"""
    if not isinstance(seed, Seed):
        seed = Seed(seed)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed.value, index])))
