"""
Token packing and the space-to-depth stand-in for the VAE.

pack folds each f x f spatial block into the channel axis of one token.
Sub-pixels are stored in row-major order (top-left, top-right, bottom-left,
bottom-right for f = 2), each sub-pixel carrying its c channels
contiguously. unpack is the exact inverse.

The surrogate encoder/decoder are the same rearrangement applied to pixel
images, so the artifact period of a decoded token grid is the product of
all spatial folds.
"""

from typing import Sequence

import numpy as np

from .errors import ChannelError, DivisibilityError, ShapeMismatch
from .models import Image, TokenGrid


def _check_factor(f: int) -> int:
    if int(f) != f or f < 1:
        raise DivisibilityError(f"pack factor must be an integer >= 1, got {f}")
    return int(f)


def space_to_depth(data: np.ndarray, f: int) -> np.ndarray:
    f = _check_factor(f)
    h, w, c = data.shape
    if h % f or w % f:
        raise DivisibilityError(f"factor {f} does not divide spatial extent {h}x{w}")
    blocks = data.reshape(h // f, f, w // f, f, c).transpose(0, 2, 1, 3, 4)
    return blocks.reshape(h // f, w // f, f * f * c)


def depth_to_space(data: np.ndarray, f: int) -> np.ndarray:
    f = _check_factor(f)
    h, w, c = data.shape
    if c % (f * f):
        raise DivisibilityError(f"channel count {c} is not divisible by {f}^2")
    blocks = data.reshape(h, w, f, f, c // (f * f)).transpose(0, 2, 1, 3, 4)
    return blocks.reshape(h * f, w * f, c // (f * f))


def pack(g: TokenGrid, f: int) -> TokenGrid:
    return TokenGrid(space_to_depth(g.data, f))


def unpack(g: TokenGrid, f: int) -> TokenGrid:
    return TokenGrid(depth_to_space(g.data, f))


def encode_surrogate(img: Image, f: int) -> TokenGrid:
    """Lossless space-to-depth 'encoder'"""
    return TokenGrid(space_to_depth(img.data, f))


def decode_surrogate(g: TokenGrid, f: int) -> Image:
    """Inverse of encode_surrogate; output channels must come out as 1 or 3"""
    f = _check_factor(f)
    if g.c % (f * f) or g.c // (f * f) not in (1, 3):
        raise ChannelError(f"{g.c} latent channels do not decode to a 1- or 3-channel image at factor {f}")
    return Image(depth_to_space(g.data, f))


def token_period(vae_factor: int, pack_factor: int) -> int:
    """Pixel period of grid artifacts: the product of all spatial folds"""
    return _check_factor(vae_factor) * _check_factor(pack_factor)


def periodic_tile_demo(token: Sequence[float], h: int, w: int, f: int) -> Image:
    """Decode an h x w grid of copies of one token"""
    f = _check_factor(f)
    token = np.asarray(token, dtype=np.float64).ravel()
    if h < 1 or w < 1:
        raise ShapeMismatch(f"tile grid must be at least 1x1, got {h}x{w}")
    if token.size % (f * f) or token.size // (f * f) not in (1, 3):
        raise ShapeMismatch(f"token length {token.size} must be f^2 * C with C in (1, 3) for f = {f}")
    grid = np.broadcast_to(token, (h, w, token.size))
    return decode_surrogate(TokenGrid(grid), f)
