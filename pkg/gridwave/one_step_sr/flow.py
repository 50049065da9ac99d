"""
Straight-path flow states and the fixed degradation used to synthesize
low-resolution inputs.
"""

import numpy as np
from loguru import logger
from scipy import ndimage

from ..errors import ConfigError, DivisibilityError, ShapeMismatch
from ..models import FlowState, Image, TokenGrid, ToyModelConfig

BLUR_SIZE = 3


def interpolate_flow(z_hr: TokenGrid, eps: TokenGrid, t: float) -> TokenGrid:
    """t * z_hr + (1 - t) * eps; t = 1 is the clean latent, t = 0 pure noise"""
    if z_hr.shape != eps.shape:
        raise ShapeMismatch(f"z_hr shape {z_hr.shape} != eps shape {eps.shape}")
    if not 0.0 <= t <= 1.0:
        raise ConfigError(f"flow time must lie in [0, 1], got {t}")
    if t == 1.0:
        return z_hr
    if t == 0.0:
        return eps
    return TokenGrid(t * z_hr.data + (1.0 - t) * eps.data)


def anchor_lr(z_lr: TokenGrid, cfg: ToyModelConfig) -> FlowState:
    """Stand the LR latent at t_mid on the flow as the network input; no noise is added"""
    if cfg.t_mid == 1.0:
        logger.warning("[flow] t_mid = 1.0 anchors the LR latent at the clean end; the pass is degenerate")
    return FlowState(z_t=z_lr, t=cfg.t_mid, z_lr=z_lr)


def degrade_to_lr(hr: Image, scale: int) -> Image:
    """3x3 box blur (reflect border) followed by scale-fold decimation"""
    if hr.height % scale or hr.width % scale:
        raise DivisibilityError(f"scale {scale} does not divide {hr.height}x{hr.width}")
    blurred = np.stack(
        [ndimage.uniform_filter(hr.plane(c), size=BLUR_SIZE, mode="reflect") for c in range(hr.channels)],
        axis=-1,
    )
    return Image(blurred[::scale, ::scale])


def upsample_nearest(img: Image, scale: int) -> Image:
    return Image(np.repeat(np.repeat(img.data, scale, axis=0), scale, axis=1))


def synthesize_lr(hr: Image, scale: int) -> Image:
    """LR counterpart of hr brought back to hr's size"""
    return upsample_nearest(degrade_to_lr(hr, scale), scale)
