"""
Toy one-step denoiser: a small pre-norm transformer over packed latent
tokens with two-axis rotary embeddings on queries and keys.

The final projection starts at zero, so an untrained model returns its
input unchanged. All parameters are binary64 and drawn from the config's
PCG64 stream in registration order; query/key/value weights are drawn
wider than the rest so attention already depends on token position.
"""

from typing import Tuple

import numpy as np
import torch
from torch import nn

from .. import config
from ..core import rng_stream
from ..errors import ConfigError, ShapeMismatch
from ..models import TokenGrid, ToyModelConfig
from ..rope2d import grid_positions, position_tables

DTYPE = torch.float64


def apply_rope(x: torch.Tensor, cos: torch.Tensor, sin: torch.Tensor) -> torch.Tensor:
    """Rotate consecutive (even, odd) feature pairs; x is (..., n, 2d), cos/sin are (n, d)"""
    even, odd = x[..., 0::2], x[..., 1::2]
    return torch.stack([even * cos - odd * sin, even * sin + odd * cos], dim=-1).flatten(-2)


class RopeAttention(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = dim // heads
        self.qkv = nn.Linear(dim, 3 * dim, dtype=DTYPE)
        self.proj = nn.Linear(dim, dim, dtype=DTYPE)

    def forward(self, x: torch.Tensor, cos: torch.Tensor, sin: torch.Tensor) -> torch.Tensor:
        n = x.shape[0]
        q, k, v = self.qkv(x).reshape(n, 3, self.heads, self.head_dim).permute(1, 2, 0, 3)
        q, k = apply_rope(q, cos, sin), apply_rope(k, cos, sin)
        scores = q @ k.transpose(-2, -1) / np.sqrt(self.head_dim)
        weights = torch.softmax(scores, dim=-1)
        out = (weights @ v).transpose(0, 1).reshape(n, -1)
        return self.proj(out)


class DenoiserBlock(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim, dtype=DTYPE)
        self.attn = RopeAttention(dim, heads)
        self.norm2 = nn.LayerNorm(dim, dtype=DTYPE)
        self.mlp = nn.Sequential(
            nn.Linear(dim, 4 * dim, dtype=DTYPE),
            nn.GELU(),
            nn.Linear(4 * dim, dim, dtype=DTYPE),
        )

    def forward(self, x: torch.Tensor, cos: torch.Tensor, sin: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.norm1(x), cos, sin)
        return x + self.mlp(self.norm2(x))


class ToyDenoiser(nn.Module):
    """Predicts the clean packed latent from the anchored LR latent"""

    def __init__(self, cfg: ToyModelConfig, in_channels: int):
        super().__init__()
        if in_channels < 1:
            raise ConfigError(f"in_channels must be positive, got {in_channels}")
        self.cfg = cfg
        self.in_channels = in_channels
        self.rope = cfg.model_rope()
        self.in_proj = nn.Linear(in_channels, cfg.token_dim, dtype=DTYPE)
        self.blocks = nn.ModuleList([DenoiserBlock(cfg.token_dim, cfg.heads) for _ in range(cfg.layers)])
        self.out_norm = nn.LayerNorm(cfg.token_dim, dtype=DTYPE)
        self.out_proj = nn.Linear(cfg.token_dim, in_channels, dtype=DTYPE)
        self.initialize_weights()

    @torch.no_grad()
    def initialize_weights(self):
        rng = rng_stream(self.cfg.seed)
        for name, module in self.named_modules():
            if isinstance(module, nn.Linear):
                std = config.ATTN_INIT_STD if name.endswith("attn.qkv") else config.INIT_STD
                weights = rng.normal(0.0, std, size=tuple(module.weight.shape))
                module.weight.copy_(torch.from_numpy(weights))
                nn.init.zeros_(module.bias)
            elif isinstance(module, nn.LayerNorm):
                nn.init.ones_(module.weight)
                nn.init.zeros_(module.bias)
        nn.init.zeros_(self.out_proj.weight)
        nn.init.zeros_(self.out_proj.bias)

    def tables(self, pos_h, pos_w) -> Tuple[torch.Tensor, torch.Tensor]:
        cos, sin = position_tables(self.rope, np.asarray(pos_h), np.asarray(pos_w))
        return torch.from_numpy(cos), torch.from_numpy(sin)

    def forward(self, tokens: torch.Tensor, pos_h, pos_w) -> torch.Tensor:
        """tokens: (n, in_channels); pos_h, pos_w: per-token grid coordinates"""
        if tokens.ndim != 2 or tokens.shape[1] != self.in_channels:
            raise ShapeMismatch(f"expected (n, {self.in_channels}) tokens, got {tuple(tokens.shape)}")
        cos, sin = self.tables(pos_h, pos_w)
        x = self.in_proj(tokens)
        for block in self.blocks:
            x = block(x, cos, sin)
        return tokens + self.out_proj(self.out_norm(x))

    def forward_grid(self, grid: torch.Tensor) -> torch.Tensor:
        """(h, w, c) tensor in, (h, w, c) tensor out, tokens read row-major"""
        h, w, c = grid.shape
        pos_h, pos_w = grid_positions(h, w)
        return self(grid.reshape(h * w, c), pos_h, pos_w).reshape(h, w, c)


def toy_denoiser_forward(grid: TokenGrid, cfg: ToyModelConfig, model: ToyDenoiser) -> TokenGrid:
    if model.cfg != cfg:
        raise ConfigError("model was built for a different configuration")
    if grid.c != model.in_channels:
        raise ShapeMismatch(f"model expects {model.in_channels} channels per token, got {grid.c}")
    with torch.no_grad():
        out = model.forward_grid(torch.from_numpy(np.array(grid.data)))
    return TokenGrid(out.numpy())
