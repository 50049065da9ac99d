"""
Training, checkpoints and one-step inference for the toy denoiser.

Per iteration one HR image is drawn, its LR counterpart is synthesized
(blur, decimate, nearest upsample), both go through the surrogate encoder
and the packer, the LR latent is anchored at t_mid and the model makes a
single prediction of the clean packed latent. The loss is
MSE(pred, z_hr) + lambda_ap * l_ap(decoded pred, hr image), optimized
with plain SGD (no momentum).
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import torch
from loguru import logger
from tqdm import tqdm

from .. import config
from ..core import PathLike, load_image, rng_substream
from ..errors import CheckpointError, DatasetError, ShapeMismatch
from ..latent_pack import decode_surrogate, encode_surrogate, pack, space_to_depth, unpack
from ..models import Image, TokenGrid, ToyModelConfig
from ..periodicity_loss import l_ap_with_gradient
from ..reports_store import save_csv
from .denoiser import ToyDenoiser
from .flow import anchor_lr, synthesize_lr, upsample_nearest

LOG_HEADER = ("iteration", "mse", "l_ap", "total")
SAMPLE_STREAM = 1
LOG_EVERY = 100


def to_tokens(img: Image, cfg: ToyModelConfig) -> TokenGrid:
    return pack(encode_surrogate(img, cfg.vae_factor), cfg.pack_factor)


def from_tokens(grid: TokenGrid, cfg: ToyModelConfig) -> Image:
    return decode_surrogate(unpack(grid, cfg.pack_factor), cfg.vae_factor)


class PeriodicityLoss(torch.autograd.Function):
    """l_ap on decoded predictions as an autograd node; the target side gets no gradient"""

    @staticmethod
    def forward(ctx, tokens: torch.Tensor, target, cfg: ToyModelConfig):
        pred = from_tokens(TokenGrid(tokens.detach().numpy()), cfg)
        gt = target.detach().numpy() if isinstance(target, torch.Tensor) else np.asarray(target)
        value, grad = l_ap_with_gradient(pred, gt, cfg.lag_spec)
        # encode and pack are permutations, so they carry the pixel gradient back to tokens
        grad_tokens = space_to_depth(space_to_depth(grad, cfg.vae_factor), cfg.pack_factor)
        ctx.save_for_backward(torch.from_numpy(grad_tokens))
        return tokens.new_tensor(value)

    @staticmethod
    def backward(ctx, grad_output):
        (grad_tokens,) = ctx.saved_tensors
        return grad_output * grad_tokens, None, None


@dataclass
class TrainingPair:
    path: str
    hr: Image
    z_lr: TokenGrid
    z_hr: TokenGrid


@dataclass
class TrainResult:
    model: ToyDenoiser
    cfg: ToyModelConfig
    log: List[Tuple[int, float, float, float]] = field(default_factory=list)
    initial_mse: float = 0.0
    final_mse: float = 0.0
    checkpoint: Optional[Path] = None


def list_images(directory: PathLike) -> List[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise DatasetError(f"dataset directory not found: {directory}")
    paths = sorted(p for p in directory.iterdir() if p.suffix.lower() == ".png")
    if not paths:
        raise DatasetError(f"no PNG images in {directory}")
    return paths


def prepare_pairs(paths: List[Path], cfg: ToyModelConfig) -> List[TrainingPair]:
    """Load HR images and precompute the packed LR/HR latents"""
    block = np.lcm(cfg.token_period, cfg.scale)
    pairs = []
    for path in paths:
        hr = load_image(path)
        if hr.height % block or hr.width % block:
            raise DatasetError(f"{path}: {hr.height}x{hr.width} is not divisible by {block}")
        pairs.append(TrainingPair(str(path), hr, to_tokens(synthesize_lr(hr, cfg.scale), cfg), to_tokens(hr, cfg)))

    shapes = {p.z_hr.shape for p in pairs}
    if len({s[2] for s in shapes}) != 1:
        raise DatasetError("dataset mixes images with different channel counts")
    return pairs


def _grid_tensor(grid: TokenGrid) -> torch.Tensor:
    return torch.from_numpy(np.array(grid.data))


def dataset_mse(model: ToyDenoiser, pairs: List[TrainingPair], cfg: ToyModelConfig) -> float:
    """Mean MSE between prediction and clean latent over the whole set"""
    with torch.no_grad():
        losses = [
            torch.mean((model.forward_grid(_grid_tensor(anchor_lr(p.z_lr, cfg).z_t)) - _grid_tensor(p.z_hr)) ** 2).item()
            for p in pairs
        ]
    return float(np.mean(losses))


def training_step(model: ToyDenoiser, optimizer: torch.optim.Optimizer, pair: TrainingPair,
                  cfg: ToyModelConfig) -> Tuple[float, float, float]:
    state = anchor_lr(pair.z_lr, cfg)
    pred = model.forward_grid(_grid_tensor(state.z_t))
    mse = torch.mean((pred - _grid_tensor(pair.z_hr)) ** 2)
    lap = PeriodicityLoss.apply(pred, pair.hr.data, cfg)
    total = mse + cfg.lambda_ap * lap

    optimizer.zero_grad()
    total.backward()
    optimizer.step()
    return mse.item(), lap.item(), total.item()


def train_on_pairs(cfg: ToyModelConfig, pairs: List[TrainingPair], iterations: int,
                   progress: bool = True) -> TrainResult:
    if iterations < 1:
        raise DatasetError(f"iterations must be >= 1, got {iterations}")
    if not pairs:
        raise DatasetError("empty training set")

    model = ToyDenoiser(cfg, pairs[0].z_hr.c)
    optimizer = torch.optim.SGD(model.parameters(), lr=cfg.learning_rate, momentum=0.0)
    sampler = rng_substream(cfg.seed, SAMPLE_STREAM)

    result = TrainResult(model=model, cfg=cfg, initial_mse=dataset_mse(model, pairs, cfg))
    logger.info(
        f"[train] {len(pairs)} images, {iterations} iterations, theta={model.rope.theta:g}, "
        f"lambda_ap={cfg.lambda_ap:g}, initial mse={result.initial_mse:.6g}"
    )

    bar = tqdm(range(iterations), desc="train", unit="it", disable=not progress)
    for it in bar:
        pair = pairs[int(sampler.integers(len(pairs)))]
        mse, lap, total = training_step(model, optimizer, pair, cfg)
        result.log.append((it, mse, lap, total))
        bar.set_postfix(mse=f"{mse:.4g}", l_ap=f"{lap:.4g}")
        if it % LOG_EVERY == 0:
            logger.debug(f"[train] iter {it} mse={mse:.6g} l_ap={lap:.6g} total={total:.6g}")
        if not np.isfinite(total):
            raise DatasetError(f"training diverged at iteration {it}")

    result.final_mse = dataset_mse(model, pairs, cfg)
    logger.info(f"[train] done, final mse={result.final_mse:.6g}")
    return result


def train_toy(cfg: ToyModelConfig, dataset: PathLike, iterations: int, out_dir: Optional[PathLike] = None,
              progress: bool = True) -> TrainResult:
    """Train on every PNG in dataset; with out_dir, write checkpoint.npz and train_log.csv there"""
    result = train_on_pairs(cfg, prepare_pairs(list_images(dataset), cfg), iterations, progress)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_training_log(out_dir / "train_log.csv", result)
        result.checkpoint = save_checkpoint(out_dir / "checkpoint.npz", result.model)
    return result


def write_training_log(path: PathLike, result: TrainResult) -> None:
    model = result.model
    comment = f"t_mid={result.cfg.t_mid} theta={model.rope.theta:g} lambda_ap={result.cfg.lambda_ap}"
    rows = [(it, repr(mse), repr(lap), repr(total)) for it, mse, lap, total in result.log]
    save_csv(path, LOG_HEADER, rows, comment=comment)


def save_checkpoint(path: PathLike, model: ToyDenoiser) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {f"param/{name}": t.detach().numpy() for name, t in model.state_dict().items()}
    with open(path, "wb") as f:
        np.savez(
            f,
            format_version=np.array(config.CHECKPOINT_FORMAT_VERSION),
            config=np.array(json.dumps(model.cfg.to_dict(), sort_keys=True)),
            in_channels=np.array(model.in_channels),
            **arrays,
        )
    logger.info(f"[train] checkpoint written to {path}")
    return path


def load_checkpoint(path: PathLike) -> ToyDenoiser:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e

    with archive:
        if "format_version" not in archive.files:
            raise CheckpointError(f"{path} has no format_version entry")
        version = int(archive["format_version"])
        if version != config.CHECKPOINT_FORMAT_VERSION:
            raise CheckpointError(f"{path}: format version {version}, expected {config.CHECKPOINT_FORMAT_VERSION}")
        cfg = ToyModelConfig.from_dict(json.loads(str(archive["config"])))
        model = ToyDenoiser(cfg, int(archive["in_channels"]))
        state = {}
        for name in model.state_dict():
            key = f"param/{name}"
            if key not in archive.files:
                raise CheckpointError(f"{path} is missing parameter {name}")
            state[name] = torch.from_numpy(archive[key])
    model.load_state_dict(state)
    return model


def one_step_infer(model: ToyDenoiser, lr_image: Image) -> Image:
    """Upsample, encode, pack, anchor, one forward pass, then unpack, decode and clamp"""
    cfg = model.cfg
    hr_h, hr_w = lr_image.height * cfg.scale, lr_image.width * cfg.scale
    if hr_h % cfg.token_period or hr_w % cfg.token_period:
        raise ShapeMismatch(
            f"LR image {lr_image.height}x{lr_image.width} x{cfg.scale} is not divisible by the token period {cfg.token_period}"
        )
    tokens = to_tokens(upsample_nearest(lr_image, cfg.scale), cfg)
    if tokens.c != model.in_channels:
        raise ShapeMismatch(f"model expects {model.in_channels} channels per token, got {tokens.c}")

    state = anchor_lr(tokens, cfg)
    with torch.no_grad():
        pred = model.forward_grid(_grid_tensor(state.z_t))
    return from_tokens(TokenGrid(pred.numpy()), cfg).clamped()
