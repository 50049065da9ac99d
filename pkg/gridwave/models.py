from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import config
from .errors import ChannelError, ConfigError, NonFiniteValues, ShapeMismatch


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValues("array contains NaN or Inf")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Image:
    """H x W x C pixel grid, channels interleaved (HWC is the canonical order)"""
    data: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.data)
        if arr.ndim == 2:
            arr = arr[:, :, None]
            arr.flags.writeable = False
        if arr.ndim != 3:
            raise ShapeMismatch(f"image data must be HxW or HxWxC, got shape {arr.shape}")
        if arr.shape[2] not in (1, 3):
            raise ChannelError(f"images carry 1 or 3 channels, got {arr.shape[2]}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeMismatch(f"empty image {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape

    def plane(self, channel: int) -> np.ndarray:
        return self.data[:, :, channel]

    def clamped(self) -> "Image":
        return Image(np.clip(self.data, 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Unbounded real-valued rows x cols grid (spectra, similarity maps, Y planes)"""
    data: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.data)
        if arr.ndim != 2:
            raise ShapeMismatch(f"Grid2D needs a 2-D array, got shape {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class Seed:
    value: int = 0

    def __post_init__(self):
        if not 0 <= int(self.value) < 2 ** 64:
            raise ConfigError(f"seed must fit in 64 unsigned bits, got {self.value}")
        object.__setattr__(self, "value", int(self.value))


@dataclass(frozen=True)
class RopeConfig:
    d: int = config.ROPE_DIM           # per-axis feature dimension
    theta: float = config.THETA_DEFAULT
    grid_h: int = config.ANALYSIS_GRID
    grid_w: int = config.ANALYSIS_GRID

    def __post_init__(self):
        if self.d < 2 or self.d % 2:
            raise ConfigError(f"rope dimension must be even and >= 2, got {self.d}")
        if not self.theta > 1:
            raise ConfigError(f"rope base frequency must exceed 1, got {self.theta}")
        if self.grid_h < 1 or self.grid_w < 1:
            raise ConfigError(f"grid extents must be positive, got {self.grid_h}x{self.grid_w}")

    @property
    def pairs(self) -> int:
        return self.d // 2

    def to_dict(self) -> dict:
        return {"d": self.d, "theta": self.theta, "grid_h": self.grid_h, "grid_w": self.grid_w}

    @classmethod
    def from_dict(cls, data: dict) -> "RopeConfig":
        return cls(
            d=int(data.get("d", config.ROPE_DIM)),
            theta=float(data.get("theta", config.THETA_DEFAULT)),
            grid_h=int(data.get("grid_h", config.ANALYSIS_GRID)),
            grid_w=int(data.get("grid_w", config.ANALYSIS_GRID)),
        )


@dataclass(frozen=True, eq=False)
class TokenGrid:
    """h x w grid of c-channel latent tokens"""
    data: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.data)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ShapeMismatch(f"token grid must be h x w x c with positive extents, got {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def h(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]

    @property
    def c(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True)
class LagSpec:
    lags: Tuple[int, ...] = config.DEFAULT_LAGS
    quadrants: int = config.QUADRANTS
    axes: Tuple[str, ...] = ("h", "v")

    def __post_init__(self):
        lags = tuple(int(lag) for lag in self.lags)
        if not lags or any(lag < 1 for lag in lags):
            raise ConfigError(f"lags must be positive integers, got {self.lags}")
        if len(set(lags)) != len(lags):
            raise ConfigError(f"duplicate lags in {self.lags}")
        if self.quadrants not in (1, 4):
            raise ConfigError(f"only 1 (whole image) or 4 (2x2) blocks are supported, got {self.quadrants}")
        axes = tuple(self.axes)
        if not axes or any(a not in ("h", "v") for a in axes) or len(set(axes)) != len(axes):
            raise ConfigError(f"axes must be a subset of ('h', 'v'), got {self.axes}")
        object.__setattr__(self, "lags", tuple(sorted(lags)))
        object.__setattr__(self, "axes", axes)

    def to_dict(self) -> dict:
        return {"lags": list(self.lags), "quadrants": self.quadrants, "axes": list(self.axes)}

    @classmethod
    def from_dict(cls, data: dict) -> "LagSpec":
        return cls(
            lags=tuple(data.get("lags", config.DEFAULT_LAGS)),
            quadrants=int(data.get("quadrants", config.QUADRANTS)),
            axes=tuple(data.get("axes", ("h", "v"))),
        )


@dataclass(frozen=True)
class SpectrumReport:
    period: int
    spike_bins: List[Tuple[int, int]]
    peak_to_background: List[float]
    flagged: bool
    score: float
    threshold: float = config.SPIKE_THRESHOLD

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "spike_bins": [list(b) for b in self.spike_bins],
            "peak_to_background": self.peak_to_background,
            "flagged": self.flagged,
            "score": self.score,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class PeriodicityScore:
    period: int
    per_quadrant: Tuple[float, ...]
    aggregate: float

    def flagged(self, threshold: float = config.SPATIAL_THRESHOLD) -> bool:
        return self.aggregate > threshold

    def to_dict(self) -> dict:
        return {"period": self.period, "per_quadrant": list(self.per_quadrant), "aggregate": self.aggregate}


@dataclass(frozen=True)
class FlowState:
    """A point on the straight noise-to-data path; z_t is what the network sees"""
    z_t: TokenGrid
    t: float
    z_lr: Optional[TokenGrid] = None
    z_hr: Optional[TokenGrid] = None
    eps: Optional[TokenGrid] = None

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ConfigError(f"flow time must lie in [0, 1], got {self.t}")
        for name in ("z_lr", "z_hr", "eps"):
            other = getattr(self, name)
            if other is not None and other.shape != self.z_t.shape:
                raise ShapeMismatch(f"{name} shape {other.shape} != z_t shape {self.z_t.shape}")


@dataclass(frozen=True)
class ToyModelConfig:
    token_dim: int = config.TOY_TOKEN_DIM
    heads: int = config.TOY_HEADS
    layers: int = config.TOY_LAYERS
    rope: RopeConfig = field(default_factory=lambda: RopeConfig(d=config.TOY_ROPE_DIM, grid_h=8, grid_w=8))
    pack_factor: int = config.PACK_FACTOR
    vae_factor: int = config.VAE_FACTOR
    scale: int = config.SR_SCALE
    t_mid: float = config.T_MID
    lambda_ap: float = config.LAMBDA_AP
    use_rfr: bool = False
    seed: Seed = field(default_factory=Seed)
    learning_rate: float = config.LEARNING_RATE
    lag_spec: LagSpec = field(default_factory=lambda: LagSpec(lags=config.TOY_LAGS))

    def __post_init__(self):
        if self.token_dim < 1 or self.heads < 1 or self.layers < 0:
            raise ConfigError("token_dim and heads must be positive, layers non-negative")
        if self.token_dim % self.heads:
            raise ConfigError(f"token_dim {self.token_dim} is not divisible by heads {self.heads}")
        if self.token_dim // self.heads != 2 * self.rope.d:
            raise ConfigError(
                f"per-head dimension {self.token_dim // self.heads} must equal 2 * rope.d = {2 * self.rope.d}"
            )
        if min(self.pack_factor, self.vae_factor, self.scale) < 1:
            raise ConfigError("pack_factor, vae_factor and scale must be >= 1")
        if not 0.0 <= self.t_mid <= 1.0:
            raise ConfigError(f"t_mid must lie in [0, 1], got {self.t_mid}")
        if self.lambda_ap < 0:
            raise ConfigError(f"lambda_ap must be >= 0, got {self.lambda_ap}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")

    @property
    def token_period(self) -> int:
        return self.vae_factor * self.pack_factor

    @property
    def head_dim(self) -> int:
        return self.token_dim // self.heads

    def model_rope(self) -> RopeConfig:
        """Rope settings the denoiser actually uses (RFR swaps in the low base frequency)"""
        if self.use_rfr:
            return replace(self.rope, theta=config.THETA_RFR)
        return self.rope

    def to_dict(self) -> dict:
        return {
            "token_dim": self.token_dim,
            "heads": self.heads,
            "layers": self.layers,
            "rope": self.rope.to_dict(),
            "pack_factor": self.pack_factor,
            "vae_factor": self.vae_factor,
            "scale": self.scale,
            "t_mid": self.t_mid,
            "lambda_ap": self.lambda_ap,
            "use_rfr": self.use_rfr,
            "seed": self.seed.value,
            "learning_rate": self.learning_rate,
            "lag_spec": self.lag_spec.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ToyModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        defaults = cls()
        return cls(
            token_dim=int(data.get("token_dim", defaults.token_dim)),
            heads=int(data.get("heads", defaults.heads)),
            layers=int(data.get("layers", defaults.layers)),
            rope=RopeConfig.from_dict(data["rope"]) if "rope" in data else defaults.rope,
            pack_factor=int(data.get("pack_factor", defaults.pack_factor)),
            vae_factor=int(data.get("vae_factor", defaults.vae_factor)),
            scale=int(data.get("scale", defaults.scale)),
            t_mid=float(data.get("t_mid", defaults.t_mid)),
            lambda_ap=float(data.get("lambda_ap", defaults.lambda_ap)),
            use_rfr=bool(data.get("use_rfr", defaults.use_rfr)),
            seed=Seed(int(data.get("seed", defaults.seed.value))),
            learning_rate=float(data.get("learning_rate", defaults.learning_rate)),
            lag_spec=LagSpec.from_dict(data["lag_spec"]) if "lag_spec" in data else defaults.lag_spec,
        )


@dataclass(frozen=True)
class ArmResult:
    name: str
    use_rfr: bool
    lambda_ap: float
    final_loss: float
    initial_mse: float
    final_mse: float
    mean_psnr_y: float
    mean_periodicity: float
    median_periodicity: float
    flag_rate: float
    median_spike_score: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "use_rfr": self.use_rfr,
            "lambda_ap": self.lambda_ap,
            "final_loss": self.final_loss,
            "initial_mse": self.initial_mse,
            "final_mse": self.final_mse,
            "mean_psnr_y": self.mean_psnr_y,
            "mean_periodicity": self.mean_periodicity,
            "median_periodicity": self.median_periodicity,
            "flag_rate": self.flag_rate,
            "median_spike_score": self.median_spike_score,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ArmResult":
        return cls(**{f.name: data[f.name] for f in fields(cls)})


@dataclass(frozen=True)
class AblationReport:
    arms: Dict[str, ArmResult]
    seed: int
    iterations: int
    token_period: int

    def __post_init__(self):
        missing = set(config.ABLATION_ARMS) - set(self.arms)
        if missing:
            raise ConfigError(f"ablation report is missing arms: {sorted(missing)}")
        for arm in self.arms.values():
            values = [v for v in arm.to_dict().values() if isinstance(v, float)]
            if not np.all(np.isfinite(values)):
                raise NonFiniteValues(f"non-finite metric in arm {arm.name}")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "iterations": self.iterations,
            "token_period": self.token_period,
            "arms": {name: self.arms[name].to_dict() for name in config.ABLATION_ARMS},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AblationReport":
        return cls(
            arms={name: ArmResult.from_dict(arm) for name, arm in data["arms"].items()},
            seed=int(data["seed"]),
            iterations=int(data["iterations"]),
            token_period=int(data["token_period"]),
        )


@dataclass(frozen=True)
class CurationScores:
    path: str
    laplacian_var: float
    sobel_mean: float
    glcm_contrast: float
    glcm_correlation: float
    entropy_bits: float
    aggregate: float = 0.0
    external: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "laplacian_var": self.laplacian_var,
            "sobel_mean": self.sobel_mean,
            "glcm_contrast": self.glcm_contrast,
            "glcm_correlation": self.glcm_correlation,
            "entropy_bits": self.entropy_bits,
            "aggregate": self.aggregate,
            "external": self.external,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CurationScores":
        return cls(
            path=data["path"],
            laplacian_var=float(data["laplacian_var"]),
            sobel_mean=float(data["sobel_mean"]),
            glcm_contrast=float(data["glcm_contrast"]),
            glcm_correlation=float(data["glcm_correlation"]),
            entropy_bits=float(data["entropy_bits"]),
            aggregate=float(data.get("aggregate", 0.0)),
            external=data.get("external"),
        )


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    ssim: float
    patch_size: int
    per_patch_psnr: List[float] = field(default_factory=list)
    per_patch_ssim: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "psnr_db": self.psnr_db,
            "ssim": self.ssim,
            "patch_size": self.patch_size,
            "per_patch": {"psnr_db": self.per_patch_psnr, "ssim": self.per_patch_ssim},
        }


@dataclass(frozen=True)
class RunConfig:
    """Resolved invocation of one CLI subcommand, echoed into every report"""
    subcommand: str
    options: Dict[str, object]

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, **{k: self.options[k] for k in sorted(self.options)}}
