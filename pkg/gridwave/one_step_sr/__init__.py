# One-step super-resolution toy pipeline
from .flow import anchor_lr, degrade_to_lr, interpolate_flow, synthesize_lr, upsample_nearest
from .denoiser import ToyDenoiser, toy_denoiser_forward
from .trainer import load_checkpoint, one_step_infer, save_checkpoint, train_toy
from .ablation import run_ablation
