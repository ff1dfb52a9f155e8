"""Relative-flow denoising: exponential quality-time paths, simulated supervision
and a small numpy velocity model."""

from .cot_path import QualitySegment, component_residual, composition_residual, conditional_point, lambda_weight
from .degradation import DegradationSpec, Kind, degrade
from .metrics import energy_distance, psnr, rmse, ssim
from .rng import Rng
from .sampler import SampleSchedule, sample
from .svf import SupervisionPair, loss_rf, target_velocity
from .trainer import Mode, Supervision, TrainConfig, TrainData, TrainReport, train
from .velocity_model import ModelArch, VelocityModel, load_checkpoint, save_checkpoint

__version__ = "0.1.0"
