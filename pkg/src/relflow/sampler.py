"""Iterative denoising: ``x <- x + step * N(x, dt)`` over a step schedule."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .datagen import assemble_patches, extract_patches


class OvershootWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SampleSchedule:
    steps: tuple[float, ...] = (0.2, 0.1, 0.05)
    step_mode: str = "euler"  # "euler": multiplier dt; "exact": expm1(dt)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(float(s) for s in self.steps))
        object.__setattr__(self, "step_mode", self.step_mode.lower())
        if not self.steps:
            raise ValueError("schedule must contain at least one step")
        if any(not (math.isfinite(s) and s > 0) for s in self.steps):
            raise ValueError(f"schedule steps must be positive and finite: {self.steps}")
        if self.step_mode not in ("euler", "exact"):
            raise ValueError(f"step_mode must be euler or exact, got {self.step_mode!r}")

    @classmethod
    def parse(cls, text: str, mode: str = "euler") -> "SampleSchedule":
        try:
            steps = [float(s) for s in text.split(",") if s.strip()]
        except ValueError:
            raise ValueError(f"schedule must be a comma-separated list of numbers: {text!r}") from None
        return cls(tuple(steps), mode)

    def multiplier(self, dt: float) -> float:
        return math.expm1(dt) if self.step_mode == "exact" else dt


def sample(velocity, x_noisy, sched: SampleSchedule = SampleSchedule()):
    """Integrate ``velocity(x, dt)`` over ``sched``; returns ``(x_final, trajectory)``.

    ``velocity`` is a :class:`~relflow.velocity_model.VelocityModel` or any
    callable with the same signature. States are not clamped.
    """
    x = np.array(x_noisy, dtype=np.float64)
    traj = [x.copy()]
    for i, dt in enumerate(sched.steps):
        u = np.asarray(velocity(x, dt), dtype=np.float64)
        if u.shape != x.shape:
            raise ValueError(f"velocity shape {u.shape} != state shape {x.shape}")
        if not np.all(np.isfinite(u)):
            raise FloatingPointError(f"non-finite velocity at step {i} (dt={dt})")
        x = x + sched.multiplier(dt) * u
        traj.append(x.copy())
    return x, traj


def residual_factor(sched: SampleSchedule) -> float:
    """Euler contraction ``prod(1 - dt_i)`` for the affine field ``x_inf - x``."""
    if sched.step_mode != "euler":
        raise ValueError("residual_factor is defined for euler schedules")
    if any(dt >= 1.0 for dt in sched.steps):
        warnings.warn("a step >= 1 overshoots the target", OvershootWarning, stacklevel=2)
    return math.prod(1.0 - dt for dt in sched.steps)


def sample_linear_fm(velocity, x_source, n_steps: int = 10):
    """Euler integration of a linear-path flow-matching model over s in [0, 1).

    The model is conditioned on the remaining time ``1 - s`` (always > 0).
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    h = 1.0 / n_steps
    x = np.array(x_source, dtype=np.float64)
    traj = [x.copy()]
    for k in range(n_steps):
        u = np.asarray(velocity(x, 1.0 - k * h), dtype=np.float64)
        if not np.all(np.isfinite(u)):
            raise FloatingPointError(f"non-finite velocity at step {k}")
        x = x + h * u
        traj.append(x.copy())
    return x, traj


def patch_velocity(model, patch: int):
    """Wrap a patch model as a whole-image velocity field (non-overlapping tiles)."""

    def field(img, dt):
        p = extract_patches(img, patch)
        return assemble_patches(model(p, dt), img.shape, patch)

    return field
