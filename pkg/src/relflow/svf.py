"""Velocity supervision from degradation pairs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SupervisionPair:
    x_noisier: np.ndarray
    x_cleaner: np.ndarray
    dt: float | np.ndarray

    def __post_init__(self):
        self.x_noisier = np.asarray(self.x_noisier)
        self.x_cleaner = np.asarray(self.x_cleaner)
        if self.x_noisier.shape != self.x_cleaner.shape:
            raise ValueError(
                f"pair shapes differ: {self.x_noisier.shape} vs {self.x_cleaner.shape}"
            )
        dt = np.asarray(self.dt, dtype=np.float64)
        if np.any(~np.isfinite(dt)) or np.any(dt <= 0):
            raise ValueError("dt must be positive and finite")


def _rowwise(dt, ndim):
    dt = np.asarray(dt, dtype=np.float64)
    if dt.ndim:
        dt = dt.reshape(dt.shape + (1,) * (ndim - dt.ndim))
    return dt


def target_velocity(x_noisier, x_cleaner, dt):
    """``(x_cleaner - x_noisier) / (exp(dt) - 1)`` in float64.

    ``dt`` is a scalar or one step per leading row.
    """
    pair = SupervisionPair(x_noisier, x_cleaner, dt)
    diff = pair.x_cleaner.astype(np.float64) - pair.x_noisier.astype(np.float64)
    return diff / np.expm1(_rowwise(dt, diff.ndim))


def pair_target(pair: SupervisionPair):
    return target_velocity(pair.x_noisier, pair.x_cleaner, pair.dt)


def oracle_velocity(x, x_inf):
    """Ideal velocity ``x_inf - x`` at a point on a conditional path."""
    x = np.asarray(x, dtype=np.float64)
    x_inf = np.asarray(x_inf, dtype=np.float64)
    if x.shape != x_inf.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_inf.shape}")
    return x_inf - x


def loss_rf(predictions, targets) -> float:
    """Batch mean of per-sample squared L2 error.

    Accepts stacked arrays (first axis = batch) or lists of fields.
    """
    if len(predictions) == 0:
        raise ValueError("empty batch")
    if len(predictions) != len(targets):
        raise ValueError(f"batch sizes differ: {len(predictions)} vs {len(targets)}")
    total = 0.0
    for p, q in zip(predictions, targets):
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        if p.shape != q.shape:
            raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
        total += float(np.sum((p - q) ** 2))
    return total / len(predictions)


def loss_rf_batched(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Vectorised loss for ``(B, D)`` arrays plus its gradient w.r.t. ``pred``."""
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    b = diff.shape[0]
    if b == 0:
        raise ValueError("empty batch")
    loss = float(np.sum(diff * diff)) / b
    return loss, (2.0 / b) * diff
