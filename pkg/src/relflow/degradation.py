"""Stochastic degradation operators ``D_dt`` for CT, MR and the 2-D toy."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from enum import Enum

import numpy as np

from .rng import Rng


class Kind(str, Enum):
    CT = "ct"
    MR = "mr"
    TOY = "toy"


@dataclass(frozen=True)
class DegradationSpec:
    kind: Kind = Kind.CT
    lambda_ct: float = 5.0
    beta_ct: float = 400.0
    i0: float = 1e6
    gamma_mr: float = 0.005
    gamma_toy: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(str(getattr(self.kind, "value", self.kind)).lower()))
        for name in ("lambda_ct", "beta_ct", "gamma_mr", "gamma_toy"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be > 0, got {v}")
        if not (math.isfinite(self.i0) and self.i0 >= 1):
            raise ValueError(f"i0 must be >= 1, got {self.i0}")

    @classmethod
    def from_dict(cls, d: dict) -> "DegradationSpec":
        known = {f.name for f in fields(cls)}
        bad = sorted(set(d) - known)
        if bad:
            raise KeyError(f"unknown degradation key(s): {', '.join(bad)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    def dose_factor(self, dt: float) -> float:
        return math.exp(-self.lambda_ct * dt)


def _check_dt(dt):
    dt = np.asarray(dt, dtype=np.float64)
    if np.any(~np.isfinite(dt)) or np.any(dt <= 0):
        raise ValueError(f"dt must be > 0 and finite, got {dt if dt.ndim == 0 else 'array'}")
    return dt


def _per_row(dt, x):
    if dt.ndim:
        return dt.reshape(dt.shape + (1,) * (x.ndim - dt.ndim))
    return dt


def degrade_ct(x, dt, spec: DegradationSpec, rng: Rng):
    """Poisson-Gaussian dose reduction; unbiased, clamped below at 0."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(~(x > 0)):
        raise ValueError("CT intensities must be strictly positive")
    dt = _per_row(_check_dt(dt), x)
    scale = np.exp(-spec.lambda_ct * dt) * spec.i0
    counts = rng.poisson(np.broadcast_to(scale * x, x.shape))
    sigma = np.sqrt(spec.beta_ct * dt)
    noise = sigma * rng.normal(x.size).reshape(x.shape)
    return np.maximum((counts + noise) / scale, 0.0)


def ct_variance(x, dt, spec: DegradationSpec):
    """Per-pixel variance of :func:`degrade_ct` before clamping."""
    s = spec.dose_factor(dt) * spec.i0
    return x / s + spec.beta_ct * dt / s**2


def degrade_mr(x, dt, spec: DegradationSpec, rng: Rng):
    """Rician magnitude noise with variance ``gamma_mr * dt`` per channel."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("MR magnitudes must be finite and non-negative")
    dt = _per_row(_check_dt(dt), x)
    sigma = np.sqrt(spec.gamma_mr * dt)
    n1 = sigma * rng.normal(x.size).reshape(x.shape)
    n2 = sigma * rng.normal(x.size).reshape(x.shape)
    return np.hypot(x + n1, n2)


def degrade_toy(points, dt, spec: DegradationSpec, rng: Rng):
    """Isotropic additive Gaussian with variance ``gamma_toy * dt``."""
    p = np.asarray(points, dtype=np.float64)
    dt = _per_row(_check_dt(dt), p)
    return p + np.sqrt(spec.gamma_toy * dt) * rng.normal(p.size).reshape(p.shape)


_OPS = {Kind.CT: degrade_ct, Kind.MR: degrade_mr, Kind.TOY: degrade_toy}


def degrade(x, dt, spec: DegradationSpec, rng: Rng):
    return _OPS[spec.kind](x, dt, spec, rng)
