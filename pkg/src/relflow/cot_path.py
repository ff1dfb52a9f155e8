"""Consistent-transport path algebra on the quality-time axis.

Quality level ``t`` runs from 0 (noise endpoint) to +inf (clean endpoint).
A sample on the conditional path is ``exp(-t) * x0 + (1 - exp(-t)) * x_inf``;
relative paths interpolate between two levels with an exponential-time
weight, and the helpers here check that those relative paths are pieces of,
and compose into, the absolute path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QualitySegment:
    """Levels ``t_i < t_j`` and an evaluation level ``t`` between them."""

    t_i: float
    t: float
    t_j: float

    def __post_init__(self):
        vals = (self.t_i, self.t, self.t_j)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"segment times must be finite, got {vals}")
        if not self.t_i < self.t_j:
            raise ValueError(f"need t_i < t_j, got t_i={self.t_i}, t_j={self.t_j}")
        if not self.t_i <= self.t <= self.t_j:
            raise ValueError(f"t={self.t} outside [{self.t_i}, {self.t_j}]")


def _segment(seg) -> QualitySegment:
    return seg if isinstance(seg, QualitySegment) else QualitySegment(*seg)


def lambda_weight(seg) -> float:
    """Weight on the ``t_i`` endpoint; 1 at ``t_i``, 0 at ``t_j``."""
    seg = _segment(seg)
    if seg.t == seg.t_i:
        return 1.0
    if seg.t == seg.t_j:
        return 0.0
    e_t = math.exp(-seg.t)
    e_i = math.exp(-seg.t_i)
    e_j = math.exp(-seg.t_j)
    return (e_t - e_j) / (e_i - e_j)


def _same_shape(a, b, what="fields"):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"{what} differ in shape: {a.shape} vs {b.shape}")
    return a, b


def conditional_point(x0, x_inf, t):
    """Point at level ``t`` on the path from ``x0`` (t=0) to ``x_inf``.

    ``t`` may be a scalar or an array broadcasting against the leading axis
    of the fields (one level per row).
    """
    x0, x_inf = _same_shape(x0, x_inf)
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("quality level t must be finite and >= 0")
    if t.ndim:
        t = t.reshape(t.shape + (1,) * (x0.ndim - t.ndim))
    w = np.exp(-t)
    # -expm1(-t) keeps 1 - e^{-t} accurate for small t
    return w * x0 - np.expm1(-t) * x_inf


def relative_point(x_ti, x_tj, seg):
    """Interpolate two samples from levels ``t_i`` and ``t_j`` at ``seg.t``."""
    x_ti, x_tj = _same_shape(x_ti, x_tj)
    lam = lambda_weight(seg)
    if lam == 1.0:
        return x_ti.copy()
    if lam == 0.0:
        return x_tj.copy()
    return lam * x_ti + (1.0 - lam) * x_tj


def component_residual(x0, x_inf, seg) -> float:
    """Max-norm gap between the relative path and the absolute path at ``seg.t``."""
    seg = _segment(seg)
    x0, x_inf = _same_shape(x0, x_inf)
    rel = relative_point(
        conditional_point(x0, x_inf, seg.t_i),
        conditional_point(x0, x_inf, seg.t_j),
        seg,
    )
    direct = conditional_point(x0, x_inf, seg.t)
    return float(np.max(np.abs(rel - direct))) if rel.size else 0.0


def _check_order(t1, t2, t3, t):
    if not (0 < t1 < t2 < t3):
        raise ValueError(f"need 0 < t1 < t2 < t3, got {(t1, t2, t3)}")
    if not t1 <= t <= t3:
        raise ValueError(f"t={t} outside [{t1}, {t3}]")


def composed_coefficient(t1, t2, t3, t) -> float:
    """Weight on level ``t1`` reached by chaining the relative paths via ``t2``.

    The level-``t2`` point is placed on the direct ``t1 -> t3`` path, and the
    relative path on whichever sub-segment holds ``t`` is expanded back onto
    the ``t1``/``t3`` endpoints.
    """
    _check_order(t1, t2, t3, t)
    mu = lambda_weight((t1, t2, t3))
    if t <= t2:
        lam = lambda_weight((t1, t, t2))
        return lam + (1.0 - lam) * mu
    return lambda_weight((t2, t, t3)) * mu


def eliminated_coefficient(t1, t2, t3, t) -> float:
    """Coefficient on ``p_{t1}`` after eliminating ``p_{t2}`` between the two
    relative parameterisations. Singular at ``t = t1`` and ``t = t2``; use
    :func:`composed_coefficient` for numerics.
    """
    _check_order(t1, t2, t3, t)
    e, e1, e2, e3 = (math.exp(-v) for v in (t, t1, t2, t3))
    a = (e1 - e2) / (e1 - e)
    b = (e2 - e3) / (e - e3)
    c = (e - e2) / (e1 - e)
    return c / (a - b)


def composition_residual(t1, t2, t3, t) -> float:
    """``|composed weight - direct t1->t3 weight|`` at level ``t``."""
    _check_order(t1, t2, t3, t)
    return abs(composed_coefficient(t1, t2, t3, t) - lambda_weight((t1, t, t3)))
