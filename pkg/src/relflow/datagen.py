"""Synthetic data: Gaussian blobs, rings, heterogeneous references, phantoms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .cot_path import conditional_point
from .rng import Rng

REFERENCE_LEVELS = (0.8, 1.5, 2.5)


def _reject_unknown(cls, d):
    bad = sorted(set(d) - {f.name for f in fields(cls)})
    if bad:
        raise KeyError(f"unknown {cls.__name__} key(s): {', '.join(bad)}")


@dataclass(frozen=True)
class RingSpec:
    radius: float = 1.0
    thickness: float = 0.02
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0 or not self.thickness >= 0 or len(self.center) != 2:
            raise ValueError(f"invalid ring {self}")

    @classmethod
    def from_dict(cls, d):
        _reject_unknown(cls, d)
        return cls(**d)


def sample_gaussian(n: int, mean=(0.0, 0.0), std: float = 1.0, rng: Rng | None = None):
    if n < 1 or std < 0:
        raise ValueError("need n >= 1 and std >= 0")
    rng = rng or Rng(0)
    mean = np.asarray(mean, dtype=np.float64)
    return mean + std * rng.normal(n * mean.size).reshape(n, mean.size)


def sample_ring(n: int, spec: RingSpec = RingSpec(), rng: Rng | None = None, angles=None):
    """Ring points; pass ``angles`` to fix the angular positions."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = rng or Rng(0)
    if angles is None:
        theta = 2.0 * math.pi * rng.uniform(n)
    else:
        theta = np.asarray(angles, dtype=np.float64).reshape(n)
    r = spec.radius + spec.thickness * rng.normal(n) if spec.thickness > 0 else np.full(n, spec.radius)
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    return pts + np.asarray(spec.center)


def radial_partner(x0, spec: RingSpec = RingSpec(), rng: Rng | None = None):
    """Ring point on the ray from the ring centre through each ``x0``.

    Under this coupling every conditional path is a radial segment, so the
    path velocity ``x_inf - x`` is a function of position alone.
    """
    rng = rng or Rng(0)
    d = np.asarray(x0, dtype=np.float64) - np.asarray(spec.center)
    r = np.hypot(d[:, 0], d[:, 1])
    theta = np.arctan2(d[:, 1], d[:, 0])
    # a point exactly at the centre gets a uniform angle
    theta = np.where(r > 0, theta, 2.0 * math.pi * rng.spawn(7).uniform(len(d)))
    return sample_ring(len(d), spec, rng, angles=theta)


def coupled_endpoints(n: int, ring: RingSpec = RingSpec(), source_std: float = 1.0,
                      coupling: str = "radial", rng: Rng | None = None):
    """Gaussian source samples and their clean ring endpoints.

    ``coupling`` is ``"radial"`` (see :func:`radial_partner`) or
    ``"independent"``.
    """
    rng = rng or Rng(0)
    x0 = sample_gaussian(n, ring.center, source_std, rng.spawn(1))
    if coupling == "radial":
        x_inf = radial_partner(x0, ring, rng.spawn(2))
    elif coupling == "independent":
        x_inf = sample_ring(n, ring, rng.spawn(2))
    else:
        raise ValueError(f"coupling must be radial or independent, got {coupling!r}")
    return x0, x_inf


def heterogeneous_references(n: int, ring: RingSpec = RingSpec(), source_std: float = 1.0,
                             levels=REFERENCE_LEVELS, coupling: str = "radial",
                             rng: Rng | None = None):
    """Noisy references: conditional-path points at levels cycled over ``levels``.

    Returns ``(references, levels_used)``.
    """
    rng = rng or Rng(0)
    x0, x_inf = coupled_endpoints(n, ring, source_std, coupling, rng)
    t = np.asarray(levels, dtype=np.float64)[np.arange(n) % len(levels)]
    return conditional_point(x0, x_inf, t), t


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    axes: tuple[float, float]
    angle: float = 0.0  # degrees
    intensity: float = 0.5

    @classmethod
    def from_dict(cls, d):
        _reject_unknown(cls, d)
        return cls(tuple(d["center"]), tuple(d["axes"]), float(d.get("angle", 0.0)),
                   float(d.get("intensity", 0.5)))


@dataclass(frozen=True)
class PhantomSpec:
    width: int = 64
    height: int = 64
    ellipses: tuple[Ellipse, ...] = field(default_factory=tuple)
    background: float = 0.05

    @classmethod
    def from_dict(cls, d):
        _reject_unknown(cls, d)
        d = dict(d)
        d["ellipses"] = tuple(e if isinstance(e, Ellipse) else Ellipse.from_dict(e)
                              for e in d.get("ellipses", ()))
        return cls(**d)


def generate_phantom(spec: PhantomSpec = PhantomSpec()) -> np.ndarray:
    """Deterministic ellipse phantom. Pixel ``(row, col)`` has coordinates ``(y, x)``."""
    if spec.width < 1 or spec.height < 1:
        raise ValueError("phantom needs positive width and height")
    yy, xx = np.mgrid[0:spec.height, 0:spec.width].astype(np.float64)
    img = np.full((spec.height, spec.width), float(spec.background))
    for e in spec.ellipses:
        a, b = e.axes
        if not (a > 0 and b > 0):
            raise ValueError(f"degenerate ellipse axes {e.axes}")
        th = math.radians(e.angle)
        dx, dy = xx - e.center[0], yy - e.center[1]
        u = dx * math.cos(th) + dy * math.sin(th)
        v = -dx * math.sin(th) + dy * math.cos(th)
        img += np.where((u / a) ** 2 + (v / b) ** 2 <= 1.0, e.intensity, 0.0)
    return np.clip(img, 0.01, 1.0)


def default_phantom_spec(size: int = 64) -> PhantomSpec:
    """A small head-like phantom scaled to ``size`` pixels."""
    s = size / 64.0
    c = size / 2.0
    return PhantomSpec(size, size, (
        Ellipse((c, c), (26 * s, 30 * s), 0.0, 0.55),
        Ellipse((c, c), (23 * s, 27 * s), 0.0, -0.2),
        Ellipse((c - 8 * s, c - 4 * s), (5 * s, 9 * s), 20.0, 0.3),
        Ellipse((c + 8 * s, c - 4 * s), (5 * s, 9 * s), -20.0, 0.3),
        Ellipse((c, c + 12 * s), (10 * s, 4 * s), 0.0, 0.25),
        Ellipse((c, c - 16 * s), (3 * s, 3 * s), 0.0, 0.4),
    ), 0.05)


def extract_patches(img, size: int, stride: int | None = None) -> np.ndarray:
    """Flattened ``size x size`` patches, row-major over the image."""
    img = np.asarray(img)
    stride = stride or size
    h, w = img.shape
    out = [img[r:r + size, c:c + size].ravel()
           for r in range(0, h - size + 1, stride)
           for c in range(0, w - size + 1, stride)]
    return np.array(out)


def assemble_patches(patches, shape, size: int) -> np.ndarray:
    """Inverse of :func:`extract_patches` for non-overlapping tiles."""
    h, w = shape
    if h % size or w % size:
        raise ValueError(f"image {shape} is not tiled by {size}x{size} patches")
    img = np.empty(shape)
    k = 0
    for r in range(0, h, size):
        for c in range(0, w, size):
            img[r:r + size, c:c + size] = np.asarray(patches[k]).reshape(size, size)
            k += 1
    return img
