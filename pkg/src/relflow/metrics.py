"""PSNR / SSIM / RMSE on [0, 1] images and energy distance for point clouds."""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import convolve2d

PSNR_CAP = 99.0
C1 = 0.01**2
C2 = 0.03**2
WINDOW = 11
SIGMA = 1.5


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"image shapes differ: {x.shape} vs {y.shape}")
    if x.size == 0:
        raise ValueError("empty image")
    return np.clip(x, 0.0, 1.0), np.clip(y, 0.0, 1.0)


def mse(x, y) -> float:
    x, y = _pair(x, y)
    return float(np.mean((x - y) ** 2))


def psnr(x, y) -> float:
    m = mse(x, y)
    if m < 1e-12:
        return PSNR_CAP
    return 10.0 * math.log10(1.0 / m)


def rmse(x, y) -> float:
    return math.sqrt(mse(x, y))


def gaussian_window(size: int = WINDOW, sigma: float = SIGMA) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r**2) / (2.0 * sigma**2))
    g /= g.sum()
    return np.outer(g, g)


def ssim(x, y) -> float:
    """Mean SSIM over all valid 11x11 Gaussian windows (sigma 1.5, stride 1)."""
    x, y = _pair(x, y)
    if x.ndim != 2 or min(x.shape) < WINDOW:
        raise ValueError(f"SSIM needs a 2-D image at least {WINDOW}x{WINDOW}, got {x.shape}")
    w = gaussian_window()

    def filt(a):
        return convolve2d(a, w, mode="valid")

    mu_x, mu_y = filt(x), filt(y)
    sxx = filt(x * x) - mu_x**2
    syy = filt(y * y) - mu_y**2
    sxy = filt(x * y) - mu_x * mu_y
    num = (2 * mu_x * mu_y + C1) * (2 * sxy + C2)
    den = (mu_x**2 + mu_y**2 + C1) * (sxx + syy + C2)
    return float(np.mean(num / den))


def image_report(x, y) -> dict:
    return {"psnr": psnr(x, y), "ssim": ssim(x, y), "rmse": rmse(x, y)}


def _mean_pairwise(a, b, chunk=2048) -> float:
    total = 0.0
    for i in range(0, len(a), chunk):
        d = a[i:i + chunk, None, :] - b[None, :, :]
        total += float(np.sqrt(np.einsum("ijk,ijk->ij", d, d)).sum())
    return total / (len(a) * len(b))


def energy_distance(a, b) -> float:
    """``sqrt(2 E|a-b| - E|a-a'| - E|b-b'|)`` over all pairs (V-statistic)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a = a.reshape(len(a), -1)
    b = b.reshape(len(b), -1)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("energy distance needs non-empty point sets")
    sq = 2.0 * _mean_pairwise(a, b) - _mean_pairwise(a, a) - _mean_pairwise(b, b)
    return math.sqrt(max(0.0, sq))
