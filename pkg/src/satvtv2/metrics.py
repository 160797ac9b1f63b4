"""PSNR and SSIM on the 0-255 intensity scale."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

PEAK = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(reference, candidate) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(reference, dtype=float)
    b = np.asarray(candidate, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(reference, candidate) -> float:
    a, b = _pair(reference, candidate)
    return float(np.mean((a - b) ** 2))


def psnr(reference, candidate) -> float:
    """``10 log10(255^2 / MSE)``; ``math.inf`` for identical inputs."""
    err = mse(reference, candidate)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / err)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    r = (size - 1) / 2.0
    x = np.arange(size) - r
    g = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / (2.0 * sigma * sigma))
    return g / g.sum()


def ssim_map(reference, candidate) -> np.ndarray:
    """Local SSIM over every full 11x11 window position (no padding)."""
    a, b = _pair(reference, candidate)
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"SSIM needs both image sides >= {SSIM_WINDOW}, got {a.shape}")
    win = gaussian_window()
    r = SSIM_WINDOW // 2
    crop = (slice(r, a.shape[0] - r), slice(r, a.shape[1] - r))

    def filt(x):
        return ndimage.correlate(x, win, mode="constant")[crop]

    c1 = (SSIM_K1 * PEAK) ** 2
    c2 = (SSIM_K2 * PEAK) ** 2
    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim(reference, candidate) -> float:
    return float(np.mean(ssim_map(reference, candidate)))


@dataclass(frozen=True)
class QualityReport:
    mse: float
    psnr_db: float
    ssim: float

    @classmethod
    def compare(cls, reference, candidate) -> "QualityReport":
        return cls(mse(reference, candidate), psnr(reference, candidate), ssim(reference, candidate))

    def row(self) -> list[str]:
        return [format_value(self.mse), format_value(self.psnr_db), format_value(self.ssim)]


def format_value(x: float) -> str:
    """CSV text for a float: ``inf`` for the infinite sentinel, ``repr`` otherwise."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))
