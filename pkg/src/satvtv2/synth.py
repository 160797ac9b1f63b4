"""Synthetic scenes and degradations.

The bars and triangle geometries are fixed constants of this module. Noise is
drawn from ``numpy.random.Generator(Philox(seed))``, a counter-based
generator, so a seed reproduces the same field bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import BlurKernel, apply_blur

BAR_LEVELS = (32.0, 96.0, 160.0, 224.0)
# (row0, row1, col0, col1) per bar, half-open, on the 128 x 128 canvas
BAR_BOXES = ((16, 112, 12, 28), (24, 104, 40, 60), (16, 112, 72, 92), (40, 88, 104, 118))
TRIANGLE_VERTICES = ((30.0, 107.0), (220.0, 20.0), (220.0, 194.0))
TRIANGLE_LEVEL = 200.0
TRIANGLE_BACKGROUND = 25.0


def _centres(M: int, N: int) -> tuple[np.ndarray, np.ndarray]:
    return np.meshgrid(np.arange(M) + 0.5, np.arange(N) + 0.5, indexing="ij")


def disk_image(M: int, N: int, R: float, contrast: float) -> np.ndarray:
    """``contrast`` on the centred disk of radius ``R`` pixels, 0 elsewhere."""
    if not R > 0:
        raise ValueError("disk radius must be positive")
    x, y = _centres(M, N)
    inside = (x - M / 2.0) ** 2 + (y - N / 2.0) ** 2 < R * R
    return np.where(inside, float(contrast), 0.0)


def disk_masks(shape: tuple[int, int], R: float) -> tuple[np.ndarray, np.ndarray]:
    """Pixels inside ``B(0, R/2)`` and outside ``B(0, 3R/2)`` of the centred disk."""
    M, N = shape
    x, y = _centres(M, N)
    r2 = (x - M / 2.0) ** 2 + (y - N / 2.0) ** 2
    return r2 < (0.5 * R) ** 2, r2 > (1.5 * R) ** 2


def bars_image(M: int = 128, N: int = 128) -> np.ndarray:
    """Four axis-aligned bars at grey levels 32, 96, 160, 224 on black.

    Box coordinates are defined for 128 x 128 and scaled to other sizes.
    """
    out = np.zeros((M, N))
    for level, (r0, r1, c0, c1) in zip(BAR_LEVELS, BAR_BOXES):
        out[r0 * M // 128 : r1 * M // 128, c0 * N // 128 : c1 * N // 128] = level
    return out


def triangle_image(M: int = 254, N: int = 214) -> np.ndarray:
    """One filled triangle (grey 200) on a grey-25 background."""
    sx, sy = M / 254.0, N / 214.0
    (a0, a1), (b0, b1), (c0, c1) = [(p * sx, q * sy) for p, q in TRIANGLE_VERTICES]
    x, y = _centres(M, N)

    def side(p0, p1, q0, q1):
        return (q0 - p0) * (y - p1) - (q1 - p1) * (x - p0)

    s1 = side(a0, a1, b0, b1)
    s2 = side(b0, b1, c0, c1)
    s3 = side(c0, c1, a0, a1)
    inside = ((s1 >= 0) & (s2 >= 0) & (s3 >= 0)) | ((s1 <= 0) & (s2 <= 0) & (s3 <= 0))
    return np.where(inside, TRIANGLE_LEVEL, TRIANGLE_BACKGROUND)


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    seed: int
    mean: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("noise sigma must be nonnegative")


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def add_gaussian_noise(u: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """``u + n`` with ``n ~ N(mean, sigma^2)`` i.i.d.; no clamping."""
    u = np.asarray(u, dtype=float)
    if spec.sigma == 0 and spec.mean == 0:
        return u.copy()
    return u + rng(spec.seed).normal(spec.mean, spec.sigma, size=u.shape)


def random_mask(shape: tuple[int, int], fraction: float, seed: int) -> np.ndarray:
    """Boolean missing-set with each pixel missing independently with probability ``fraction``."""
    if not 0 <= fraction < 1:
        raise ValueError("mask fraction must be in [0, 1)")
    return rng(seed).random(shape) < fraction


def degrade(
    u: np.ndarray,
    kernel: BlurKernel | None = None,
    noise: NoiseSpec | None = None,
) -> np.ndarray:
    """Blur first, then add noise."""
    out = np.asarray(u, dtype=float)
    if kernel is not None:
        out = apply_blur(out, kernel)
    if noise is not None:
        out = add_gaussian_noise(out, noise)
    return out
