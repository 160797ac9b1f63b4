"""Restoration tasks: denoising, deblurring with a known kernel, inpainting.

Blur is a circular convolution. The kernel is embedded with its centre tap at
pixel ``(0, 0)`` and the remaining taps at wrapped indices, so its DFT
``K_hat`` diagonalises the blur exactly and ``conj(K_hat)`` gives the adjoint.

Inpainting uses the splitting ``z = u`` with penalty ``r3`` and scaled
multiplier ``lam3``; the data term acts on ``z`` only outside the missing
set ``D`` (``mask == True``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np


@dataclass(frozen=True)
class BlurKernel:
    taps: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        if taps.ndim != 2 or taps.shape[0] != taps.shape[1] or taps.shape[0] % 2 == 0:
            raise ValueError("kernel must be square with odd size")
        if np.any(taps < 0):
            raise ValueError("kernel taps must be nonnegative")
        if abs(taps.sum() - 1.0) > 1e-12:
            raise ValueError(f"kernel taps must sum to 1, got {taps.sum()!r}")
        object.__setattr__(self, "taps", taps)

    @property
    def size(self) -> int:
        return self.taps.shape[0]


def gaussian_kernel(size: int, sigma: float) -> BlurKernel:
    """Truncated, normalised Gaussian on a ``size x size`` integer stencil."""
    if size < 1 or size % 2 == 0:
        raise ValueError("kernel size must be a positive odd integer")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    r = (size - 1) // 2
    x = np.arange(-r, r + 1, dtype=float)
    g = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / (2.0 * sigma * sigma))
    return BlurKernel(g / g.sum(), f"gaussian:{size}:{sigma:g}")


def average_kernel(size: int) -> BlurKernel:
    if size < 1 or size % 2 == 0:
        raise ValueError("kernel size must be a positive odd integer")
    return BlurKernel(np.full((size, size), 1.0 / (size * size)), f"average:{size}")


def parse_kernel(text: str) -> BlurKernel:
    """Parse ``gaussian:<size>:<sigma>`` or ``average:<size>``."""
    parts = text.strip().lower().split(":")
    try:
        if parts[0] == "gaussian" and len(parts) == 3:
            return gaussian_kernel(int(parts[1]), float(parts[2]))
        if parts[0] == "average" and len(parts) == 2:
            return average_kernel(int(parts[1]))
    except ValueError as exc:
        raise ValueError(f"bad kernel spec {text!r}: {exc}") from None
    raise ValueError(f"bad kernel spec {text!r}; use gaussian:<size>:<sigma> or average:<size>")


def embed_kernel(kernel: BlurKernel, shape: tuple[int, int]) -> np.ndarray:
    """Place the taps on an ``shape`` grid with the kernel centre at ``(0, 0)``."""
    M, N = shape
    k = kernel.size
    if k > M or k > N:
        raise ValueError(f"kernel of size {k} does not fit a {M}x{N} grid")
    r = (k - 1) // 2
    out = np.zeros(shape)
    idx = np.arange(-r, r + 1)
    out[np.ix_(idx % M, idx % N)] = kernel.taps
    return out


def kernel_transform(kernel: BlurKernel, shape: tuple[int, int]) -> np.ndarray:
    return np.fft.fft2(embed_kernel(kernel, shape))


def apply_blur(u: np.ndarray, kernel: BlurKernel) -> np.ndarray:
    """Circular convolution ``K u``."""
    Khat = kernel_transform(kernel, u.shape)
    return np.real(np.fft.ifft2(Khat * np.fft.fft2(u)))


def apply_blur_adjoint(g: np.ndarray, kernel: BlurKernel) -> np.ndarray:
    """Circular correlation ``K^T g`` via the conjugate spectrum."""
    Khat = kernel_transform(kernel, g.shape)
    return np.real(np.fft.ifft2(np.conj(Khat) * np.fft.fft2(g)))


def load_mask(values: np.ndarray, threshold: int = 128) -> np.ndarray:
    """8-bit mask image to boolean missing-set (``True`` where value >= threshold)."""
    return np.asarray(values) >= threshold


@dataclass
class ProblemSpec:
    """A restoration task and the pieces of the u-subproblem it contributes."""

    kind: Literal["denoise", "deblur", "inpaint"] = "denoise"
    kernel: BlurKernel | None = None
    mask: np.ndarray | None = None
    r3: float = 0.0
    _khat: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("denoise", "deblur", "inpaint"):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.kind == "deblur" and self.kernel is None:
            raise ValueError("deblurring needs a kernel")
        if self.kind == "inpaint":
            if self.mask is None:
                raise ValueError("inpainting needs a mask")
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.all():
                raise ValueError("inpainting mask must leave at least one known pixel")
            if not self.r3 > 0:
                raise ValueError("inpainting needs r3 > 0")

    @classmethod
    def denoise(cls) -> "ProblemSpec":
        return cls("denoise")

    @classmethod
    def deblur(cls, kernel: BlurKernel) -> "ProblemSpec":
        return cls("deblur", kernel=kernel)

    @classmethod
    def inpaint(cls, mask: np.ndarray, r3: float) -> "ProblemSpec":
        return cls("inpaint", mask=mask, r3=r3)

    def check_shape(self, shape: tuple[int, int]) -> None:
        if self.kind == "inpaint" and self.mask.shape != tuple(shape):
            raise ValueError(f"mask shape {self.mask.shape} does not match image shape {tuple(shape)}")
        if self.kind == "deblur" and (self.kernel.size > shape[0] or self.kernel.size > shape[1]):
            raise ValueError("kernel larger than image")

    def khat(self, shape: tuple[int, int]) -> np.ndarray:
        key = tuple(shape)
        if key not in self._khat:
            self._khat[key] = kernel_transform(self.kernel, key)
        return self._khat[key]

    def forward(self, u: np.ndarray) -> np.ndarray:
        """The degradation operator (identity unless deblurring)."""
        if self.kind == "deblur":
            return np.real(np.fft.ifft2(self.khat(u.shape) * np.fft.fft2(u)))
        return u

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        if self.kind == "deblur":
            return np.real(np.fft.ifft2(np.conj(self.khat(g.shape)) * np.fft.fft2(g)))
        return g

    def zero_order(self, lam: float, mu: float, shape: tuple[int, int]) -> float | np.ndarray:
        """Zero-order term of the u-subproblem Fourier multiplier."""
        if self.kind == "denoise":
            return 1.0 / lam + mu
        if self.kind == "deblur":
            return np.abs(self.khat(shape)) ** 2 / lam + mu
        return self.r3 + mu

    def zero_order_apply(self, u: np.ndarray, lam: float, mu: float) -> np.ndarray:
        """Physical-space action of :meth:`zero_order`."""
        if self.kind == "denoise":
            return u / lam + mu * u
        if self.kind == "deblur":
            return self.adjoint(self.forward(u)) / lam + mu * u
        return (self.r3 + mu) * u

    def fidelity_rhs(self, f: np.ndarray, lam: float, z=None, lam3=None) -> np.ndarray:
        if self.kind == "denoise":
            return f / lam
        if self.kind == "deblur":
            return self.adjoint(f) / lam
        return self.r3 * z - lam3

    def fidelity_density(self, u: np.ndarray, f: np.ndarray, lam: float) -> np.ndarray:
        """Pointwise data term ``(Ku - f)^2 / (2 lam)``, zero on the missing set."""
        r = self.forward(u) - f
        d = r * r / (2.0 * lam)
        if self.kind == "inpaint":
            d = np.where(self.mask, 0.0, d)
        return d


def update_z_inpaint(
    u: np.ndarray, f: np.ndarray, mask: np.ndarray, lam: float, r3: float, lam3: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form z-step and multiplier step of the inpainting splitting.

    Known pixels: ``z = (f/lam + r3*u + lam3) / (1/lam + r3)``; missing pixels:
    ``z = u + lam3/r3``. Returns ``(z, lam3 + r3*(u - z))``.
    """
    if not r3 > 0:
        raise ValueError("r3 must be positive")
    known = (f / lam + r3 * u + lam3) / (1.0 / lam + r3)
    z = np.where(mask, u + lam3 / r3, known)
    return z, lam3 + r3 * (u - z)
