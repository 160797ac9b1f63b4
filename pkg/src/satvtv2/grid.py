"""Periodic finite-difference operators on an M x N image grid.

Fields are plain numpy arrays:

* scalar image: shape ``(M, N)``
* gradient-like field: shape ``(2, M, N)``, components ``(x, y)``
* Hessian-like field: shape ``(4, M, N)``, components ``(xx, xy, yx, yy)``

Axis 0 of an image is the ``x`` (row index ``i``) direction and axis 1 the
``y`` (column index ``j``) direction. Every difference quotient is divided by
the mesh size ``h``. The Hessian uses forward differences twice and its
adjoint backward differences twice, so ``div2(hess(u))`` is diagonalised by
the DFT with symbol ``S**2`` where ``S`` is the symbol of ``-div(grad(u))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_MESH = 5.0


def _fwd(u: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(u, -1, axis=axis) - u) / h


def _bwd(u: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (u - np.roll(u, 1, axis=axis)) / h


def check_image(u: np.ndarray) -> np.ndarray:
    """Return ``u`` as a float array after validating the grid invariants."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 2 or u.shape[0] < 2 or u.shape[1] < 2:
        raise ValueError(f"image must be a 2-D array with M, N >= 2, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("image contains non-finite values")
    return u


def grad(u: np.ndarray, h: float = DEFAULT_MESH) -> np.ndarray:
    """Forward-difference gradient, shape ``(2, M, N)``."""
    return np.stack((_fwd(u, 0, h), _fwd(u, 1, h)))


def div(p: np.ndarray, h: float = DEFAULT_MESH) -> np.ndarray:
    """Backward-difference divergence; ``div = -grad^T``."""
    return _bwd(p[0], 0, h) + _bwd(p[1], 1, h)


def hess(u: np.ndarray, h: float = DEFAULT_MESH) -> np.ndarray:
    """Discrete Hessian ``(u_xx, u_xy, u_yx, u_yy)`` built from forward differences.

    Periodic forward differences commute, so the two mixed components are
    equal; one is computed and stored twice so they also agree bitwise.
    """
    ux = _fwd(u, 0, h)
    uy = _fwd(u, 1, h)
    uxy = _fwd(uy, 0, h)
    return np.stack((_fwd(ux, 0, h), uxy, uxy, _fwd(uy, 1, h)))


def div2(w: np.ndarray, h: float = DEFAULT_MESH) -> np.ndarray:
    """Second-order divergence, the exact adjoint of :func:`hess`."""
    out = _bwd(_bwd(w[0], 0, h), 0, h)
    out += _bwd(_bwd(w[1], 0, h), 1, h)
    out += _bwd(_bwd(w[2], 1, h), 0, h)
    out += _bwd(_bwd(w[3], 1, h), 1, h)
    return out


def pointwise_norm(p: np.ndarray) -> np.ndarray:
    """Euclidean norm over the leading (component) axis."""
    return np.sqrt(np.sum(p * p, axis=0))


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Plain Euclidean inner product of two equally shaped fields."""
    return float(np.sum(a * b))


def first_order_symbol(M: int, N: int, h: float = DEFAULT_MESH) -> np.ndarray:
    """Eigenvalues of ``-div(grad(.))`` under the 2-D DFT, shape ``(M, N)``.

    ``S[k, l] = (4 sin^2(pi k / M) + 4 sin^2(pi l / N)) / h^2``.
    """
    if M < 2 or N < 2:
        raise ValueError("grid must be at least 2 x 2")
    sk = 4.0 * np.sin(np.pi * np.arange(M) / M) ** 2
    sl = 4.0 * np.sin(np.pi * np.arange(N) / N) ** 2
    return (sk[:, None] + sl[None, :]) / (h * h)


@dataclass
class SpectralDenominator:
    """Fourier multiplier ``zero_order + r1*S + r2*S**2`` of a u-subproblem.

    ``zero_order`` is either a scalar or an ``(M, N)`` array (deblurring puts
    ``|K_hat|^2 / lambda + mu`` there).
    """

    values: np.ndarray
    zero_order: float | np.ndarray
    r1: float
    r2: float
    h: float
    symbol: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def make_denominator(
    shape: tuple[int, int],
    zero_order: float | np.ndarray,
    r1: float,
    r2: float,
    h: float = DEFAULT_MESH,
) -> SpectralDenominator:
    """Assemble ``zero_order + r1*S + r2*S^2`` and reject non-positive entries."""
    S = first_order_symbol(shape[0], shape[1], h)
    values = zero_order + r1 * S + r2 * S * S
    values = np.broadcast_to(values, shape).astype(float)
    if not np.all(values > 0):
        raise ValueError(
            "spectral denominator has non-positive entries; "
            "check lambda, mu, r3 and the kernel"
        )
    return SpectralDenominator(values, zero_order, float(r1), float(r2), float(h), S)


def spectral_solve(rhs: np.ndarray, D: SpectralDenominator) -> np.ndarray:
    """Solve ``A u = rhs`` where ``A`` is diagonal in the DFT basis with entries ``D``.

    ``D`` must be symmetric under ``(k, l) -> (-k, -l)``, which holds for every
    denominator built here, so the real transform is used.
    """
    N = rhs.shape[1]
    half = D.values[:, : N // 2 + 1]
    return np.fft.irfft2(np.fft.rfft2(rhs) / half, s=rhs.shape)


def apply_operator(u: np.ndarray, zero_order_apply, r1: float, r2: float, h: float) -> np.ndarray:
    """Apply ``Z(u) - r1*div(grad u) + r2*div2(hess u)`` in physical space.

    ``zero_order_apply`` maps ``u`` to the zero-order part (e.g. ``u/lam`` or
    ``K^T K u / lam + mu*u``).
    """
    out = zero_order_apply(u)
    if r1:
        out = out - r1 * div(grad(u, h), h)
    if r2:
        out = out + r2 * div2(hess(u, h), h)
    return out
