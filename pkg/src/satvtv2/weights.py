"""Spatially adapted weights derived from the image surface ``(x, u(x))``.

``beta(u) = 1 / sqrt(1 + |grad u|^2)`` acts as an edge indicator (small at
edges, 1 on flat regions) and ``alpha(u) = |grad beta(u)|`` is its variation.
Both are evaluated with the same forward-difference gradient used by the
solver, without smoothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import DEFAULT_MESH, grad, hess, pointwise_norm


def beta_field(u: np.ndarray, h: float = DEFAULT_MESH) -> np.ndarray:
    g = grad(u, h)
    return 1.0 / np.sqrt(1.0 + np.sum(g * g, axis=0))


def alpha_field(u: np.ndarray, h: float = DEFAULT_MESH) -> np.ndarray:
    return pointwise_norm(grad(beta_field(u, h), h))


def weingarten_field(u: np.ndarray, h: float = DEFAULT_MESH) -> tuple[np.ndarray, np.ndarray]:
    """Discrete Weingarten map of the surface ``z = u(x, y)``.

    ``W[a, b] = u_a * d_b(beta) + beta * u_ab``, i.e. the Jacobian of
    ``beta * grad u``. Returns the ``(4, M, N)`` field ordered
    ``(11, 12, 21, 22)`` and its pointwise Frobenius norm.
    """
    gu = grad(u, h)
    beta = 1.0 / np.sqrt(1.0 + np.sum(gu * gu, axis=0))
    gb = grad(beta, h)
    H = hess(u, h)
    W = np.stack(
        (
            gu[0] * gb[0] + beta * H[0],
            gu[0] * gb[1] + beta * H[1],
            gu[1] * gb[0] + beta * H[2],
            gu[1] * gb[1] + beta * H[3],
        )
    )
    return W, pointwise_norm(W)


@dataclass(frozen=True)
class WeightFields:
    alpha: np.ndarray
    beta: np.ndarray
    mode: "WeightMode"


class WeightMode:
    """Base class; subclasses decide where the weights come from."""

    name = "base"
    #: True when the weights depend on the current iterate.
    dynamic = False

    def weights(self, u_latest: np.ndarray, f: np.ndarray, h: float) -> WeightFields:
        raise NotImplementedError

    def describe(self) -> str:
        return self.name


class Dynamic(WeightMode):
    """Recompute ``alpha, beta`` from the newest iterate every sweep."""

    name = "dynamic"
    dynamic = True

    def weights(self, u_latest, f, h):
        return WeightFields(alpha_field(u_latest, h), beta_field(u_latest, h), self)


class Observed(WeightMode):
    """Weights computed once from the observed image ``f`` and then reused."""

    name = "observed"

    def __init__(self):
        self._cache: WeightFields | None = None

    def weights(self, u_latest, f, h):
        if self._cache is None:
            self._cache = WeightFields(alpha_field(f, h), beta_field(f, h), self)
        return self._cache


class Oracle(WeightMode):
    """Weights computed from a known reference (e.g. the clean image)."""

    name = "oracle"

    def __init__(self, reference: np.ndarray):
        self.reference = np.asarray(reference, dtype=float)
        self._cache: WeightFields | None = None

    def weights(self, u_latest, f, h):
        if self.reference.shape != np.shape(u_latest):
            raise ValueError(
                f"oracle reference shape {self.reference.shape} does not match "
                f"image shape {np.shape(u_latest)}"
            )
        if self._cache is None:
            ref = self.reference
            self._cache = WeightFields(alpha_field(ref, h), beta_field(ref, h), self)
        return self._cache


@dataclass
class Constant(WeightMode):
    """Uniform weights; ``alpha0=0`` or ``beta0=0`` give the pure TV2 / TV baselines."""

    alpha0: float = 0.0
    beta0: float = 0.0
    name: str = field(default="constant", init=False)

    def __post_init__(self):
        if self.alpha0 < 0 or self.beta0 < 0:
            raise ValueError("constant weights must be nonnegative")

    def weights(self, u_latest, f, h):
        shape = np.shape(u_latest)
        return WeightFields(np.full(shape, float(self.alpha0)), np.full(shape, float(self.beta0)), self)

    def describe(self) -> str:
        return f"constant:{self.alpha0:g}:{self.beta0:g}"


def weights_for(mode: WeightMode, u_latest: np.ndarray, f: np.ndarray, h: float = DEFAULT_MESH) -> WeightFields:
    return mode.weights(u_latest, f, h)


def parse_weight_mode(text: str, reference: np.ndarray | None = None) -> WeightMode:
    """Parse ``dynamic``, ``observed``, ``oracle`` or ``constant:<alpha>:<beta>``."""
    key, _, rest = text.partition(":")
    key = key.strip().lower()
    if key == "dynamic":
        return Dynamic()
    if key == "observed":
        return Observed()
    if key == "oracle":
        if reference is None:
            raise ValueError("oracle weight mode needs a reference image")
        return Oracle(reference)
    if key == "constant":
        parts = rest.split(":")
        if len(parts) != 2:
            raise ValueError("constant weight mode is written constant:<alpha>:<beta>")
        return Constant(float(parts[0]), float(parts[1]))
    raise ValueError(f"unknown weight mode {text!r}")
