"""ADMM for the spatially adapted first- and second-order model.

Minimises

    sum h^2 [ alpha(u)|grad u| + beta(u)|hess u| + fidelity(u) ]

by splitting ``v = grad u`` and ``w = hess u`` (plus ``z = u`` when
inpainting). One sweep updates u (spectral solve), the weights, v, w, z and
finally the multipliers, then checks the relative change in u.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Iterable, NamedTuple

import numpy as np

from . import metrics
from .grid import (
    DEFAULT_MESH,
    SpectralDenominator,
    div,
    div2,
    grad,
    hess,
    make_denominator,
    pointwise_norm,
    spectral_solve,
)
from .problems import ProblemSpec, update_z_inpaint
from .weights import Dynamic, WeightFields, WeightMode

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("k", "R1", "R2", "L1", "L2", "Ru", "E", "delta1", "delta2", "psnr", "ssim", "wall_ms")


class SolverDiverged(RuntimeError):
    """A non-finite value appeared in one of the iterates."""

    def __init__(self, k: int, name: str):
        super().__init__(f"non-finite values in {name} at iteration {k}")
        self.k = k
        self.name = name


@dataclass
class SolverConfig:
    lam: float = 100.0
    r1: float = 1.0
    r2: float = 2.0
    mu: float = 0.0
    gamma: float = 0.0
    tau: float = 0.0
    h: float = DEFAULT_MESH
    max_iter: int = 300
    tol: float = 2e-3
    weight_mode: WeightMode = field(default_factory=Dynamic)
    enable_first: bool = True
    enable_second: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.h > 0:
            raise ValueError("mesh size h must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")
        for name in ("r1", "r2", "mu", "gamma", "tau"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not (self.enable_first or self.enable_second):
            raise ValueError("at least one of the first/second order terms must be enabled")
        if self.enable_first and not self.r1 + self.gamma > 0:
            raise ValueError("r1 + gamma must be positive when the first-order term is enabled")
        if self.enable_second and not self.r2 + self.tau > 0:
            raise ValueError("r2 + tau must be positive when the second-order term is enabled")

    @property
    def r1_eff(self) -> float:
        return self.r1 if self.enable_first else 0.0

    @property
    def r2_eff(self) -> float:
        return self.r2 if self.enable_second else 0.0

    def as_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "weight_mode"}
        out["weight_mode"] = self.weight_mode.describe()
        return out


@dataclass
class SolverState:
    k: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray
    weights: WeightFields | None = None
    z: np.ndarray | None = None
    lam3: np.ndarray | None = None
    u_prev: np.ndarray | None = None
    lam1_prev: np.ndarray | None = None
    lam2_prev: np.ndarray | None = None

    @classmethod
    def initial(cls, f: np.ndarray, problem: ProblemSpec) -> "SolverState":
        M, N = f.shape
        u = np.array(f, dtype=float)
        z = lam3 = None
        if problem.kind == "inpaint":
            # missing pixels start at the mean of the known ones so f under the mask never matters
            u[problem.mask] = u[~problem.mask].mean()
            z = u.copy()
            lam3 = np.zeros_like(u)
        return cls(
            k=0,
            u=u,
            v=np.zeros((2, M, N)),
            w=np.zeros((4, M, N)),
            lam1=np.zeros((2, M, N)),
            lam2=np.zeros((4, M, N)),
            z=z,
            lam3=lam3,
        )


@dataclass
class TraceRecord:
    k: int
    R1: float
    R2: float
    L1: float
    L2: float
    Ru: float
    E: float
    delta1: float | None = None
    delta2: float | None = None
    psnr: float | None = None
    ssim: float | None = None
    wall_ms: float | None = None
    #: names of quantities whose denominator vanished (raw numerator reported)
    flags: tuple[str, ...] = ()

    def row(self) -> list[str]:
        out = []
        for name in TRACE_COLUMNS:
            value = getattr(self, name)
            if value is None:
                out.append("")
            elif name == "k":
                out.append(str(value))
            else:
                out.append(metrics.format_value(value))
        return out


def shrinkage(a: np.ndarray, b) -> np.ndarray:
    """Vectorial soft thresholding ``max(|a| - b, 0) * a / |a|``.

    ``a`` has its components on axis 0; ``b`` broadcasts against ``a[0]``.
    Where ``|a| = 0`` the result is 0.
    """
    a = np.asarray(a, dtype=float)
    norm = np.sqrt(np.sum(a * a, axis=0))
    keep = np.maximum(norm - b, 0.0)
    scale = np.divide(keep, norm, out=np.zeros_like(norm), where=norm > 0)
    return a * scale


def build_denominator(cfg: SolverConfig, problem: ProblemSpec, shape: tuple[int, int]) -> SpectralDenominator:
    zero = problem.zero_order(cfg.lam, cfg.mu, shape)
    return make_denominator(shape, zero, cfg.r1_eff, cfg.r2_eff, cfg.h)


def u_rhs(state: SolverState, cfg: SolverConfig, problem: ProblemSpec, f: np.ndarray) -> np.ndarray:
    h = cfg.h
    rhs = problem.fidelity_rhs(f, cfg.lam, state.z, state.lam3)
    if cfg.enable_first:
        rhs = rhs - div(cfg.r1 * state.v - state.lam1, h)
    if cfg.enable_second:
        rhs = rhs + div2(cfg.r2 * state.w - state.lam2, h)
    if cfg.mu:
        rhs = rhs + cfg.mu * state.u
    return rhs


def update_u(
    state: SolverState,
    cfg: SolverConfig,
    problem: ProblemSpec,
    f: np.ndarray,
    denominator: SpectralDenominator | None = None,
) -> np.ndarray:
    if denominator is None:
        denominator = build_denominator(cfg, problem, f.shape)
    return spectral_solve(u_rhs(state, cfg, problem, f), denominator)


def update_v(state: SolverState, cfg: SolverConfig, gu: np.ndarray | None = None) -> np.ndarray:
    """v-step on the freshly updated ``state.u`` and ``state.weights``."""
    if gu is None:
        gu = grad(state.u, cfg.h)
    if not cfg.enable_first:
        return gu
    c = cfg.r1 + cfg.gamma
    return shrinkage((cfg.r1 * gu + state.lam1 + cfg.gamma * state.v) / c, state.weights.alpha / c)


def update_w(state: SolverState, cfg: SolverConfig, hu: np.ndarray | None = None) -> np.ndarray:
    if hu is None:
        hu = hess(state.u, cfg.h)
    if not cfg.enable_second:
        return hu
    c = cfg.r2 + cfg.tau
    return shrinkage((cfg.r2 * hu + state.lam2 + cfg.tau * state.w) / c, state.weights.beta / c)


def update_multipliers(
    state: SolverState, cfg: SolverConfig, gu: np.ndarray | None = None, hu: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Dual ascent; disabled terms keep their multiplier unchanged."""
    if gu is None:
        gu = grad(state.u, cfg.h)
    if hu is None:
        hu = hess(state.u, cfg.h)
    lam1 = state.lam1 + cfg.r1 * (gu - state.v) if cfg.enable_first else state.lam1
    lam2 = state.lam2 + cfg.r2 * (hu - state.w) if cfg.enable_second else state.lam2
    return lam1, lam2


def _relative_l1(new: np.ndarray, old: np.ndarray) -> tuple[float, bool]:
    num = float(np.sum(np.abs(new - old)))
    den = float(np.sum(np.abs(old)))
    if den == 0.0:
        return num, True
    return num / den, False


def energy(
    u: np.ndarray,
    f: np.ndarray,
    weights: WeightFields,
    cfg: SolverConfig,
    problem: ProblemSpec,
    gu: np.ndarray | None = None,
    hu: np.ndarray | None = None,
) -> float:
    """Discrete objective with cell area ``h^2`` per pixel."""
    h = cfg.h
    if gu is None:
        gu = grad(u, h)
    if hu is None:
        hu = hess(u, h)
    density = problem.fidelity_density(u, f, cfg.lam)
    if cfg.enable_first:
        density = density + weights.alpha * pointwise_norm(gu)
    if cfg.enable_second:
        density = density + weights.beta * pointwise_norm(hu)
    return float(h * h * np.sum(density))


def diagnostics(
    state: SolverState,
    cfg: SolverConfig,
    problem: ProblemSpec,
    f: np.ndarray,
    reference: np.ndarray | None = None,
    gu: np.ndarray | None = None,
    hu: np.ndarray | None = None,
) -> TraceRecord:
    """Residuals, relative changes and energy of the current iterate."""
    if gu is None:
        gu = grad(state.u, cfg.h)
    if hu is None:
        hu = hess(state.u, cfg.h)
    area = state.u.size
    R1 = float(np.sum(np.abs(state.v - gu))) / area
    R2 = float(np.sum(np.abs(state.w - hu))) / area
    flags = []
    L1 = L2 = Ru = 0.0
    if state.lam1_prev is not None:
        L1, bad = _relative_l1(state.lam1, state.lam1_prev)
        if bad:
            flags.append("L1")
        L2, bad = _relative_l1(state.lam2, state.lam2_prev)
        if bad:
            flags.append("L2")
    if state.u_prev is not None:
        Ru, bad = _relative_l1(state.u, state.u_prev)
        if bad:
            flags.append("Ru")
    E = energy(state.u, f, state.weights, cfg, problem, gu, hu)
    psnr = ssim = None
    if reference is not None:
        psnr = metrics.psnr(reference, state.u)
        ssim = metrics.ssim(reference, state.u) if min(state.u.shape) >= 11 else None
    return TraceRecord(state.k, R1, R2, L1, L2, Ru, E, psnr=psnr, ssim=ssim, flags=tuple(flags))


def _check_finite(k: int, **arrays: np.ndarray) -> None:
    for name, arr in arrays.items():
        if arr is not None and not np.all(np.isfinite(arr)):
            raise SolverDiverged(k, name)


def step(
    state: SolverState,
    cfg: SolverConfig,
    problem: ProblemSpec,
    f: np.ndarray,
    denominator: SpectralDenominator,
) -> tuple[SolverState, np.ndarray, np.ndarray]:
    """One ADMM sweep. Returns the new state plus ``grad u`` and ``hess u``."""
    k = state.k + 1
    u = update_u(state, cfg, problem, f, denominator)
    _check_finite(k, u=u)
    weights = cfg.weight_mode.weights(u, f, cfg.h)
    gu = grad(u, cfg.h)
    hu = hess(u, cfg.h)
    mid = replace(state, u=u, weights=weights)
    v = update_v(mid, cfg, gu)
    w = update_w(mid, cfg, hu)
    z, lam3 = state.z, state.lam3
    if problem.kind == "inpaint":
        z, lam3 = update_z_inpaint(u, f, problem.mask, cfg.lam, problem.r3, state.lam3)
    lam1, lam2 = update_multipliers(replace(mid, v=v, w=w), cfg, gu, hu)
    _check_finite(k, v=v, w=w, z=z, lam1=lam1, lam2=lam2, lam3=lam3)
    new = SolverState(
        k=k,
        u=u,
        v=v,
        w=w,
        lam1=lam1,
        lam2=lam2,
        weights=weights,
        z=z,
        lam3=lam3,
        u_prev=state.u,
        lam1_prev=state.lam1,
        lam2_prev=state.lam2,
    )
    return new, gu, hu


def iterate(
    cfg: SolverConfig,
    problem: ProblemSpec,
    f: np.ndarray,
    reference: np.ndarray | None = None,
    timing: bool = False,
) -> Iterable[tuple[SolverState, TraceRecord]]:
    """Yield ``(state, record)`` after every sweep until the stopping rule fires."""
    f = np.asarray(f, dtype=float)
    if f.ndim != 2 or min(f.shape) < 2:
        raise ValueError("observed image must be a 2-D array with both sides >= 2")
    check = f if problem.kind != "inpaint" else np.where(problem.mask, 0.0, f)
    if not np.all(np.isfinite(check)):
        raise ValueError("observed image contains non-finite values")
    problem.check_shape(f.shape)
    if reference is not None and np.shape(reference) != f.shape:
        raise ValueError("reference image shape does not match the observed image")
    denominator = build_denominator(cfg, problem, f.shape)
    state = SolverState.initial(f, problem)
    t0 = time.perf_counter()
    while state.k < cfg.max_iter:
        state, gu, hu = step(state, cfg, problem, f, denominator)
        rec = diagnostics(state, cfg, problem, f, reference, gu, hu)
        if timing:
            rec.wall_ms = (time.perf_counter() - t0) * 1e3
        yield state, rec
        if rec.Ru <= cfg.tol:
            log.debug("converged at k=%d (Ru=%.3e)", state.k, rec.Ru)
            break


def run(
    cfg: SolverConfig,
    problem: ProblemSpec,
    f: np.ndarray,
    reference: np.ndarray | None = None,
    on_iterate: Callable[[SolverState, TraceRecord], None] | None = None,
    timing: bool = False,
) -> tuple[np.ndarray, list[TraceRecord]]:
    """Run the solver from ``u = f`` and return the final image and its trace."""
    trace: list[TraceRecord] = []
    state = None
    for state, rec in iterate(cfg, problem, f, reference, timing):
        if on_iterate is not None:
            on_iterate(state, rec)
        trace.append(rec)
    return state.u, trace


class DeltaPair(NamedTuple):
    delta1: float
    delta2: float
    #: Cauchy-Schwarz bounds sum |alpha_k - alpha_bar| |v_k - v_bar| (resp. beta, w)
    bound1: float
    bound2: float


def _unit(p: np.ndarray) -> np.ndarray:
    n = pointwise_norm(p)
    return np.divide(p, n, out=np.zeros_like(p), where=n > 0)


def delta_pair(state: SolverState, proxy: SolverState, h: float = DEFAULT_MESH) -> DeltaPair:
    """Delta quantities of one iterate against a saddle-point proxy.

    ``delta1 = <(alpha(u_k) - alpha(u_bar)) s_k, v_k - v_bar>`` with
    ``s_k = v_k / |v_k|`` (0 where ``v_k = 0``); ``delta2`` likewise with
    ``beta``, ``w``. Inner products carry the cell area ``h^2``.
    """
    da = state.weights.alpha - proxy.weights.alpha
    db = state.weights.beta - proxy.weights.beta
    ev = state.v - proxy.v
    ew = state.w - proxy.w
    d1 = h * h * float(np.sum(da * np.sum(_unit(state.v) * ev, axis=0)))
    d2 = h * h * float(np.sum(db * np.sum(_unit(state.w) * ew, axis=0)))
    b1 = h * h * float(np.sum(np.abs(da) * pointwise_norm(ev)))
    b2 = h * h * float(np.sum(np.abs(db) * pointwise_norm(ew)))
    return DeltaPair(d1, d2, b1, b2)


def delta_diagnostics(states: Iterable[SolverState], proxy: SolverState, h: float = DEFAULT_MESH) -> list[DeltaPair]:
    return [delta_pair(s, proxy, h) for s in states]


def run_with_deltas(
    cfg: SolverConfig,
    problem: ProblemSpec,
    f: np.ndarray,
    reference: np.ndarray | None = None,
    timing: bool = False,
) -> tuple[np.ndarray, list[TraceRecord], list[DeltaPair]]:
    """Run twice: first to find the final iterate, then to score every iterate against it.

    The solver is deterministic, so the second pass retraces the first.
    """
    proxy = None
    for proxy, _ in iterate(cfg, problem, f, None, False):
        pass
    pairs: list[DeltaPair] = []

    def record(state, rec):
        pair = delta_pair(state, proxy, cfg.h)
        rec.delta1, rec.delta2 = pair.delta1, pair.delta2
        pairs.append(pair)

    u, trace = run(cfg, problem, f, reference, on_iterate=record, timing=timing)
    if not np.array_equal(u, proxy.u):
        raise RuntimeError("second pass diverged from the first; solver is not deterministic")
    return u, trace, pairs
