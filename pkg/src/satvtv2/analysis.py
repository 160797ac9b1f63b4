"""Radial checks of the Weingarten regulariser on a smoothed disk.

A disk image ``f = h * 1_{|x| < R}`` on ``(-2R, 2R)^2`` is approached by C^2
radial profiles ``u(r)`` that equal ``h`` on ``[0, R1]``, vanish on
``[R2, 2R]`` and fall with slope ``-s`` at ``r = R``. For such profiles the
integral of ``|W_u|`` tends to ``4 pi R`` as ``s`` grows, independently of the
height ``h``, whereas the total variation tends to ``2 pi R h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .synth import disk_masks

QUAD_RTOL = 1e-6
_QUAD_LIMIT = 500


@dataclass(frozen=True)
class RadialProfile:
    """Quintic-smoothstep transition from ``height`` to 0 centred at ``R``.

    The ramp width ``15*height/(8*s)`` puts the steepest slope ``-s`` at
    ``r = R``; ``u''`` is <= 0 before ``R`` and >= 0 after it.
    """

    R: float
    height: float
    steepness: float

    def __post_init__(self):
        if self.R <= 0 or self.height <= 0:
            raise ValueError("R and height must be positive")
        if not self.steepness > 2.0 * self.height / self.R:
            raise ValueError(
                f"steepness {self.steepness!r} must exceed 2*height/R = {2.0 * self.height / self.R!r}"
            )

    @property
    def width(self) -> float:
        return 15.0 * self.height / (8.0 * self.steepness)

    @property
    def R1(self) -> float:
        return self.R - 0.5 * self.width

    @property
    def R2(self) -> float:
        return self.R + 0.5 * self.width

    def _t(self, r):
        return np.clip((np.asarray(r, dtype=float) - self.R1) / self.width, 0.0, 1.0)

    def u(self, r):
        t = self._t(r)
        return self.height * (1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t * t))

    def du(self, r):
        t = self._t(r)
        return -self.height * 30.0 * t * t * (1.0 - t) ** 2 / self.width

    def d2u(self, r):
        t = self._t(r)
        return -self.height * 30.0 * t * (2.0 * t - 1.0) * (t - 1.0) * 2.0 / self.width**2

    def samples(self, n: int = 2001) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        r = np.linspace(0.0, 2.0 * self.R, n)
        return r, self.u(r), self.du(r), self.d2u(r)


def smooth_disk_profile(R: float, height: float, steepness: float) -> RadialProfile:
    return RadialProfile(R, height, steepness)


def radial_weingarten_norm_from(du, d2u, r):
    """``|W|`` of a radial surface from ``u'`` and ``u''`` at radius ``r > 0``."""
    q = 1.0 + du * du
    return np.sqrt((d2u / q**1.5) ** 2 + (du / (r * np.sqrt(q))) ** 2)


def radial_weingarten_norm(profile: RadialProfile, r):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("radial Weingarten norm is only defined for r > 0")
    return radial_weingarten_norm_from(profile.du(r), profile.d2u(r), r)


def _quad(fun, a: float, b: float, points=None) -> float:
    value, _err, *rest = integrate.quad(
        fun, a, b, epsrel=QUAD_RTOL, epsabs=0.0, limit=_QUAD_LIMIT, points=points, full_output=1
    )
    if len(rest) > 1:
        raise ArithmeticError(f"quadrature did not converge on [{a}, {b}]: {rest[1]}")
    return value


def _ramp_quad(profile: RadialProfile, fun, lo: float | None = None, hi: float | None = None) -> float:
    """Integrate ``fun`` over the part of ``[lo, hi]`` where the ramp is active."""
    lo = profile.R1 if lo is None else max(lo, profile.R1)
    hi = profile.R2 if hi is None else min(hi, profile.R2)
    if hi <= lo:
        return 0.0
    pts = [profile.R] if lo < profile.R < hi else None
    return _quad(fun, lo, hi, pts)


def weingarten_integral(profile: RadialProfile) -> float:
    """``2 pi * int_0^{2R} r |W_u(r)| dr``; the integrand vanishes off the ramp."""
    return 2.0 * math.pi * _ramp_quad(profile, lambda r: r * float(radial_weingarten_norm(profile, r)))


def _tilt(profile: RadialProfile, r) -> float:
    d = float(profile.du(r))
    return d / math.sqrt(1.0 + d * d)


def weingarten_bounds(profile: RadialProfile) -> tuple[float, float]:
    """Lower and upper bounds on :func:`weingarten_integral` for profiles in the admissible set."""
    head = -4.0 * math.pi * profile.R * _tilt(profile, profile.R)
    inner = _ramp_quad(profile, lambda r: _tilt(profile, r), hi=profile.R)
    outer = _ramp_quad(profile, lambda r: _tilt(profile, r), lo=profile.R)
    return head + 4.0 * math.pi * inner, head - 4.0 * math.pi * outer


def tv_integral(profile: RadialProfile) -> float:
    """``int |grad u| = 2 pi int r |u'| dr``; tends to ``2 pi R h``."""
    return 2.0 * math.pi * _ramp_quad(profile, lambda r: -r * float(profile.du(r)))


def fidelity_lower_bound_check(profile: RadialProfile) -> tuple[float, float]:
    """``(int (f - u)^2, -pi h^3 R / (12 u'(R)))`` with ``f`` the sharp disk."""
    h, R = profile.height, profile.R
    lo = _quad(lambda r: r * (h - float(profile.u(r))) ** 2, profile.R1, R) if profile.R1 < R else 0.0
    hi = _quad(lambda r: r * float(profile.u(r)) ** 2, R, profile.R2) if profile.R2 > R else 0.0
    lhs = 2.0 * math.pi * (lo + hi)
    rhs = -math.pi * h**3 * R / (12.0 * float(profile.du(R)))
    return lhs, rhs


def energy_lower_bound(profile: RadialProfile, lam: float) -> tuple[float, float]:
    """Weighted data term ``int (f-u)^2 / (2 lam)`` and its bound ``-pi h^3 R / (24 lam u'(R))``."""
    lhs, rhs = fidelity_lower_bound_check(profile)
    return lhs / (2.0 * lam), rhs / (2.0 * lam)


def contrast_preserving_lambda(height: float, R: float) -> float:
    """Threshold ``h^4 / (48 R)`` below which the sharp disk is the infimum over the profile set."""
    return height**4 / (48.0 * R)


@dataclass(frozen=True)
class SweepRow:
    steepness: float
    integral: float
    lower: float
    upper: float
    target: float
    tv: float
    fidelity: float
    fidelity_bound: float

    @property
    def rel_error(self) -> float:
        return abs(self.integral - self.target) / self.target

    @property
    def sandwich_ok(self) -> bool:
        slack = 1e-9 * self.target
        return self.lower - slack <= self.integral <= self.upper + slack

    @property
    def fidelity_ok(self) -> bool:
        return self.fidelity >= self.fidelity_bound


SWEEP_FACTORS = (10.0, 1e2, 1e3, 1e4)


def steepness_sweep(R: float, height: float, factors=SWEEP_FACTORS) -> list[SweepRow]:
    """Evaluate the integral, its bounds and the fidelity bound at ``s = factor * 2h/R``."""
    rows = []
    for fac in factors:
        p = smooth_disk_profile(R, height, fac * 2.0 * height / R)
        lower, upper = weingarten_bounds(p)
        lhs, rhs = fidelity_lower_bound_check(p)
        rows.append(
            SweepRow(p.steepness, weingarten_integral(p), lower, upper, 4.0 * math.pi * R, tv_integral(p), lhs, rhs)
        )
    return rows


def rasterize(profile: RadialProfile, M: int, mesh: float) -> np.ndarray:
    """Sample ``u(|x|)`` on an ``M x M`` grid of spacing ``mesh`` centred on the origin."""
    c = (np.arange(M) - (M - 1) / 2.0) * mesh
    x, y = np.meshgrid(c, c, indexing="ij")
    return profile.u(np.hypot(x, y))


def contrast_of(u: np.ndarray, R: float) -> float:
    """Mean inside ``B(0, R/2)`` minus mean outside ``B(0, 3R/2)`` (radii in pixels)."""
    inside, outside = disk_masks(np.shape(u), R)
    return float(np.mean(u[inside]) - np.mean(u[outside]))


def rof_disk_contrast_loss(weight: float, R: float, area: float | None = None) -> float:
    """Contrast lost by the ROF minimiser ``weight*TV + 1/2 L2`` on a disk of radius ``R``.

    In the plane the loss is ``2*weight/R``. On a bounded periodic domain of
    total ``area`` the mean is conserved, so the background rises as well and
    the loss grows by ``area / (area - pi R^2)``.
    """
    loss = 2.0 * weight / R
    if area is not None:
        loss *= area / (area - math.pi * R * R)
    return loss
