import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from satvtv2 import analysis as A
from satvtv2 import synth
from satvtv2.weights import weingarten_field


def test_profile_endpoints_and_slope():
    p = A.smooth_disk_profile(32.0, 100.0, 20.0)
    assert p.u(0.0) == pytest.approx(100.0)
    assert p.u(64.0) == pytest.approx(0.0)
    assert p.du(32.0) == pytest.approx(-20.0, rel=1e-12)
    assert 0 < p.R1 < p.R < p.R2 < 2 * p.R


def test_profile_curvature_signs():
    p = A.smooth_disk_profile(10.0, 5.0, 3.0)
    r_in = np.linspace(0.01, 10.0, 500, endpoint=False)
    r_out = np.linspace(10.0, 20.0, 500)[1:]
    assert np.all(p.d2u(r_in) <= 1e-12)
    assert np.all(p.d2u(r_out) >= -1e-12)


def test_profile_derivatives_match_finite_differences():
    p = A.smooth_disk_profile(10.0, 5.0, 3.0)
    r = np.linspace(p.R1 + 1e-3, p.R2 - 1e-3, 50)
    e = 1e-6
    assert np.allclose((p.u(r + e) - p.u(r - e)) / (2 * e), p.du(r), atol=1e-6)
    assert np.allclose((p.du(r + e) - p.du(r - e)) / (2 * e), p.d2u(r), atol=1e-5)


def test_profile_rejects_shallow_slope():
    with pytest.raises(ValueError):
        A.smooth_disk_profile(32.0, 100.0, 2 * 100.0 / 32.0)


def test_radial_norm_examples():
    assert A.radial_weingarten_norm_from(0.0, 0.0, 1.0) == 0.0
    R = 3.0
    r = np.linspace(0.1, 2.9, 30)
    root = np.sqrt(R * R - r * r)
    du, d2u = -r / root, -(R * R) / root**3
    assert np.allclose(A.radial_weingarten_norm_from(du, d2u, r), math.sqrt(2) / R, rtol=1e-12)
    a = 0.7
    assert np.allclose(A.radial_weingarten_norm_from(-a, 0.0, r), a / (r * math.sqrt(1 + a * a)))
    with pytest.raises(ValueError):
        A.radial_weingarten_norm(A.smooth_disk_profile(1.0, 1.0, 5.0), 0.0)


def _simpson_integral(p, n=200_001):
    r = np.linspace(p.R1, p.R2, n)
    return 2 * math.pi * integrate.simpson(r * A.radial_weingarten_norm(p, r), x=r)


@pytest.mark.parametrize("factor", [10.0, 100.0])
def test_integral_matches_dense_simpson(factor):
    p = A.smooth_disk_profile(32.0, 100.0, factor * 2 * 100.0 / 32.0)
    assert A.weingarten_integral(p) == pytest.approx(_simpson_integral(p), rel=1e-6)


def test_sweep_converges_monotonically_to_4_pi_R():
    rows = A.steepness_sweep(32.0, 100.0)
    errs = [r.rel_error for r in rows]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.05
    assert all(r.sandwich_ok and r.fidelity_ok for r in rows)
    for r in rows:
        assert r.tv == pytest.approx(2 * math.pi * 32.0 * 100.0, rel=1e-6)


def test_fidelity_bound_moderate_slope():
    p = A.smooth_disk_profile(20.0, 50.0, 4 * 50.0 / 20.0 * 1.0001)
    lhs, rhs = A.fidelity_lower_bound_check(p)
    assert lhs >= rhs > 0


def test_energy_bound_is_half_lambda_scaled():
    p = A.smooth_disk_profile(20.0, 50.0, 40.0)
    lhs, rhs = A.fidelity_lower_bound_check(p)
    e_lhs, e_rhs = A.energy_lower_bound(p, 3.0)
    assert e_lhs == pytest.approx(lhs / 6.0)
    assert e_rhs == pytest.approx(-math.pi * 50.0**3 * 20.0 / (24 * 3.0 * p.du(20.0)))


@settings(max_examples=25, deadline=None)
@given(st.floats(2.0, 100.0), st.floats(0.5, 200.0), st.floats(1.05, 500.0))
def test_bounds_hold_for_random_profiles(R, h, factor):
    p = A.smooth_disk_profile(R, h, factor * 2 * h / R)
    lo, hi = A.weingarten_bounds(p)
    val = A.weingarten_integral(p)
    slack = 1e-8 * 4 * math.pi * R
    assert lo - slack <= val <= hi + slack
    lhs, rhs = A.fidelity_lower_bound_check(p)
    assert lhs >= rhs * (1 - 1e-9)


def _grid_vs_radial_error(p, mesh):
    M = int(round(4 * p.R / mesh))
    _, n = weingarten_field(A.rasterize(p, M, mesh), mesh)
    c = (np.arange(M) - (M - 1) / 2.0) * mesh
    x, y = np.meshgrid(c, c, indexing="ij")
    r = np.hypot(x, y)
    ring = (r > p.R1 + 0.1 * p.width) & (r < p.R2 - 0.1 * p.width)
    radial = A.radial_weingarten_norm(p, r[ring])
    return np.max(np.abs(n[ring] - radial) / radial)


def test_radial_norm_matches_grid_norm():
    p = A.smooth_disk_profile(1.0, 0.5, 1.05 * 2 * 0.5)
    coarse = _grid_vs_radial_error(p, 0.004)
    fine = _grid_vs_radial_error(p, 0.002)
    assert fine < 0.02
    # first-order stencil: halving the mesh roughly halves the error
    assert fine < 0.6 * coarse


def test_contrast_of():
    d = synth.disk_image(128, 128, 32, 100.0)
    assert A.contrast_of(d, 32) == 100.0
    assert A.contrast_of(np.zeros((128, 128)), 32) == 0.0
    sigma = 10.0
    noisy = synth.add_gaussian_noise(d, synth.NoiseSpec(sigma, 9))
    inside, outside = synth.disk_masks(d.shape, 32)
    tol = 3 * sigma * math.sqrt(1 / inside.sum() + 1 / outside.sum())
    assert abs(A.contrast_of(noisy, 32) - 100.0) < tol


def test_thresholds():
    assert A.contrast_preserving_lambda(100.0, 160.0) == pytest.approx(100.0**4 / (48 * 160.0))
    assert A.rof_disk_contrast_loss(4.0, 2.0) == 4.0
    area = 100.0
    assert A.rof_disk_contrast_loss(4.0, 2.0, area) == pytest.approx(4.0 * area / (area - math.pi * 4.0))
