import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from satvtv2 import problems as P


def _circular_convolve(u, taps):
    """Direct spatial circular convolution with the kernel centre at offset 0."""
    M, N = u.shape
    r = taps.shape[0] // 2
    out = np.zeros_like(u)
    for a in range(-r, r + 1):
        for b in range(-r, r + 1):
            out += taps[a + r, b + r] * np.roll(np.roll(u, a, axis=0), b, axis=1)
    return out


def test_gaussian_center_tap():
    oracle = 1.0 / sum(math.exp(-(x * x) / 8.0) for x in range(-3, 4)) ** 2
    k = P.gaussian_kernel(7, 2.0)
    assert k.taps[3, 3] == pytest.approx(oracle, rel=1e-12)
    assert k.taps[3, 3] == pytest.approx(0.0467, abs=5e-5)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([1, 3, 5, 7, 9, 11]), st.floats(0.3, 5.0))
def test_gaussian_normalised_and_symmetric(size, sigma):
    t = P.gaussian_kernel(size, sigma).taps
    assert abs(t.sum() - 1.0) < 1e-12
    assert np.allclose(t, t[::-1, :]) and np.allclose(t, t.T)


def test_average_kernel():
    k = P.average_kernel(7)
    assert np.all(k.taps == 1 / 49)


def test_kernel_validation():
    with pytest.raises(ValueError):
        P.gaussian_kernel(4, 1.0)
    with pytest.raises(ValueError):
        P.gaussian_kernel(5, 0.0)
    with pytest.raises(ValueError):
        P.BlurKernel(np.full((3, 3), 0.2))
    with pytest.raises(ValueError):
        P.BlurKernel(np.array([[0.0, 0.0, 0.0], [0.0, 1.5, 0.0], [0.0, -0.5, 0.0]]))


@pytest.mark.parametrize(
    "text, size",
    [("gaussian:7:2", 7), ("average:5", 5), ("gaussian:3:0.5", 3)],
)
def test_parse_kernel(text, size):
    assert P.parse_kernel(text).size == size


@pytest.mark.parametrize("text", ["gauss:7", "gaussian:7", "average:x", "average:4", ""])
def test_parse_kernel_rejects(text):
    with pytest.raises(ValueError):
        P.parse_kernel(text)


def test_identity_and_constant_blur():
    ident = np.zeros((3, 3))
    ident[1, 1] = 1.0
    u = np.random.default_rng(0).uniform(0, 255, (10, 12))
    assert np.allclose(P.apply_blur(u, P.BlurKernel(ident)), u, atol=1e-10)
    c = np.full((10, 12), 17.0)
    assert np.allclose(P.apply_blur(c, P.average_kernel(7)), 17.0)


def test_impulse_response_is_the_kernel():
    k = P.gaussian_kernel(5, 1.2)
    u = np.zeros((12, 12))
    u[6, 6] = 1.0
    out = P.apply_blur(u, k)
    assert np.allclose(out[4:9, 4:9], k.taps, atol=1e-14)
    assert abs(out.sum() - 1.0) < 1e-12


@pytest.mark.parametrize("kernel", [P.gaussian_kernel(7, 2.0), P.average_kernel(5), P.gaussian_kernel(3, 0.7)])
def test_spectral_blur_matches_direct_convolution(kernel):
    u = np.random.default_rng(1).uniform(0, 255, (16, 16))
    assert np.max(np.abs(P.apply_blur(u, kernel) - _circular_convolve(u, kernel.taps))) < 1e-10


def test_nonsymmetric_kernel_orientation():
    taps = np.zeros((3, 3))
    taps[0, 1] = 0.75
    taps[1, 1] = 0.25
    k = P.BlurKernel(taps)
    u = np.random.default_rng(2).standard_normal((8, 9))
    assert np.allclose(P.apply_blur(u, k), _circular_convolve(u, taps), atol=1e-12)
    g = np.random.default_rng(3).standard_normal((8, 9))
    assert abs(np.sum(P.apply_blur(u, k) * g) - np.sum(u * P.apply_blur_adjoint(g, k))) < 1e-10


def test_blur_conserves_mean_and_adjoint():
    rng = np.random.default_rng(4)
    u, g = rng.uniform(0, 255, (2, 20, 24))
    k = P.gaussian_kernel(7, 2.0)
    assert abs(P.apply_blur(u, k).mean() - u.mean()) < 1e-10
    lhs = np.sum(P.apply_blur(u, k) * g)
    rhs = np.sum(u * P.apply_blur_adjoint(g, k))
    assert abs(lhs - rhs) < 1e-10 * abs(lhs)


def test_load_mask_threshold():
    vals = np.array([[0, 127], [128, 255]], dtype=np.uint8)
    assert np.array_equal(P.load_mask(vals), [[False, False], [True, True]])


def test_problem_validation():
    with pytest.raises(ValueError):
        P.ProblemSpec("sharpen")
    with pytest.raises(ValueError):
        P.ProblemSpec("deblur")
    with pytest.raises(ValueError):
        P.ProblemSpec.inpaint(np.ones((4, 4), bool), 0.005)
    with pytest.raises(ValueError):
        P.ProblemSpec.inpaint(np.zeros((4, 4), bool), 0.0)
    with pytest.raises(ValueError):
        P.ProblemSpec.inpaint(np.zeros((4, 4), bool), 0.1).check_shape((5, 5))
    with pytest.raises(ValueError):
        P.ProblemSpec.deblur(P.average_kernel(7)).check_shape((5, 5))


def test_z_update_worked_example():
    mask = np.array([[False]])
    z, lam3 = P.update_z_inpaint(np.array([[100.0]]), np.array([[50.0]]), mask, 2.0, 0.005, np.zeros((1, 1)))
    assert z[0, 0] == pytest.approx((25 + 0.5) / 0.505, rel=1e-14)
    assert z[0, 0] == pytest.approx(50.495, abs=5e-4)
    assert lam3[0, 0] == pytest.approx(0.005 * (100 - z[0, 0]))


def test_z_update_missing_pixels_and_large_penalty():
    u = np.array([[10.0, 20.0]])
    f = np.array([[99.0, 99.0]])
    mask = np.array([[True, False]])
    z, _ = P.update_z_inpaint(u, f, mask, 2.0, 0.005, np.zeros((1, 2)))
    assert z[0, 0] == 10.0
    z, _ = P.update_z_inpaint(u, f, mask, 2.0, 1e9, np.zeros((1, 2)))
    assert z[0, 1] == pytest.approx(20.0, abs=1e-6)


def test_z_update_beats_sampled_candidates():
    rng = np.random.default_rng(5)
    n = 200
    u = rng.uniform(0, 255, n)
    f = rng.uniform(0, 255, n)
    lam3 = rng.normal(0, 1, n)
    lam = rng.uniform(0.5, 200, n)
    r3 = rng.uniform(1e-3, 2, n)
    missing = rng.random(n) < 0.3
    for i in range(n):
        z, _ = P.update_z_inpaint(
            u[i : i + 1, None], f[i : i + 1, None], missing[i : i + 1, None], lam[i], r3[i], lam3[i : i + 1, None]
        )
        z = z[0, 0]

        def obj(x):
            data = 0.0 if missing[i] else (x - f[i]) ** 2 / (2 * lam[i])
            # scaled augmented term r3/2 (z - u - lam3/r3)^2 up to a constant
            return data + r3[i] / 2 * (u[i] - x) ** 2 + lam3[i] * (u[i] - x)

        cand = rng.uniform(-100, 400, 100_000)
        assert obj(z) <= obj(cand).min() + 1e-9 * (1 + abs(obj(z)))


def test_fidelity_density_ignores_missing():
    mask = np.array([[True, False]])
    p = P.ProblemSpec.inpaint(mask, 0.005)
    d = p.fidelity_density(np.array([[0.0, 0.0]]), np.array([[100.0, 10.0]]), 2.0)
    assert d[0, 0] == 0.0 and d[0, 1] == pytest.approx(25.0)


@pytest.mark.parametrize("kind", ["denoise", "deblur", "inpaint"])
def test_zero_order_apply_matches_spectrum(kind):
    rng = np.random.default_rng(6)
    shape = (12, 10)
    mask = rng.random(shape) < 0.3
    spec = {
        "denoise": P.ProblemSpec.denoise(),
        "deblur": P.ProblemSpec.deblur(P.gaussian_kernel(5, 1.0)),
        "inpaint": P.ProblemSpec.inpaint(mask, 0.01),
    }[kind]
    u = rng.standard_normal(shape)
    zero = spec.zero_order(3.0, 0.2, shape)
    spectral = np.real(np.fft.ifft2(zero * np.fft.fft2(u)))
    assert np.allclose(spec.zero_order_apply(u, 3.0, 0.2), spectral, atol=1e-12)
