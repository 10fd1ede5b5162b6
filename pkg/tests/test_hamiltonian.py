import numpy as np
import pytest

import psfs
from psfs import (
    HamiltonianSample,
    Lambertian,
    OrenNayar,
    Phong,
    ValidationError,
    gradient_bound,
    hamiltonian,
    hamiltonian_grad_p,
    q_factor,
    w_grad_p,
    w_grad_x,
    w_term,
)
from psfs.probes import fd_oracle

from conftest import make_models


def test_q_values():
    assert q_factor(np.array([0.0, 0.0]), 2.0) == 1.0
    assert q_factor(np.array([3.0, 4.0]), 5.0) == pytest.approx(5.0 / np.sqrt(50.0), rel=1e-14)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(1000, 2))
    q = q_factor(x, 1.7)
    assert np.all(q > 0) and np.all(q <= 1.0)


def test_w_values():
    assert w_term(np.array([0.0, 0.0]), np.array([1.0, 0.0]), 1.0) == 1.0
    assert w_term(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 1.0) == pytest.approx(2.0, rel=1e-14)
    x = np.random.default_rng(1).normal(size=(100, 2))
    assert np.all(w_term(x, np.zeros((100, 2)), 2.0) == 0.0)


def test_w_gradients_trivial_zeros():
    rng = np.random.default_rng(2)
    p = rng.normal(size=(50, 2))
    x0 = np.zeros((50, 2))
    assert np.allclose(w_grad_x(x0, p, 1.5), 0.0)
    x = rng.normal(size=(50, 2))
    assert np.allclose(w_grad_p(x, np.zeros((50, 2)), 1.5), 0.0)


def test_w_gradient_example():
    g = w_grad_p(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 1.0)
    assert np.allclose(g, [0.0, 4.0])


def test_w_gradients_match_finite_differences():
    rng = np.random.default_rng(3)
    f = 1.3
    x = rng.uniform(-0.5, 0.5, size=(1000, 2))
    p = rng.uniform(-10.0, 10.0, size=(1000, 2))
    gx = w_grad_x(x, p, f)
    gx_fd = fd_oracle(lambda xx: w_term(xx, p, f), x, 1e-5)
    assert np.all(np.abs(gx - gx_fd) <= 1e-6 * np.abs(gx_fd) + 1e-9)
    gp = w_grad_p(x, p, f)
    gp_fd = fd_oracle(lambda pp: w_term(x, pp, f), p, 1e-5)
    assert np.all(np.abs(gp - gp_fd) <= 1e-6 * np.abs(gp_fd) + 1e-9)


def test_w_gradient_growth_bounds():
    rig = psfs.CameraRig.from_domain(1.2, (-0.5, 0.5, -0.4, 0.6), 9, 9)
    rng = np.random.default_rng(4)
    x = np.stack([rng.uniform(rig.x_min, rig.x_max, 5000),
                  rng.uniform(rig.y_min, rig.y_max, 5000)], axis=-1)
    p = rng.uniform(-50.0, 50.0, size=(5000, 2))
    pnorm = np.linalg.norm(p, axis=-1)
    assert np.all(np.linalg.norm(w_grad_x(x, p, rig.f), axis=-1)
                  <= rig.dxw_constant * pnorm**2 + 1e-9)
    assert np.all(np.linalg.norm(w_grad_p(x, p, rig.f), axis=-1)
                  <= rig.dpw_constant * pnorm + 1e-9)


def test_hamiltonian_zero_at_calibrated_point():
    f = 2.0
    h = hamiltonian(Lambertian(), np.array([0.0, 0.0]), 0.0, np.array([0.0, 0.0]), 1.0 / f**2, f)
    assert h == pytest.approx(0.0, abs=1e-15)


def test_hamiltonian_strictly_increasing_in_r():
    rng = np.random.default_rng(5)
    for model in make_models().values():
        x = rng.uniform(-0.5, 0.5, size=(2000, 2))
        p = rng.uniform(-5.0, 5.0, size=(2000, 2))
        inten = rng.uniform(0.3, 2.0, size=2000)
        r_bound = 2.0
        uv = rng.uniform(-r_bound, r_bound, size=(2000, 2))
        lo, hi = uv.min(axis=1), uv.max(axis=1)
        h_hi = hamiltonian(model, x, hi, p, inten, 1.0, ambient=0.0)
        h_lo = hamiltonian(model, x, lo, p, inten, 1.0, ambient=0.0)
        gamma = 2.0 * np.exp(-2.0 * r_bound)
        assert np.all(h_hi - h_lo >= gamma * (hi - lo) - 1e-12), model.kind


def test_unit_step_monotonicity_gap():
    # H(r=1) - H(r=0) >= 2 e^{-2} for any model at any fixed (x, p, I)
    rng = np.random.default_rng(15)
    for model in make_models().values():
        x = rng.uniform(-0.5, 0.5, size=(200, 2))
        p = rng.uniform(-5.0, 5.0, size=(200, 2))
        inten = rng.uniform(0.3, 2.0, size=200)
        gap = (hamiltonian(model, x, 1.0, p, inten, 1.0, ambient=0.0)
               - hamiltonian(model, x, 0.0, p, inten, 1.0, ambient=0.0))
        assert np.all(gap >= 2.0 * np.exp(-2.0) - 1e-12), model.kind


def test_glossy_without_specular_share_is_scaled_diffuse():
    # H for the lobe-free glossy model is the diffuse H with intensity / k_diffuse
    model = Phong(k_ambient=0.3, k_diffuse=0.7, k_specular=0.0, alpha=1, ambient=0.0)
    rng = np.random.default_rng(14)
    x = rng.uniform(-0.5, 0.5, size=(300, 2))
    p = rng.uniform(-6.0, 6.0, size=(300, 2))
    r = rng.uniform(-1.0, 1.0, size=300)
    inten = rng.uniform(0.4, 1.3, size=300)
    h = hamiltonian(model, x, r, p, inten, 1.2)
    expected = -np.exp(-2 * r) + (inten / 0.7) * 1.2**2 * np.sqrt(w_term(x, p, 1.2) + 1.0)
    assert np.allclose(h, expected, rtol=1e-13)


def test_rough_diffuse_hamiltonian_is_bounded_above():
    model = OrenNayar(sigma=0.3)
    _, b = model.coefficients
    rng = np.random.default_rng(6)
    x = rng.uniform(-0.5, 0.5, size=(500, 2))
    p = rng.normal(size=(500, 2)) * 1e6
    r = rng.uniform(-2, 2, size=500)
    inten = rng.uniform(0.1, 1.0, size=500)
    h = hamiltonian(model, x, r, p, inten, 1.0)
    assert np.all(h <= -np.exp(-2 * r) + inten / b + 1e-9)


def test_effective_intensity_must_be_positive():
    model = Phong(k_ambient=0.4, k_diffuse=0.5, k_specular=0.1, alpha=1, ambient=1.0)
    with pytest.raises(ValidationError):
        hamiltonian(model, np.array([0.0, 0.0]), 0.0, np.array([0.0, 0.0]), 0.3, 1.0)
    # intensity above the ambient share is fine
    hamiltonian(model, np.array([0.0, 0.0]), 0.0, np.array([0.0, 0.0]), 0.5, 1.0)
    with pytest.raises(ValidationError):
        hamiltonian(Lambertian(), np.array([0.0, 0.0]), 0.0, np.array([0.0, 0.0]), 0.0, 1.0)


def test_gradient_in_p_example_and_zero():
    g0 = hamiltonian_grad_p(Lambertian(), np.array([0.3, -0.2]), 0.1, np.array([0.0, 0.0]), 1.0, 1.0)
    assert np.allclose(g0, 0.0)
    g = hamiltonian_grad_p(Lambertian(), np.array([0.0, 0.0]), 0.0, np.array([1.0, 0.0]), 1.0, 1.0)
    assert np.allclose(g, [1.0 / np.sqrt(2.0), 0.0], rtol=1e-14)


def test_gradient_in_p_matches_finite_differences():
    rng = np.random.default_rng(8)
    f = 1.1
    for model in make_models().values():
        x = rng.uniform(-0.5, 0.5, size=(1000, 2))
        p = rng.uniform(-8.0, 8.0, size=(1000, 2))
        inten = rng.uniform(0.5, 1.5, size=1000)
        if model.kind == "PH":  # keep clear of the C^1 branch point of the lobe
            keep = np.abs(w_term(x, p, f) - 1.0) > 5e-3
            x, p, inten = x[keep], p[keep], inten[keep]
        g = hamiltonian_grad_p(model, x, 0.2, p, inten, f, ambient=0.0)
        g_fd = fd_oracle(lambda pp: hamiltonian(model, x, 0.2, pp, inten, f, ambient=0.0), p, 1e-5)
        assert np.all(np.abs(g - g_fd) <= 1e-6 * np.abs(g_fd) + 1e-9), model.kind


def test_gradient_in_p_uniform_bound():
    rig = psfs.CameraRig.from_domain(1.0, (-0.5, 0.5, -0.5, 0.5), 9, 9)
    rng = np.random.default_rng(9)
    for model in make_models().values():
        x = rng.uniform(-0.5, 0.5, size=(3000, 2))
        # include very large gradients: the bound is uniform in p
        p = rng.normal(size=(3000, 2)) * 10.0 ** rng.uniform(-2, 5, size=(3000, 1))
        inten = rng.uniform(0.1, 1.8, size=3000)
        g = hamiltonian_grad_p(model, x, 0.0, p, inten, rig.f, ambient=0.0)
        cap = gradient_bound(model, rig, 1.8)
        assert np.all(np.linalg.norm(g, axis=-1) <= cap * (1 + 1e-12)), model.kind


def test_sample_validation():
    rig = psfs.CameraRig.from_domain(1.0, (-0.5, 0.5, -0.5, 0.5), 9, 9)
    HamiltonianSample((0.1, 0.2), 0.0, (1.0, 0.0)).validate(rig)
    with pytest.raises(ValidationError):
        HamiltonianSample((0.7, 0.0), 0.0, (0.0, 0.0)).validate(rig)
