import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from slowdyn import spectral as sp
from slowdyn.errors import ConfigError, PreconditionError


@pytest.fixture
def g8():
    return sp.GridSpec(8, 8, 1.0, kz_max=0)


class TestGridSpec:
    def test_defaults(self):
        g = sp.GridSpec(64, 32, 2.0, kz_max=4)
        assert g.nz == 17
        assert g.shape == (64, 32)
        assert g.m.shape == (64, 1) and g.n.shape == (1, 32)
        assert g.m.min() == -32 and g.m.max() == 31

    @pytest.mark.parametrize("kw", [
        dict(nx=7, ny=8, L=1.0),
        dict(nx=6, ny=6, L=1.0),
        dict(nx=8, ny=8, L=0.0),
        dict(nx=8, ny=8, L=1.0, kz_max=-1),
        dict(nx=8, ny=8, L=1.0, kz_max=4, nz=8),
    ])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ConfigError):
            sp.GridSpec(**kw)

    def test_dealias_band(self):
        g = sp.GridSpec(64, 64, 1.0)
        kept = np.abs(g.m[g.dealias.any(axis=1)[:, None].ravel()])
        assert kept.max() == 21
        assert not g.dealias[g.nyquist].any()


class TestTransforms:
    def test_constant(self, g8):
        c = sp.to_spectral(np.full(g8.shape, 3.5), g8)
        expected = np.zeros(g8.shape, complex)
        expected[0, 0] = 3.5
        np.testing.assert_allclose(c, expected, atol=1e-15)

    def test_single_cosine(self, g8):
        X, _ = g8.mesh
        c = sp.to_spectral(np.cos(2 * np.pi * X / g8.L), g8)
        expected = np.zeros(g8.shape, complex)
        expected[1, 0] = expected[-1, 0] = 0.5
        np.testing.assert_allclose(c, expected, atol=1e-15)

    def test_round_trip_random(self, g8, rng):
        f = rng.normal(size=g8.shape)
        back = sp.to_real(sp.to_spectral(f, g8), g8)
        assert np.abs(back - f).max() / np.abs(f).max() < 1e-12

    def test_matches_direct_dft(self, rng):
        g = sp.GridSpec(8, 10, 1.7)
        f = rng.normal(size=g.shape)
        np.testing.assert_allclose(sp.to_spectral(f, g), oracles.dft_coeffs(f, g.L, g.shape),
                                   atol=1e-14)

    def test_dimension_mismatch(self, g8):
        with pytest.raises(ConfigError):
            sp.to_spectral(np.zeros((8, 10)), g8)

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, (8, 8), elements=st.floats(-1e3, 1e3)))
    def test_parseval(self, f):
        g = sp.GridSpec(8, 8, 1.0)
        c = sp.to_spectral(f, g)
        lhs = np.mean(f ** 2)
        rhs = np.sum(np.abs(c) ** 2)
        assert abs(lhs - rhs) <= 1e-12 * max(lhs, 1e-300) + 1e-300
        back = sp.to_real(c, g)
        assert np.abs(back - f).max() <= 1e-12 * max(np.abs(f).max(), 1e-300)


class TestGradient:
    def test_sine(self, g8):
        X, _ = g8.mesh
        fx, fy = sp.gradient_h(sp.to_spectral(np.sin(2 * np.pi * X), g8), g8)
        np.testing.assert_allclose(sp.to_real(fx, g8), 2 * np.pi * np.cos(2 * np.pi * X),
                                   atol=1e-13)
        np.testing.assert_allclose(sp.to_real(fy, g8), 0.0, atol=1e-13)

    def test_constant(self, g8):
        fx, fy = sp.gradient_h(sp.to_spectral(np.full(g8.shape, 2.0), g8), g8)
        assert np.abs(fx).max() == 0 and np.abs(fy).max() == 0

    def test_nyquist_zeroed(self, g8):
        X, _ = g8.mesh
        saw = np.cos(np.pi * 8 * X)  # pure Nyquist mode in x
        fx, fy = sp.gradient_h(sp.to_spectral(saw, g8), g8)
        assert np.abs(fx).max() == 0 and np.abs(fy).max() == 0

    def test_against_refined_finite_differences(self, rng):
        g = sp.GridSpec(8, 8, 1.0)
        c = oracles.random_bandlimited(rng, 8, 8, band=2)
        fine = 8 * 8
        xs = np.arange(fine) * g.L / fine
        f_fine = oracles.eval_modes(c, g.L, xs, xs).real
        h = g.L / fine
        dfx = oracles.centered_fd8(f_fine, h, axis=0)[::8, ::8]
        dfy = oracles.centered_fd8(f_fine, h, axis=1)[::8, ::8]
        fx, fy = sp.gradient_h(c, g)
        assert np.abs(sp.to_real(fx, g) - dfx).max() < 1e-6
        assert np.abs(sp.to_real(fy, g) - dfy).max() < 1e-6

    def test_matches_dense_matrix(self, rng):
        # no Nyquist content: the spectral operator zeroes both Nyquist lines
        g = sp.GridSpec(8, 10, 2.0)
        f = sp.to_real(oracles.random_bandlimited(rng, 8, 10, band=3, mean_zero=False), g)
        Dx, Dy, _ = oracles.ops2d(8, 10, 2.0)
        fx, fy = sp.gradient_h(sp.to_spectral(f, g), g)
        np.testing.assert_allclose(sp.to_real(fx, g).ravel(), Dx @ f.ravel(), atol=1e-12)
        np.testing.assert_allclose(sp.to_real(fy, g).ravel(), Dy @ f.ravel(), atol=1e-12)


class TestInvertLaplacian:
    def test_eigenfunction(self):
        g = sp.GridSpec(8, 8, 3.0)
        X, _ = g.mesh
        f = np.cos(2 * np.pi * X / g.L)
        out = sp.to_real(sp.invert_laplacian_h(sp.to_spectral(f, g), g), g)
        np.testing.assert_allclose(out, -(g.L / (2 * np.pi)) ** 2 * f, atol=1e-14)

    def test_zero(self, g8):
        out = sp.invert_laplacian_h(np.zeros(g8.shape, complex), g8)
        assert np.abs(out).max() == 0

    def test_rejects_mean(self, g8):
        c = np.zeros(g8.shape, complex)
        c[0, 0] = 1e-6
        with pytest.raises(PreconditionError):
            sp.invert_laplacian_h(c, g8)

    def test_round_trip_and_mean(self, g8, rng):
        c = oracles.random_bandlimited(rng, 8, 8, band=4)
        out = sp.invert_laplacian_h(c, g8)
        assert out[0, 0] == 0
        np.testing.assert_allclose(sp.laplacian_h(out, g8), c, atol=1e-12)

    def test_dense_poisson(self, g8, rng):
        f = rng.normal(size=g8.shape)
        f -= f.mean()
        ref = oracles.dense_poisson_2d(f, g8.L)
        out = sp.to_real(sp.invert_laplacian_h(sp.to_spectral(f, g8), g8), g8)
        assert np.abs(out - ref).max() < 1e-12


class TestBiotSavart:
    def test_zero(self, g8):
        u, v = sp.biot_savart(np.zeros(g8.shape, complex), g8)
        assert np.abs(u).max() == 0 and np.abs(v).max() == 0

    def test_single_mode(self):
        g = sp.GridSpec(16, 8, 2.5)
        X, Y = g.mesh
        om = (2 * np.pi / g.L) * np.cos(2 * np.pi * X / g.L)
        u, v = sp.biot_savart(sp.to_spectral(om, g), g)
        np.testing.assert_allclose(sp.to_real(u, g), 0.0, atol=1e-14)
        np.testing.assert_allclose(sp.to_real(v, g), np.sin(2 * np.pi * X / g.L), atol=1e-14)

    def test_rejects_mean(self, g8):
        c = np.zeros(g8.shape, complex)
        c[0, 0] = 0.3
        with pytest.raises(PreconditionError):
            sp.biot_savart(c, g8)

    def test_dense_oracle(self, g8, rng):
        c = oracles.random_bandlimited(rng, 8, 8, band=3)
        om = sp.to_real(c, g8)
        u_ref, v_ref = oracles.dense_biot_savart(om, g8.L)
        u, v = sp.biot_savart(c, g8)
        assert np.abs(sp.to_real(u, g8) - u_ref).max() < 1e-12
        assert np.abs(sp.to_real(v, g8) - v_ref).max() < 1e-12

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.floats(0.1, 10.0))
    def test_identities(self, seed, L):
        g = sp.GridSpec(16, 16, L)
        c = oracles.random_bandlimited(np.random.default_rng(seed), 16, 16, band=7)
        u, v = sp.biot_savart(c, g)
        scale = np.abs(c).max()
        assert np.abs(sp.divergence_h(u, v, g)).max() <= 1e-12 * scale
        assert np.abs(sp.curl_h(u, v, g) - c).max() <= 1e-12 * scale
        assert abs(u[0, 0]) == 0 and abs(v[0, 0]) == 0
        # |grad u|_L2 == |omega|_L2 (periodic p = 2 identity)
        grads = [*sp.gradient_h(u, g), *sp.gradient_h(v, g)]
        lhs = sum(np.sum(np.abs(d) ** 2) for d in grads)
        rhs = np.sum(np.abs(c) ** 2)
        assert abs(lhs - rhs) <= 1e-12 * rhs


class TestDealiasedProduct:
    def test_cosine_square(self, g8):
        X, _ = g8.mesh
        f = sp.to_spectral(np.cos(2 * np.pi * X), g8)
        out = sp.to_real(sp.dealiased_product(f, f, g8), g8)
        np.testing.assert_allclose(out, 0.5 + 0.5 * np.cos(4 * np.pi * X), atol=1e-14)

    def test_zero_factor(self, g8, rng):
        f = oracles.random_bandlimited(rng, 8, 8, band=4, mean_zero=False)
        assert np.abs(sp.dealiased_product(f, np.zeros_like(f), g8)).max() == 0

    @pytest.mark.parametrize("shape", [(8, 8), (12, 10)])
    def test_direct_convolution(self, rng, shape):
        g = sp.GridSpec(*shape, 1.0)
        band = min(shape) // 3
        f = oracles.random_bandlimited(rng, *shape, band=band, real=False, mean_zero=False)
        h = oracles.random_bandlimited(rng, *shape, band=band, real=False, mean_zero=False)
        ref = oracles.direct_convolution(f, h, g.dealias)
        np.testing.assert_allclose(sp.dealiased_product(f, h, g), ref, atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.floats(-3, 3), st.floats(-3, 3))
    def test_bilinear_symmetric(self, seed, a, b):
        g = sp.GridSpec(12, 12, 1.0)
        r = np.random.default_rng(seed)
        f, h, k = (oracles.random_bandlimited(r, 12, 12, band=5, real=False,
                                              mean_zero=False) for _ in range(3))
        fh = sp.dealiased_product(f, h, g)
        np.testing.assert_allclose(fh, sp.dealiased_product(h, f, g), atol=1e-13)
        lhs = sp.dealiased_product(a * f + b * k, h, g)
        rhs = a * fh + b * sp.dealiased_product(k, h, g)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestVertical:
    def test_eigenmode_gradient(self):
        g = sp.GridSpec(8, 8, 2.0, kz_max=1)
        stack = np.zeros((2, 8, 8), complex)
        stack[0, 1, 0] = 1.0
        stack[0, -1, 0] = 1.0
        val = sp.invert_laplacian_3d_gradient(stack, g)
        assert val == pytest.approx(2 * g.L ** 3 * (g.L / (2 * np.pi)) ** 2, rel=1e-14)

    def test_zero(self):
        g = sp.GridSpec(8, 8, 1.0, kz_max=2)
        assert sp.invert_laplacian_3d_gradient(np.zeros((3, 8, 8), complex), g) == 0.0

    def test_rejects_mean(self):
        g = sp.GridSpec(8, 8, 1.0, kz_max=1)
        stack = np.zeros((2, 8, 8), complex)
        stack[0, 0, 0] = 1.0
        with pytest.raises(PreconditionError):
            sp.invert_laplacian_3d_gradient(stack, g)

    def test_nonzero_mean_of_upper_mode_allowed(self):
        # only the total (k=0) mean matters; rho_1's horizontal mean is a z-dependent mode
        g = sp.GridSpec(8, 8, 1.0, kz_max=1)
        stack = np.zeros((2, 8, 8), complex)
        stack[1, 0, 0] = 1.0
        val = sp.invert_laplacian_3d_gradient(stack, g)
        assert val == pytest.approx(2 * g.L ** 3 * (g.L / (2 * np.pi)) ** 2)

    def test_dense_3d_oracle(self, rng):
        K = 3
        g = sp.GridSpec(8, 8, 1.3, kz_max=K, nz=9)
        stack = np.stack([oracles.random_bandlimited(rng, 8, 8, band=3, real=(k == 0),
                                                     mean_zero=(k == 0))
                          for k in range(K + 1)])
        rho = oracles.build_rho_3d(stack, g.L, 9)
        ref = oracles.dense_grad_inv_lap_3d(rho, g.L)
        val = sp.invert_laplacian_3d_gradient(stack, g)
        assert abs(val - ref) <= 1e-8 * ref

    def test_z_average_is_layer_zero(self, rng):
        stack = rng.normal(size=(3, 8, 8)) + 1j * rng.normal(size=(3, 8, 8))
        assert sp.z_average(stack) is stack[0] or np.array_equal(sp.z_average(stack), stack[0])

    def test_reconstruct_k0_only(self, rng):
        g = sp.GridSpec(8, 8, 1.0, kz_max=2)
        stack = np.zeros((3, 8, 8), complex)
        stack[0] = oracles.random_bandlimited(rng, 8, 8, band=3, mean_zero=False)
        rho0 = sp.to_real(stack[0], g)
        for z in (0.0, 0.3, 0.99):
            np.testing.assert_allclose(sp.reconstruct_vertical(stack, z, g), rho0, atol=1e-15)

    def test_reconstruct_constant_mode_one(self):
        g = sp.GridSpec(8, 8, 1.0, kz_max=2)
        stack = np.zeros((3, 8, 8), complex)
        stack[1, 0, 0] = 1.0
        for z in (0.0, 0.1, 0.55):
            np.testing.assert_allclose(sp.reconstruct_vertical(stack, z, g),
                                       2 * np.cos(2 * np.pi * z / g.L), atol=1e-15)

    def test_reconstruct_domain(self):
        g = sp.GridSpec(8, 8, 1.0, kz_max=1)
        stack = np.zeros((2, 8, 8), complex)
        for z in (-0.1, 1.0, 2.0):
            with pytest.raises(PreconditionError):
                sp.reconstruct_vertical(stack, z, g)

    def test_quadrature_recovers_average(self, rng):
        g = sp.GridSpec(8, 8, 1.0, kz_max=3, nz=16)
        stack = np.stack([oracles.random_bandlimited(rng, 8, 8, band=3, real=(k == 0),
                                                     mean_zero=False) for k in range(4)])
        levels = [sp.reconstruct_vertical(stack, z, g) for z in g.z]
        np.testing.assert_allclose(np.mean(levels, axis=0), sp.to_real(stack[0], g),
                                   atol=1e-12)
        np.testing.assert_allclose(sp.reconstruct_levels(stack, g), np.array(levels),
                                   atol=1e-13)

    def test_reconstruct_matches_direct_sum(self, rng):
        g = sp.GridSpec(8, 8, 1.0, kz_max=2, nz=7)
        stack = np.stack([oracles.random_bandlimited(rng, 8, 8, band=3, real=(k == 0),
                                                     mean_zero=False) for k in range(3)])
        ref = oracles.build_rho_3d(stack, g.L, 7)
        np.testing.assert_allclose(np.moveaxis(sp.reconstruct_levels(stack, g), 0, -1), ref,
                                   atol=1e-12)


def test_hermitian_defect(rng):
    c = oracles.random_bandlimited(rng, 8, 8, band=4)
    assert sp.hermitian_defect(c) < 1e-15
    c[1, 2] += 0.1
    assert sp.hermitian_defect(c) > 1e-3
