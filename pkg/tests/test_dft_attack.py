import numpy as np
import pytest

from coocattack import oracles
from coocattack.dft_attack import (
    FILTER_DFT_CENTRED,
    STANDARD_LAMBDAS,
    DftAttackConfig,
    circular_filter,
    dft_attack,
    dft_solve,
    kirchner_response,
    normal_residual,
    objective,
    padded_kernel,
    residual_kernel,
)


class TestResponse:
    def test_dc_is_zero(self):
        for h, w in ((3, 3), (8, 12), (64, 64)):
            assert kirchner_response(h, w).response[0, 0] == 0.0

    def test_real_nonnegative(self):
        r = kirchner_response(16, 10).response
        assert np.isrealobj(r) and r.min() >= 0.0

    def test_three_by_three_grid(self):
        c = kirchner_response(3, 3).centred()
        # proportional to the squared frequency matrix: (3/4)^2 at the corners, 0 on the DC axes
        ratio = c[0, 0] / FILTER_DFT_CENTRED[0, 0] ** 2
        np.testing.assert_allclose(c, ratio * FILTER_DFT_CENTRED**2, atol=1e-12)
        assert FILTER_DFT_CENTRED[0, 0] ** 2 == 9 / 16

    def test_spatial_kernel(self):
        np.testing.assert_allclose(residual_kernel().sum(), 0.0, atol=1e-15)
        np.testing.assert_allclose(residual_kernel()[0, 0], 1.0)
        with pytest.raises(ValueError):
            padded_kernel(2, 5)

    def test_response_is_filter_spectrum(self, rng):
        x = rng.normal(size=(9, 7))
        lhs = np.abs(np.fft.fft2(circular_filter(x)[..., 0])) ** 2
        rhs = kirchner_response(9, 7).response * np.abs(np.fft.fft2(x)) ** 2
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)


class TestSolve:
    @pytest.mark.parametrize("lam", STANDARD_LAMBDAS)
    def test_normal_equations(self, lam, rng):
        for _ in range(5):
            src = rng.integers(0, 256, (16, 12, 3)).astype(float)
            tgt = rng.integers(0, 256, (16, 12, 3)).astype(float)
            x = dft_solve(src, tgt, lam)
            scale = np.abs(normal_residual(src, src, tgt, lam)).max()
            assert np.abs(normal_residual(x, src, tgt, lam)).max() / scale < 1e-8

    def test_gradient_vanishes_numerically(self, rng):
        src = rng.integers(0, 256, (16, 16)).astype(float)
        tgt = rng.integers(0, 256, (16, 16)).astype(float)
        lam = 0.01
        x = dft_solve(src, tgt, lam)[..., 0]
        grad = oracles.central_difference(lambda z: objective(z, src, tgt, lam), x, h=1e-2)
        ref = oracles.central_difference(lambda z: objective(z, src, tgt, lam), src, h=1e-2)
        assert np.abs(grad).max() / np.abs(ref).max() < 1e-6

    def test_huge_lambda_returns_source(self, rng):
        src = rng.integers(0, 256, (16, 16, 3))
        tgt = rng.integers(0, 256, (16, 16, 3))
        assert np.abs(dft_solve(src, tgt, 1e6) - src).max() < 0.5
        np.testing.assert_array_equal(dft_attack(src, tgt, DftAttackConfig(lam=1e6)), src)

    @pytest.mark.parametrize("lam", [0.003, 0.5, 10.0])
    def test_fixed_point(self, lam, rng):
        img = rng.integers(0, 256, (12, 12, 3))
        np.testing.assert_allclose(dft_solve(img, img, lam), img, atol=1e-9)

    def test_objective_below_endpoints(self, rng):
        src = rng.integers(0, 256, (16, 16, 3)).astype(float)
        tgt = rng.integers(0, 256, (16, 16, 3)).astype(float)
        for lam in STANDARD_LAMBDAS:
            x = dft_solve(src, tgt, lam)
            f = objective(x, src, tgt, lam)
            assert f <= objective(src, src, tgt, lam)
            assert f <= objective(tgt, src, tgt, lam)

    def test_imaginary_residue_negligible(self, rng):
        src = rng.integers(0, 256, (10, 14, 3))
        tgt = rng.integers(0, 256, (10, 14, 3))
        z = dft_solve(src, tgt, 0.01, return_complex=True)
        assert np.abs(z.imag).max() < 1e-9

    def test_reflect_boundary(self, rng):
        src = rng.integers(0, 256, (12, 10, 3))
        tgt = rng.integers(0, 256, (12, 10, 3))
        x = dft_solve(src, tgt, 0.01, boundary="reflect")
        assert x.shape == src.shape
        np.testing.assert_allclose(dft_solve(src, src, 0.01, boundary="reflect"), src, atol=1e-9)


class TestDftAttack:
    def test_output_is_clamped_uint8(self, rng):
        src = rng.integers(0, 256, (16, 16, 3))
        tgt = rng.integers(0, 256, (16, 16, 3))
        out = dft_attack(src, tgt)
        assert out.dtype == np.uint8 and out.shape == src.shape
        ref = np.rint(np.clip(dft_solve(src, tgt, 0.01), 0, 255))
        np.testing.assert_array_equal(out, ref)

    def test_grayscale(self, rng):
        src = rng.integers(0, 256, (8, 8))
        assert dft_attack(src, src).shape == (8, 8)

    @pytest.mark.parametrize("bad", [{"lam": 0.0}, {"lam": -1.0}, {"boundary": "zero"}])
    def test_config_validation(self, bad):
        with pytest.raises(ValueError):
            DftAttackConfig(**bad)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            dft_solve(np.zeros((8, 8)), np.zeros((8, 9)), 0.01)
