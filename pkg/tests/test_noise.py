from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from eivreg.noise import (KINDS, NoiseModel, UnsupportedNoiseError, char_fn, check_envelope,
                          custom_noise, l2_norm_density, make_noise, noise_char_fn, sample_noise,
                          smoothness_params)

BUILTIN = ("gaussian", "laplace", "cauchy")


class TestCharFn:
    def test_gaussian_at_zero(self):
        assert char_fn(make_noise("gaussian", 1.0), 0.0) == 1.0

    def test_laplace_at_one(self):
        assert char_fn(make_noise("laplace", 1.0), 1.0) == 0.5

    def test_none_is_one(self):
        x = np.linspace(-50, 50, 11)
        np.testing.assert_array_equal(char_fn(make_noise("none"), x), 1.0)

    @pytest.mark.parametrize("kind", BUILTIN)
    def test_hermitian_and_nonzero(self, kind):
        m = make_noise(kind, 1.0)
        x = np.linspace(-30, 30, 1000)
        v = np.asarray(char_fn(m, x), dtype=complex)
        np.testing.assert_array_equal(np.asarray(char_fn(m, -x), dtype=complex), np.conj(v))
        assert np.all(v != 0)

    @pytest.mark.parametrize("kind", BUILTIN)
    def test_matches_empirical_cf(self, kind):
        # independent check of the conventions: E exp(i t eps) from samples
        m = make_noise(kind, 1.0)
        eps = sample_noise(m, 400_000, seed=11)
        for t in (0.3, 1.0, 2.0):
            emp = np.mean(np.cos(t * eps))
            assert abs(emp - char_fn(m, t)) < 5.0 / math.sqrt(eps.size)

    def test_unknown_kind(self):
        with pytest.raises(UnsupportedNoiseError):
            make_noise("student", 1.0)


class TestNoiseCharFn:
    def test_gaussian_scaled(self):
        np.testing.assert_allclose(noise_char_fn(make_noise("gaussian", 2.0), 1.0), math.exp(-2.0), rtol=1e-15)

    @pytest.mark.parametrize("kind", KINDS)
    def test_sigma_zero_is_one(self, kind):
        assert noise_char_fn(make_noise(kind, 0.0), 37.5) == 1.0

    def test_laplace_negative_argument(self):
        np.testing.assert_allclose(noise_char_fn(make_noise("laplace", 1.0), -3.0), 0.1, rtol=1e-15)

    @given(st.sampled_from(BUILTIN), st.floats(0.01, 5.0), st.floats(-100, 100))
    def test_equals_scaled_char_fn(self, kind, sigma, x):
        m = make_noise(kind, sigma)
        assert noise_char_fn(m, x) == char_fn(m, sigma * x)


class TestSmoothnessParams:
    def test_gaussian(self):
        assert smoothness_params("gaussian") == (0.0, 0.5, 2.0, 1.0, 1.0)

    def test_laplace(self):
        assert smoothness_params("laplace") == (2.0, 0.0, 0.0, 1.0, 1.0)

    def test_cauchy(self):
        assert smoothness_params("cauchy") == (0.0, 1.0, 1.0, 1.0, 1.0)

    def test_none(self):
        a, b, r, _, _ = smoothness_params("none")
        assert a == b == r == 0

    def test_sigma_zero_collapses(self):
        assert smoothness_params("laplace", 0.0)[:3] == (0.0, 0.0, 0.0)

    def test_unsupported(self):
        with pytest.raises(UnsupportedNoiseError):
            smoothness_params("uniform")


class TestInvariants:
    def test_none_requires_zero_sigma(self):
        with pytest.raises(ValueError):
            make_noise("none", 0.5)

    def test_beta_rho_tied(self):
        with pytest.raises(ValueError):
            NoiseModel("gaussian", 1.0, 0.0, 0.5, 0.0)

    def test_ordinary_smooth_alpha(self):
        with pytest.raises(ValueError):
            NoiseModel("laplace", 1.0, 0.5, 0.0, 0.0)

    def test_kappa_order(self):
        with pytest.raises(ValueError):
            NoiseModel("laplace", 1.0, 2.0, 0.0, 0.0, kappa0=2.0, kappa0_prime=1.0)

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            make_noise("gaussian", -1.0)

    @pytest.mark.parametrize("kind", BUILTIN)
    def test_envelope_log_grid(self, kind):
        m = make_noise(kind, 1.0)
        pos = np.logspace(-3, 3, 3000)
        assert check_envelope(m, np.concatenate([-pos, pos]))

    def test_envelope_violation_detected(self):
        with pytest.raises(ValueError):
            custom_noise(lambda x: 1.0 / (1.0 + x * x), 1.0, alpha=1.0, beta=0.0, rho=0.0)

    def test_custom_noise_roundtrip(self):
        m = custom_noise(lambda x: 1.0 / (1.0 + x * x), 0.7, alpha=2.0, beta=0.0, rho=0.0)
        np.testing.assert_allclose(noise_char_fn(m, 2.0), 1.0 / (1.0 + 1.96))
        np.testing.assert_allclose(l2_norm_density(m), 0.5, rtol=1e-8)


class TestSampleNoise:
    def test_zero_sigma(self):
        np.testing.assert_array_equal(sample_noise(make_noise("none"), 5, seed=1), np.zeros(5))

    def test_gaussian_variance(self):
        x = sample_noise(make_noise("gaussian", 1.0), 100_000, seed=3)
        assert abs(x.var() - 1.0) < 0.02

    def test_laplace_variance(self):
        x = sample_noise(make_noise("laplace", 2.0), 100_000, seed=4)
        assert abs(x.var() - 8.0) < 0.3

    @pytest.mark.parametrize("kind", BUILTIN)
    def test_reproducible(self, kind):
        m = make_noise(kind, 0.8)
        np.testing.assert_array_equal(sample_noise(m, 50, seed=9), sample_noise(m, 50, seed=9))

    def test_needs_positive_n(self):
        with pytest.raises(ValueError):
            sample_noise(make_noise("gaussian", 1.0), 0)


class TestL2Norm:
    def test_laplace(self):
        assert l2_norm_density(make_noise("laplace", 1.0)) == 0.5

    def test_gaussian(self):
        np.testing.assert_allclose(l2_norm_density(make_noise("gaussian", 1.0)), 0.5311259660135985, rtol=1e-12)

    @pytest.mark.parametrize("kind,dens", [
        ("gaussian", lambda x: np.exp(-x * x / 2) / math.sqrt(2 * math.pi)),
        ("laplace", lambda x: 0.5 * np.exp(-abs(x))),
        ("cauchy", lambda x: 1.0 / (math.pi * (1 + x * x))),
    ])
    def test_against_quadrature(self, kind, dens):
        val, _ = integrate.quad(lambda x: dens(x) ** 2, -np.inf, np.inf, epsrel=1e-12, epsabs=0)
        np.testing.assert_allclose(l2_norm_density(make_noise(kind, 1.0)), math.sqrt(val), rtol=1e-8)

    def test_none_has_no_density(self):
        with pytest.raises(ValueError):
            l2_norm_density(make_noise("none"))
