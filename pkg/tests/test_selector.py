from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eivreg.basis import CoeffVector, model_index
from eivreg.deconv import Dataset
from eivreg.noise import make_noise
from eivreg.penalties import model_bound, model_set
from eivreg.selector import (EstimatorConfig, fit_component, fit_density, fit_ell, fit_regression,
                             regression_estimate, select_model, trim)

NONE = make_noise("none")
LAPLACE = make_noise("laplace", 0.5)


def _models(k):
    return [model_index(m) for m in range(1, k + 1)]


def _noise_free_fit(z, w, k_n, kappa, bracket, dim_step=1.0):
    """Independent sigma = 0 projection estimator: coefficients, contrasts, argmin."""
    n = z.size
    top = max(1, int(math.floor(n / math.pi / dim_step + 1e-12)))
    j = np.arange(-k_n, k_n + 1)
    best, best_total, coeffs = None, np.inf, {}
    for m in range(1, top + 1):
        d = m * dim_step
        a = (w[:, None] * math.sqrt(d) * np.sinc(d * z[:, None] - j[None, :])).mean(axis=0)
        coeffs[m] = a
        total = -np.sum(a * a) + kappa * bracket * d / n
        if total < best_total:
            best, best_total = m, total
    return best, coeffs


def _noise_free_curve(a, d, x):
    k = (a.size - 1) // 2
    j = np.arange(-k, k + 1)
    return (math.sqrt(d) * np.sinc(d * x[:, None] - j[None, :])) @ a


class TestSelectModel:
    def test_example(self):
        mi, diag = select_model([-1.0, -1.5], [0.2, 0.9], _models(2))
        assert mi.m == 1
        np.testing.assert_allclose(diag.total, [-0.8, -0.6])

    def test_zero_penalty_decreasing_contrast(self):
        mi, _ = select_model([-1.0, -2.0, -3.0, -4.0], np.zeros(4), _models(4))
        assert mi.m == 4

    def test_ties_go_to_smallest(self):
        mi, _ = select_model([-1.0, -2.0, -3.0], [1.0, 2.0, 3.0], _models(3))
        assert mi.m == 1

    def test_errors(self):
        with pytest.raises(ValueError):
            select_model([], [], [])
        with pytest.raises(ValueError):
            select_model([1.0, 2.0], [0.0], _models(2))
        with pytest.raises(ValueError):
            select_model([np.nan], [0.0], _models(1))

    @given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(0, 1e3)), min_size=1, max_size=50),
           st.floats(-1e3, 1e3))
    def test_argmin_and_shift_invariance(self, rows, shift):
        c = np.array([r[0] for r in rows])
        p = np.array([r[1] for r in rows])
        models = _models(len(rows))
        # exhaustive scan with strict improvement, so the first minimum wins
        best, best_val = 0, c[0] + p[0]
        for i in range(1, len(rows)):
            if c[i] + p[i] < best_val:
                best, best_val = i, c[i] + p[i]
        mi, diag = select_model(c, p, models)
        assert mi.m == best + 1 and diag.selected == best
        # a common shift is applied through the contrasts; exact when it does not round
        shifted = c + shift
        if np.all((shifted - shift) == c):
            assert select_model(shifted, p, models)[0].m == mi.m


class TestFitDensity:
    def test_sigma_zero_matches_noise_free_estimator(self):
        z = np.random.default_rng(0).normal(size=200)
        cfg = EstimatorConfig(kappa=1.5)
        coeffs, diag = fit_density(Dataset(z), NONE, cfg)
        m, ref = _noise_free_fit(z, np.ones_like(z), 200, 1.5, 1.0)
        assert diag.chosen.m == m
        np.testing.assert_allclose(coeffs.coeffs, ref[m], rtol=1e-9, atol=1e-9 * np.abs(ref[m]).max())
        # every candidate contrast as well
        for i, mi in enumerate(diag.models):
            np.testing.assert_allclose(diag.contrast[i], -np.sum(ref[mi.m] ** 2), rtol=1e-9)

    def test_laplace_structure(self):
        z = np.random.default_rng(1).normal(size=2000) + 0.5 * np.random.default_rng(2).laplace(size=2000)
        cfg = EstimatorConfig(dim_step=0.25)
        coeffs, diag = fit_density(Dataset(z), LAPLACE, cfg)
        coll = model_set(2000, LAPLACE, "density", 0.25)
        assert [mi.m for mi in diag.models] == [mi.m for mi in coll]
        assert len(list(diag.rows())) == len(coll)
        assert diag.chosen.dim <= max(model_bound(2000, LAPLACE), 0.25)
        assert coeffs.model == diag.chosen

    def test_deterministic(self):
        z = np.random.default_rng(3).normal(size=300)
        a, _ = fit_density(Dataset(z), LAPLACE)
        b, _ = fit_density(Dataset(z), LAPLACE)
        np.testing.assert_array_equal(a.coeffs, b.coeffs)

    @pytest.mark.parametrize("noise", [NONE, LAPLACE])
    def test_duplicated_data(self, noise):
        z = np.random.default_rng(4).normal(size=150)
        cfg = EstimatorConfig(k_n=300, dim_step=0.25)
        f1 = fit_component(Dataset(z), noise, cfg, "g")
        f2 = fit_component(Dataset(np.repeat(z, 2)), noise, cfg, "g")
        d1, d2 = f1.diagnostics, f2.diagnostics
        common = len(d1.models)
        assert [mi.m for mi in d2.models[:common]] == [mi.m for mi in d1.models]
        np.testing.assert_allclose(d2.contrast[:common], d1.contrast, rtol=1e-12)
        np.testing.assert_allclose(d2.penalty[:common], 0.5 * d1.penalty, rtol=1e-12)
        assert d2.chosen.m >= d1.chosen.m

    def test_failed_models_reported(self):
        z = np.random.default_rng(5).normal(size=50)
        cfg = EstimatorConfig(dim_step=1.0)
        # super smooth noise with a large sample admits models whose kernel overflows
        fit = fit_component(Dataset(np.tile(z, 4000)), make_noise("gaussian", 0.05), cfg, "g", k_n=200_000)
        assert fit.diagnostics.chosen in fit.diagnostics.models
        for m in fit.diagnostics.rejected:
            assert m not in [mi.m for mi in fit.diagnostics.models]


class TestFitEll:
    def test_zero_response(self):
        z = np.random.default_rng(6).normal(size=100)
        coeffs, diag = fit_ell(Dataset(z, np.zeros(100)), LAPLACE, EstimatorConfig(dim_step=0.25))
        np.testing.assert_array_equal(diag.contrast, 0.0)
        assert diag.chosen.m == 1
        np.testing.assert_array_equal(coeffs.coeffs, 0.0)

    def test_unit_response_equals_density(self):
        z = np.random.default_rng(7).normal(size=120)
        cfg = EstimatorConfig(dim_step=0.25)
        lfit = fit_component(Dataset(z, np.ones(120)), LAPLACE, cfg, "ell")
        gfit = fit_component(Dataset(z), LAPLACE, cfg, "g", purpose="ell")
        for m, c in lfit.candidates.items():
            np.testing.assert_array_equal(c.coeffs, gfit.candidates[m].coeffs)
        # bracket 1 + m2y = 2 and mu2 = mu1 = 0 for ordinary smooth noise
        np.testing.assert_allclose(lfit.diagnostics.penalty, 2 * gfit.diagnostics.penalty, rtol=1e-14)

    @pytest.mark.parametrize("c", [0.5, 3.0, -2.0])
    def test_scaling(self, c):
        rng = np.random.default_rng(8)
        z = rng.normal(size=200)
        y = np.sin(z) + 0.1 * rng.normal(size=200)
        cfg = EstimatorConfig(dim_step=0.25)
        a = fit_component(Dataset(z, y), LAPLACE, cfg, "ell").diagnostics
        b = fit_component(Dataset(z, c * y), LAPLACE, cfg, "ell").diagnostics
        np.testing.assert_allclose(b.contrast, c * c * a.contrast, rtol=1e-12)
        # penalty carries (1 + m2y) and m2y scales by c^2
        m2 = np.mean(y * y)
        np.testing.assert_allclose(b.penalty, a.penalty * (1 + c * c * m2) / (1 + m2), rtol=1e-12)

    def test_requires_y(self):
        with pytest.raises(ValueError):
            fit_ell(Dataset(np.zeros(5)), LAPLACE)


class TestTrim:
    def test_examples(self):
        np.testing.assert_array_equal(trim([2.0, 5.0, -5.0], [1.0, 0.1, 0.1], 10.0), [2.0, 10.0, -10.0])

    def test_zero_denominator(self):
        np.testing.assert_array_equal(trim([3.0, -3.0, 0.0], [0.0, 0.0, 0.0], 7.0), [7.0, -7.0, 0.0])

    @given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(1e-3, 1e6))
    def test_bound(self, a, b, bound):
        assert abs(float(trim(a, b, bound))) <= bound


class TestRegression:
    def test_sigma_zero_matches_noise_free_pipeline(self):
        rng = np.random.default_rng(9)
        n = 200
        z = rng.normal(size=n)
        y = np.sin(math.pi * z) + 0.2 * rng.normal(size=n)
        cfg = EstimatorConfig(kappa=1.0, kappa_prime=1.0)
        res = fit_regression(Dataset(z, y), NONE, cfg)
        k_n = math.ceil(n**1.5)
        # density collection is capped at (n / ln n)^(1/2) in regression mode
        cap = int(math.floor((n / math.log(n)) ** 0.5 + 1e-12))
        mg_all, gref = _noise_free_fit(z, np.ones(n), k_n, 1.0, 1.0)
        totals = {m: -np.sum(a * a) + 1.0 * m / n for m, a in gref.items() if m <= cap}
        mg = min(totals, key=lambda m: (totals[m], m))
        ml, lref = _noise_free_fit(z, y, k_n, 1.0, 1.0 + np.mean(y * y))
        assert res.m_hat_g.m == mg and res.m_hat_ell.m == ml
        np.testing.assert_allclose(res.g_coeffs.coeffs, gref[mg], rtol=1e-9, atol=1e-9 * np.abs(gref[mg]).max())
        np.testing.assert_allclose(res.ell_coeffs.coeffs, lref[ml], rtol=1e-9, atol=1e-9 * np.abs(lref[ml]).max())
        x = cfg.grid()
        g = _noise_free_curve(gref[mg], mg, x)
        ell = _noise_free_curve(lref[ml], ml, x)
        np.testing.assert_allclose(res.f_tilde, np.clip(ell / g, -n, n), rtol=1e-8, atol=1e-9)

    def test_totals_and_trim(self):
        rng = np.random.default_rng(10)
        z = rng.normal(size=400) + 0.5 * rng.laplace(size=400)
        y = rng.normal(size=400)
        res = fit_regression(Dataset(z, y), LAPLACE, EstimatorConfig(dim_step=0.25, practical_cap=True))
        for d in (res.diag_g, res.diag_ell):
            np.testing.assert_array_equal(d.total, d.contrast + d.penalty)
        assert np.max(np.abs(res.f_tilde)) <= res.a_n
        assert res.a_n == 400.0

    def test_tiny_trim_binds(self):
        rng = np.random.default_rng(11)
        z = rng.normal(size=100)
        cfg = EstimatorConfig(trim_exponent=0.1, practical_cap=True)
        res = fit_regression(Dataset(z, 50 * np.ones(100)), NONE, cfg)
        np.testing.assert_allclose(np.abs(res.f_tilde).max(), 100**0.1, rtol=1e-15)

    def test_regression_estimate_grid(self):
        z = np.random.default_rng(12).normal(size=100)
        g = fit_component(Dataset(z), NONE, EstimatorConfig(), "g").coeffs
        ell = CoeffVector(g.model, g.k_n, 2 * g.coeffs)
        x = np.array([-0.5, 0.0, 0.5])
        np.testing.assert_allclose(regression_estimate(ell, g, EstimatorConfig(), 100, x), 2.0, rtol=1e-14)
        # default grid is the evaluation region
        assert regression_estimate(ell, g, EstimatorConfig(), 100).shape == (201,)

    def test_requires_y(self):
        with pytest.raises(ValueError):
            fit_regression(Dataset(np.zeros(5)), NONE)

    @pytest.mark.slow
    def test_constant_sigma_zero_large_n(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=5000)
        res = fit_regression(Dataset(x, np.full(5000, 1.7)), NONE, EstimatorConfig(practical_cap=True))
        assert np.max(np.abs(res.f_tilde - 1.7)) < 0.05


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(kappa=0.0), dict(kappa_prime=-1.0), dict(trim_exponent=0.0),
                                    dict(dim_step=0.0), dict(eval_region=(1.0, 1.0, 5)),
                                    dict(eval_region=(0.0, 1.0, 1)), dict(k_n=0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            EstimatorConfig(**kw)

    def test_resolve_kn(self):
        cfg = EstimatorConfig()
        assert cfg.resolve_kn(100) == 100
        assert cfg.resolve_kn(100, regression=True) == 1000
        assert EstimatorConfig(practical_cap=True).resolve_kn(10_000, regression=True) == 16384
        assert EstimatorConfig(practical_cap=True).resolve_kn(100, regression=True) == 1000
        with pytest.raises(ValueError):
            EstimatorConfig(k_n=50).resolve_kn(100)
        assert EstimatorConfig(k_n=50, practical_cap=True).resolve_kn(100) == 50

    def test_grid(self):
        g = EstimatorConfig().grid()
        assert g.size == 201 and g[0] == -2.0 and g[-1] == 2.0

    def test_to_dict_roundtrip_keys(self):
        d = EstimatorConfig(kappa=0.5).to_dict()
        assert d["kappa"] == 0.5 and d["quad_nodes"] == 1024 and d["quad_rule"] == "filon"
