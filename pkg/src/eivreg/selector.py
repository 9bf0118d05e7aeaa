"""Penalised model selection and the trimmed ratio estimate of the regression function."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .basis import CoeffVector, ModelIndex, reconstruct
from .deconv import Dataset, ModelRejected, QuadratureSpec, contrast_value, estimate_coeffs
from .noise import NoiseModel
from .penalties import (PenaltyOverflow, PenaltyParams, m2y,
                        model_set, pen_ell, pen_g)

__all__ = [
    "EstimatorConfig",
    "Diagnostics",
    "ComponentFit",
    "FitResult",
    "select_model",
    "fit_component",
    "fit_density",
    "fit_ell",
    "regression_estimate",
    "trim",
    "fit_regression",
]

PRACTICAL_KN = 2**14


@dataclass(frozen=True)
class EstimatorConfig:
    """Tuning left open by the method.

    ``k_n=None`` resolves to ``n`` for density and ``ell`` fits and to
    ``ceil(n^1.5)`` for the regression estimate.  With ``practical_cap`` the
    regression default becomes ``max(n, 2^14)`` (never above ``n^1.5``) and
    explicit ``k_n`` values below the theoretical floor are accepted.
    """

    k_n: Optional[int] = None
    quad: QuadratureSpec = QuadratureSpec()
    kappa: float = 2.0
    kappa_prime: float = 2.0
    trim_exponent: float = 1.0
    dim_step: float = 1.0
    eval_region: Tuple[float, float, int] = (-2.0, 2.0, 201)
    practical_cap: bool = False

    def __post_init__(self):
        if not (self.kappa > 0 and self.kappa_prime > 0):
            raise ValueError("kappa and kappa_prime must be positive")
        if not self.trim_exponent > 0:
            raise ValueError("trim_exponent must be positive")
        if not self.dim_step > 0:
            raise ValueError("dim_step must be positive")
        lo, hi, pts = self.eval_region
        if not (lo < hi and int(pts) >= 2):
            raise ValueError("eval_region needs lo < hi and at least 2 points")
        if self.k_n is not None and self.k_n < 1:
            raise ValueError("k_n must be positive")

    def params(self, noise: NoiseModel) -> PenaltyParams:
        return PenaltyParams(noise, self.kappa, self.kappa_prime)

    def grid(self) -> np.ndarray:
        lo, hi, pts = self.eval_region
        return np.linspace(lo, hi, int(pts))

    def resolve_kn(self, n: int, regression: bool = False) -> int:
        floor = int(math.ceil(n**1.5 - 1e-9)) if regression else n
        if self.k_n is not None:
            if self.k_n < floor and not self.practical_cap:
                raise ValueError(f"k_n={self.k_n} below the required {floor}; "
                                 "set practical_cap to allow it")
            return int(self.k_n)
        if regression and self.practical_cap:
            return min(floor, max(n, PRACTICAL_KN))
        return floor

    def to_dict(self) -> dict:
        return {
            "k_n": self.k_n,
            "quad_nodes": self.quad.nodes,
            "quad_rule": self.quad.rule,
            "kappa": self.kappa,
            "kappa_prime": self.kappa_prime,
            "trim_exponent": self.trim_exponent,
            "dim_step": self.dim_step,
            "eval_region": list(self.eval_region),
            "practical_cap": self.practical_cap,
        }


@dataclass
class Diagnostics:
    """Per-model selection table."""

    models: List[ModelIndex]
    contrast: np.ndarray
    penalty: np.ndarray
    total: np.ndarray
    selected: int
    rejected: Dict[int, str] = field(default_factory=dict)

    @property
    def chosen(self) -> ModelIndex:
        return self.models[self.selected]

    def rows(self):
        for i, mi in enumerate(self.models):
            yield (mi.m, mi.dim, float(self.contrast[i]), float(self.penalty[i]),
                   float(self.total[i]), i == self.selected)


@dataclass
class ComponentFit:
    coeffs: CoeffVector
    diagnostics: Diagnostics
    candidates: Dict[int, CoeffVector]


@dataclass
class FitResult:
    m_hat_g: ModelIndex
    m_hat_ell: ModelIndex
    diag_g: Diagnostics
    diag_ell: Diagnostics
    grid: np.ndarray
    g_tilde: np.ndarray
    ell_tilde: np.ndarray
    f_tilde: np.ndarray
    a_n: float
    g_coeffs: CoeffVector
    ell_coeffs: CoeffVector


def select_model(contrasts, pens, models) -> Tuple[ModelIndex, Diagnostics]:
    """Minimise contrast + penalty; exact ties go to the smallest model."""
    models = list(models)
    c = np.asarray(contrasts, dtype=float)
    p = np.asarray(pens, dtype=float)
    if not models:
        raise ValueError("empty model collection")
    if c.shape != (len(models),) or p.shape != c.shape:
        raise ValueError("contrasts and penalties must align with models")
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(p))):
        raise ValueError("contrasts and penalties must be finite")
    total = c + p
    best = int(np.argmin(total))
    return models[best], Diagnostics(models, c, p, total, best)


def _penalty(target: str, mi: ModelIndex, n: int, params: PenaltyParams, second_moment: float) -> float:
    if target == "g":
        return pen_g(mi, n, params)
    return pen_ell(mi, n, params, second_moment)


def _select(target, cands, n, params, second_moment, rejected) -> ComponentFit:
    models, contrasts, pens = [], [], []
    rejected = dict(rejected)
    for mi, c in cands:
        try:
            pen = _penalty(target, mi, n, params, second_moment)
        except PenaltyOverflow as exc:
            rejected[mi.m] = str(exc)
            continue
        models.append(mi)
        contrasts.append(contrast_value(c))
        pens.append(pen)
    if not models:
        raise ArithmeticError(f"every model was rejected for target {target!r}: {rejected}")
    mi, diag = select_model(contrasts, pens, models)
    diag.rejected = rejected
    coeffs = {m.m: c for m, c in cands}
    return ComponentFit(coeffs[mi.m], diag, {m.m: coeffs[m.m] for m in models})


def _candidates(data, noise, collection, k_n, quad, which):
    out = {name: [] for name in which}
    rejected = {}
    for mi in collection:
        try:
            est = estimate_coeffs(data, noise, mi, k_n, quad, which=which)
        except ModelRejected as exc:
            rejected[mi.m] = str(exc)
            warnings.warn(str(exc), RuntimeWarning, stacklevel=3)
            continue
        for name in which:
            out[name].append((mi, est[name]))
    return out, rejected


def fit_component(data: Dataset, noise: NoiseModel, cfg: EstimatorConfig, target: str = "g",
                  purpose: Optional[str] = None, k_n: Optional[int] = None) -> ComponentFit:
    """Fit every model of the collection for one target and select among them."""
    if purpose is None:
        purpose = "density" if target == "g" else "ell"
    n = data.n
    if k_n is None:
        k_n = cfg.resolve_kn(n)
    collection = model_set(max(n, 3), noise, purpose, cfg.dim_step)
    cands, rejected = _candidates(data, noise, collection, k_n, cfg.quad, (target,))
    second = m2y(data.y) if target == "ell" else 0.0
    return _select(target, cands[target], n, cfg.params(noise), second, rejected)


def fit_density(data: Dataset, noise: NoiseModel, cfg: EstimatorConfig = EstimatorConfig(),
                purpose: str = "density"):
    """Adaptive density estimate ``g_tilde``; returns ``(coeffs, diagnostics)``."""
    fit = fit_component(data, noise, cfg, "g", purpose)
    return fit.coeffs, fit.diagnostics


def fit_ell(data: Dataset, noise: NoiseModel, cfg: EstimatorConfig = EstimatorConfig()):
    """Adaptive estimate of ``ell = f g``; returns ``(coeffs, diagnostics)``."""
    if data.y is None:
        raise ValueError("fit_ell requires responses y")
    fit = fit_component(data, noise, cfg, "ell", "ell")
    return fit.coeffs, fit.diagnostics


def trim(num, den, bound: float) -> np.ndarray:
    """``sign(r) min(|r|, bound)`` for ``r = num/den``; ``x/0`` maps to ``sign(x) bound``."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.empty(np.broadcast(num, den).shape)
    num, den = np.broadcast_arrays(num, den)
    zero = den == 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = num[~zero] / den[~zero]
    out[~zero] = np.clip(r, -bound, bound)
    out[zero] = np.sign(num[zero]) * bound
    return out


def regression_estimate(ell_c: CoeffVector, g_c: CoeffVector, cfg: EstimatorConfig, n: int,
                        grid=None) -> np.ndarray:
    """Trimmed ratio ``(ell_tilde / g_tilde)`` clipped at ``a_n = n^k``."""
    x = cfg.grid() if grid is None else np.asarray(grid, dtype=float)
    a_n = float(n) ** cfg.trim_exponent
    return trim(reconstruct(ell_c, x), reconstruct(g_c, x), a_n)


def fit_regression(data: Dataset, noise: NoiseModel, cfg: EstimatorConfig = EstimatorConfig(),
                   grid=None, keep_candidates: bool = False):
    """Full pipeline: ``g_tilde``, ``ell_tilde`` and the trimmed ratio on the grid.

    With ``keep_candidates`` the per-model fits are returned as well, as
    ``(FitResult, g_fit, ell_fit)``.
    """
    if data.y is None:
        raise ValueError("regression needs responses y")
    n = data.n
    k_n = cfg.resolve_kn(n, regression=True)
    coll_g = model_set(max(n, 3), noise, "density-regression", cfg.dim_step)
    coll_l = model_set(max(n, 3), noise, "ell", cfg.dim_step)
    union = sorted(set(coll_g.models) | set(coll_l.models))
    cands, rejected = _candidates(data, noise, union, k_n, cfg.quad, ("g", "ell"))
    in_g = {mi.m for mi in coll_g}
    in_l = {mi.m for mi in coll_l}
    params = cfg.params(noise)
    gfit = _select("g", [c for c in cands["g"] if c[0].m in in_g], n, params, 0.0,
                   {m: r for m, r in rejected.items() if m in in_g})
    lfit = _select("ell", [c for c in cands["ell"] if c[0].m in in_l], n, params, m2y(data.y),
                   {m: r for m, r in rejected.items() if m in in_l})
    x = cfg.grid() if grid is None else np.asarray(grid, dtype=float)
    g_vals = reconstruct(gfit.coeffs, x)
    l_vals = reconstruct(lfit.coeffs, x)
    a_n = float(n) ** cfg.trim_exponent
    res = FitResult(gfit.diagnostics.chosen, lfit.diagnostics.chosen, gfit.diagnostics,
                    lfit.diagnostics, x, g_vals, l_vals, trim(l_vals, g_vals, a_n), a_n,
                    gfit.coeffs, lfit.coeffs)
    if keep_candidates:
        return res, gfit, lfit
    return res
