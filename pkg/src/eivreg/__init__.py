"""Adaptive deconvolution estimators for errors-in-variables regression.

The design ``X`` is observed only through ``Z = X + sigma*eps`` with a known
error law.  The package estimates the design density ``g``, the product
``ell = f g`` and the regression function ``f = ell / g`` by penalised
projection on sinc spaces.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .basis import CoeffVector, ModelIndex, model_index, phi, project_oracle, reconstruct
from .deconv import Dataset, QuadratureSpec, deconv_kernel, estimate_coeffs
from .noise import NoiseModel, custom_noise, make_noise, smoothness_params
from .penalties import PenaltyParams, model_set, pen_ell, pen_g
from .riskbench import RiskReport, calibrate_kappa, mise, oracle_curve, rate_slope
from .selector import EstimatorConfig, FitResult, fit_density, fit_ell, fit_regression
from .simlab import Scenario, fourier_oracle, generate, predicted_rate

__all__ = [
    "__version__",
    "CoeffVector", "ModelIndex", "model_index", "phi", "project_oracle", "reconstruct",
    "Dataset", "QuadratureSpec", "deconv_kernel", "estimate_coeffs",
    "NoiseModel", "custom_noise", "make_noise", "smoothness_params",
    "PenaltyParams", "model_set", "pen_ell", "pen_g",
    "RiskReport", "calibrate_kappa", "mise", "oracle_curve", "rate_slope",
    "EstimatorConfig", "FitResult", "fit_density", "fit_ell", "fit_regression",
    "Scenario", "fourier_oracle", "generate", "predicted_rate",
]
