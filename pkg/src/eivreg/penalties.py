"""Variance orders, penalty constants and admissible model collections.

All quantities depend only on the known error law and ``sigma``; the only
data-driven input is the second moment of the responses in the ``ell``
penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np
from scipy import integrate

from .basis import ModelIndex, QuadratureError, model_index
from .noise import NoiseModel, l2_norm_density, noise_char_fn

__all__ = [
    "PenaltyParams",
    "ModelCollection",
    "PenaltyOverflow",
    "PURPOSES",
    "gamma_cap",
    "gamma_tilde",
    "gamma2",
    "lambda1",
    "mu1",
    "mu2",
    "pen_g",
    "pen_ell",
    "m2y",
    "model_bound",
    "model_set",
    "delta",
]

PURPOSES = ("density", "ell", "density-regression")


class PenaltyOverflow(OverflowError):
    """A variance order overflows double precision for this model."""

    def __init__(self, model: ModelIndex):
        super().__init__(f"variance order overflows for model m={model.m} (D={model.dim:g})")
        self.model = model


@dataclass(frozen=True)
class PenaltyParams:
    noise: NoiseModel
    kappa: float = 2.0
    kappa_prime: float = 2.0

    def __post_init__(self):
        if not (self.kappa > 0 and self.kappa_prime > 0):
            raise ValueError("penalty constants must be positive")


@dataclass(frozen=True)
class ModelCollection:
    models: tuple
    purpose: str

    def __post_init__(self):
        if not self.models:
            raise ValueError("empty model collection")
        ms = [mi.m for mi in self.models]
        if any(b <= a for a, b in zip(ms, ms[1:])):
            raise ValueError("models must be strictly increasing")
        if self.purpose not in PURPOSES:
            raise ValueError(f"unknown purpose {self.purpose!r}")

    def __len__(self):
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    @property
    def dims(self) -> np.ndarray:
        return np.array([mi.dim for mi in self.models])


def _order(model: ModelIndex, noise: NoiseModel, power: float) -> float:
    d = model.dim
    a, b, r, s = noise.alpha, noise.beta, noise.rho, noise.sigma
    expo = 2.0 * b * s**r * (math.pi * d) ** r if b > 0 else 0.0
    try:
        val = d ** (2.0 * a + power) * math.exp(expo)
    except OverflowError:
        raise PenaltyOverflow(model) from None
    if not math.isfinite(val):
        raise PenaltyOverflow(model)
    return val


def gamma_cap(model: ModelIndex, noise: NoiseModel) -> float:
    """``D^(2 alpha + 1 - rho) exp(2 beta sigma^rho (pi D)^rho)``."""
    return _order(model, noise, 1.0 - noise.rho)


def gamma_tilde(model: ModelIndex, noise: NoiseModel) -> float:
    """Penalty order: exponent ``2 alpha + max(1 - rho, min((1 + rho)/2, 1))``."""
    r = noise.rho
    return _order(model, noise, max(1.0 - r, min((1.0 + r) / 2.0, 1.0)))


def gamma2(model: ModelIndex, noise: NoiseModel) -> float:
    """Diagnostic order with exponent ``2 alpha + min(1/2 - rho/2, 1 - rho)``."""
    r = noise.rho
    return _order(model, noise, min(0.5 - r / 2.0, 1.0 - r))


def _R(noise: NoiseModel) -> float:
    r = noise.rho
    if r == 0:
        return 1.0
    if r <= 1:
        return 2.0 * noise.beta * r * noise.sigma**r
    return 2.0 * noise.beta * noise.sigma**r


def lambda1(noise: NoiseModel) -> float:
    s, a, r = noise.sigma, noise.alpha, noise.rho
    return (s * s * math.pi**2 + 1.0) ** a / (math.pi**r * noise.kappa0**2 * _R(noise))


def mu1(noise: NoiseModel) -> float:
    r = noise.rho
    if r < 1.0 / 3.0:
        return 0.0
    s, a, b = noise.sigma, noise.alpha, noise.beta
    lam = lambda1(noise)
    if r <= 1:
        return (b * (s * math.pi) ** r * math.sqrt(lam) * (1.0 + s * s * math.pi**2) ** (a / 2.0)
                / noise.kappa0 / math.sqrt(2.0 * math.pi))
    return b * (s * math.pi) ** r * lam


def mu2(noise: NoiseModel) -> float:
    m1 = mu1(noise)
    if 1.0 / 3.0 <= noise.rho <= 1.0:
        return m1 * l2_norm_density(noise)
    return m1


def pen_g(model: ModelIndex, n: int, params: PenaltyParams) -> float:
    nz = params.noise
    return params.kappa * (lambda1(nz) + mu1(nz)) * gamma_tilde(model, nz) / n


def pen_ell(model: ModelIndex, n: int, params: PenaltyParams, m2y_value: float) -> float:
    if m2y_value < 0:
        raise ValueError("second moment must be nonnegative")
    nz = params.noise
    return (params.kappa_prime * (lambda1(nz) + mu2(nz)) * (1.0 + m2y_value)
            * gamma_tilde(model, nz) / n)


def m2y(y) -> float:
    """Empirical second moment ``n^-1 sum Y_i^2``."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("empty response vector")
    return float(np.mean(y * y))


def _super_smooth_bound(n: int, noise: NoiseModel, power: float) -> float:
    c = 2.0 * noise.beta * noise.sigma**noise.rho
    L = math.log(n) / c
    inner = L + power / (noise.rho * c) * math.log(L) if L > 0 else -1.0
    if inner <= 0:
        return 0.0
    return inner ** (1.0 / noise.rho) / math.pi


def model_bound(n: int, noise: NoiseModel, purpose: str = "density") -> float:
    """Largest admissible dimension ``D`` for sample size ``n``."""
    if n < 3:
        raise ValueError("model bounds need n >= 3")
    if purpose not in PURPOSES:
        raise ValueError(f"unknown purpose {purpose!r}")
    a, r = noise.alpha, noise.rho
    if r == 0:
        bound = n ** (1.0 / (2.0 * a + 1.0)) / math.pi
    else:
        bound = min(_super_smooth_bound(n, noise, 2.0 * a + 1.0 - r),
                    _super_smooth_bound(n, noise, 2.0 * a + min(0.5 + r / 2.0, 1.0)))
    if purpose == "density-regression":
        bound = min(bound, (n / math.log(n)) ** (1.0 / (2.0 * a + 2.0)))
    return bound


def model_set(n: int, noise: NoiseModel, purpose: str = "density", step: float = 1.0) -> ModelCollection:
    """Models ``m = 1..m_n`` with ``D_m = m*step`` within :func:`model_bound`.

    The smallest model is always admitted so the collection is never empty.
    """
    bound = model_bound(n, noise, purpose)
    top = max(1, int(math.floor(bound / step + 1e-12)))
    return ModelCollection(tuple(model_index(m, step) for m in range(1, top + 1)), purpose)


def delta(model: ModelIndex, noise: NoiseModel, rtol: float = 1e-6) -> float:
    """``pi^-1 int_0^{pi D} |f*(sigma u)|^-2 du`` by adaptive quadrature."""
    top = math.pi * model.dim
    if noise.sigma == 0:
        return model.dim
    edge = abs(noise_char_fn(noise, top))
    if edge < 1e-150:
        raise PenaltyOverflow(model)
    fn = lambda u: 1.0 / abs(noise_char_fn(noise, u)) ** 2
    val, err = integrate.quad(fn, 0.0, top, epsabs=0.0, epsrel=1e-12, limit=1000)
    if err > rtol * abs(val):
        raise QuadratureError(f"variance integral on D={model.dim} did not converge")
    return val / math.pi
