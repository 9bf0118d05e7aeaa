"""Known measurement-error laws for the contaminated design ``Z = X + sigma*eps``.

Characteristic functions follow the convention ``u*(x) = int exp(itx) u(t) dt``.
Every noise law carries the decay parameters ``(alpha, beta, rho, kappa0,
kappa0_prime)`` of the envelope

    kappa0 (x^2+1)^(-alpha/2) exp(-beta |x|^rho)
        <= |f_eps*(x)| <=
    kappa0_prime (x^2+1)^(-alpha/2) exp(-beta |x|^rho)

which drive the penalty constants in :mod:`eivreg.penalties`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

__all__ = [
    "KINDS",
    "NoiseModel",
    "UnsupportedNoiseError",
    "make_noise",
    "custom_noise",
    "smoothness_params",
    "char_fn",
    "noise_char_fn",
    "sample_noise",
    "l2_norm_density",
    "check_envelope",
]

KINDS = ("none", "gaussian", "laplace", "cauchy")

# (alpha, beta, rho, kappa0, kappa0_prime) for unit-scale eps
_PARAMS = {
    "none": (0.0, 0.0, 0.0, 1.0, 1.0),
    "gaussian": (0.0, 0.5, 2.0, 1.0, 1.0),
    "laplace": (2.0, 0.0, 0.0, 1.0, 1.0),
    "cauchy": (0.0, 1.0, 1.0, 1.0, 1.0),
}


class UnsupportedNoiseError(ValueError):
    """Raised when a noise kind has no registered closed form."""


@dataclass(frozen=True)
class NoiseModel:
    """Error law of ``eps`` together with the noise level ``sigma``.

    Built-in kinds are ``"none"``, ``"gaussian"`` (standard normal),
    ``"laplace"`` (density ``exp(-|x|)/2``) and ``"cauchy"`` (standard).
    Use :func:`make_noise` rather than calling the constructor directly;
    it fills in the decay parameters.  ``kind="custom"`` models carry their
    own characteristic function in ``cf``.
    """

    kind: str
    sigma: float
    alpha: float
    beta: float
    rho: float
    kappa0: float = 1.0
    kappa0_prime: float = 1.0
    cf: Optional[Callable] = field(default=None, compare=False, repr=False)
    sampler: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS and self.kind != "custom":
            raise UnsupportedNoiseError(f"unknown noise kind {self.kind!r}")
        if self.kind == "custom" and self.cf is None:
            raise ValueError("custom noise needs a characteristic function")
        for name in ("sigma", "alpha", "beta", "rho"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")
        if not (0 < self.kappa0 <= self.kappa0_prime):
            raise ValueError("need 0 < kappa0 <= kappa0_prime")
        if self.kind == "none" and self.sigma != 0:
            raise ValueError("noise kind 'none' requires sigma = 0")
        if self.sigma == 0 and (self.alpha, self.beta, self.rho) != (0, 0, 0):
            raise ValueError("sigma = 0 requires alpha = beta = rho = 0")
        if (self.beta == 0) != (self.rho == 0):
            raise ValueError("beta = 0 exactly when rho = 0")
        if self.rho == 0 and self.sigma > 0 and not self.alpha > 0.5:
            raise ValueError("ordinary smooth noise needs alpha > 1/2")

    @property
    def is_null(self) -> bool:
        return self.sigma == 0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sigma": self.sigma}


def smoothness_params(kind: str, sigma: float = 1.0):
    """Return ``(alpha, beta, rho, kappa0, kappa0_prime)`` for a built-in kind.

    With ``sigma == 0`` the design is observed directly and every decay
    parameter is zero whatever the nominal kind.
    """
    kind = kind.lower()
    if kind not in _PARAMS:
        raise UnsupportedNoiseError(f"no closed form registered for {kind!r}")
    if sigma == 0:
        return _PARAMS["none"]
    return _PARAMS[kind]


def make_noise(kind: str, sigma: float = 0.0) -> NoiseModel:
    """Build a built-in :class:`NoiseModel`.

    ``make_noise("gaussian", 0.0)`` is accepted and behaves as no noise.
    """
    kind = kind.lower()
    sigma = float(sigma)
    if sigma < 0 or not math.isfinite(sigma):
        raise ValueError(f"sigma must be finite and nonnegative, got {sigma}")
    alpha, beta, rho, k0, k0p = smoothness_params(kind, sigma)
    if kind == "none" and sigma != 0:
        raise ValueError("noise kind 'none' requires sigma = 0")
    return NoiseModel(kind, sigma, alpha, beta, rho, k0, k0p)


def custom_noise(cf, sigma, alpha, beta, rho, kappa0=1.0, kappa0_prime=1.0,
                 sampler=None, check=True) -> NoiseModel:
    """Noise law given by a user-supplied characteristic function.

    The declared envelope is trusted; with ``check=True`` it is verified on
    a log-spaced grid first and a ``ValueError`` is raised on violation.
    """
    model = NoiseModel("custom", float(sigma), float(alpha), float(beta),
                       float(rho), float(kappa0), float(kappa0_prime),
                       cf=cf, sampler=sampler)
    if check and not check_envelope(model):
        raise ValueError("characteristic function violates its declared envelope")
    return model


def char_fn(model: NoiseModel, x):
    """Characteristic function ``f_eps*(x)`` of the unscaled error."""
    x = np.asarray(x, dtype=float)
    kind = model.kind
    if kind == "none":
        out = np.ones_like(x)
    elif kind == "gaussian":
        out = np.exp(-0.5 * x * x)
    elif kind == "laplace":
        out = 1.0 / (1.0 + x * x)
    elif kind == "cauchy":
        out = np.exp(-np.abs(x))
    elif kind == "custom":
        out = np.asarray(model.cf(x))
    else:  # pragma: no cover - guarded in __post_init__
        raise UnsupportedNoiseError(kind)
    return out[()] if out.ndim == 0 else out


def noise_char_fn(model: NoiseModel, x):
    """Characteristic function of ``sigma*eps``, i.e. ``f_eps*(sigma x)``."""
    x = np.asarray(x, dtype=float)
    if model.sigma == 0:
        out = np.ones_like(x)
        return out[()] if out.ndim == 0 else out
    return char_fn(model, model.sigma * x)


def sample_noise(model: NoiseModel, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` i.i.d. copies of ``sigma*eps``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if model.sigma == 0:
        return np.zeros(n)
    if model.kind == "gaussian":
        eps = rng.standard_normal(n)
    elif model.kind == "laplace":
        eps = rng.laplace(0.0, 1.0, n)
    elif model.kind == "cauchy":
        eps = rng.standard_cauchy(n)
    elif model.sampler is not None:
        eps = np.asarray(model.sampler(rng, n), dtype=float)
    else:
        raise UnsupportedNoiseError("custom noise has no sampler")
    return model.sigma * eps


def l2_norm_density(model: NoiseModel) -> float:
    """``||f_eps||_2`` of the unscaled error density."""
    if model.kind == "none":
        raise ValueError("the Dirac law has no density in L2")
    if model.kind == "gaussian":
        return (2.0 * math.sqrt(math.pi)) ** -0.5
    if model.kind == "laplace":
        return 0.5
    if model.kind == "cauchy":
        return 1.0 / math.sqrt(2.0 * math.pi)
    # Plancherel: ||f||^2 = (2 pi)^-1 int |f*|^2
    val, err = integrate.quad(lambda t: abs(model.cf(t)) ** 2, 0, np.inf,
                              epsabs=0, epsrel=1e-11, limit=500)
    return math.sqrt(val / math.pi)


def _envelope(model: NoiseModel, x):
    x = np.asarray(x, dtype=float)
    return (x * x + 1.0) ** (-model.alpha / 2) * np.exp(-model.beta * np.abs(x) ** model.rho)


def check_envelope(model: NoiseModel, x=None, rtol: float = 1e-12) -> bool:
    """Check the two-sided decay envelope of ``|f_eps*|`` on a grid."""
    if x is None:
        pos = np.logspace(-4, 3, 2000)
        x = np.concatenate([-pos[::-1], [0.0], pos])
    if model.sigma == 0:
        return True
    a = np.abs(char_fn(model, x))
    env = _envelope(model, x)
    lo = model.kappa0 * env
    hi = model.kappa0_prime * env
    ok = (a >= lo * (1 - rtol)) & (a <= hi * (1 + rtol))
    # once both sides underflow there is nothing left to compare
    ok |= (hi == 0) & (a == 0)
    return bool(np.all(ok))
