"""Synthetic ground truths for ``Y = f(X) + xi``, ``Z = X + sigma*eps``.

Every regression function / design pair in the catalog has a closed-form
(or Faddeeva-function) Fourier transform of both ``g`` and ``ell = f g``, so
projection coefficients and biases can be computed exactly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special

from .noise import NoiseModel, make_noise, sample_noise

__all__ = [
    "F_SPECS",
    "G_SPECS",
    "Smoothness",
    "Scenario",
    "SimDataset",
    "RateDescriptor",
    "generate",
    "true_curves",
    "fourier_oracle",
    "l2_norms",
    "effective_support",
    "predicted_rate",
    "default_smoothness",
    "scenario_from_dict",
]

F_SPECS = ("constant", "linear", "sine", "bump")
G_SPECS = ("normal", "mixture", "laplace")

# two-component normal mixture: weights, means, standard deviation
_MIX_W = (0.5, 0.5)
_MIX_MU = (-1.0, 1.0)
_MIX_SD = 0.5


@dataclass(frozen=True)
class Smoothness:
    """Sobolev-type class parameters ``(a, r, B)`` of ``ell`` and ``g``."""

    a_ell: float
    r_ell: float
    B_ell: float
    a_g: float
    r_g: float
    B_g: float


@dataclass(frozen=True)
class Scenario:
    f: str
    g: str
    xi_sd: float
    noise: NoiseModel
    n: int
    c: float = 1.0
    xi_dist: str = "normal"
    xi_df: float = 10.0
    smoothness: Optional[Smoothness] = None

    def __post_init__(self):
        if self.f not in F_SPECS:
            raise ValueError(f"unknown regression function {self.f!r}")
        if self.g not in G_SPECS:
            raise ValueError(f"unknown design {self.g!r}")
        if self.xi_sd < 0:
            raise ValueError("xi_sd must be nonnegative")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.xi_dist not in ("normal", "student"):
            raise ValueError("xi_dist must be 'normal' or 'student'")
        if self.xi_dist == "student" and self.xi_df < 9:
            raise ValueError("Student noise needs df >= 9 for a finite eighth moment")

    def with_n(self, n: int) -> "Scenario":
        return Scenario(self.f, self.g, self.xi_sd, self.noise, int(n), self.c,
                        self.xi_dist, self.xi_df, self.smoothness)

    def to_dict(self) -> dict:
        out = {"f": self.f, "g": self.g, "xi_sd": self.xi_sd,
               "noise": self.noise.to_dict(), "n": self.n}
        if self.f == "constant":
            out["c"] = self.c
        if self.xi_dist != "normal":
            out["xi_dist"] = self.xi_dist
            out["xi_df"] = self.xi_df
        if self.smoothness is not None:
            out["smoothness"] = asdict(self.smoothness)
        return out


def scenario_from_dict(d: dict) -> Scenario:
    """Parse the JSON scenario layout (keys ``f, g, xi_sd, noise{kind, sigma}, n``)."""
    try:
        noise = make_noise(d["noise"]["kind"], float(d["noise"].get("sigma", 0.0)))
        sm = d.get("smoothness")
        smooth = Smoothness(**{k: float(v) for k, v in sm.items()}) if sm else None
        return Scenario(f=d["f"], g=d["g"], xi_sd=float(d["xi_sd"]), noise=noise, n=int(d["n"]),
                        c=float(d.get("c", 1.0)), xi_dist=d.get("xi_dist", "normal"),
                        xi_df=float(d.get("xi_df", 10.0)), smoothness=smooth)
    except KeyError as exc:
        raise ValueError(f"scenario is missing key {exc}") from None


@dataclass(frozen=True)
class SimDataset:
    x_hidden: np.ndarray
    y: np.ndarray
    z: np.ndarray
    seed: Optional[int]


def _f(s: Scenario, x):
    x = np.asarray(x, dtype=float)
    if s.f == "constant":
        return np.full_like(x, s.c)
    if s.f == "linear":
        return x.copy()
    if s.f == "sine":
        return np.sin(np.pi * x)
    return np.exp(-x * x)


def _g(s: Scenario, x):
    x = np.asarray(x, dtype=float)
    if s.g == "normal":
        return np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    if s.g == "laplace":
        return 0.5 * np.exp(-np.abs(x))
    out = np.zeros_like(x)
    for w, mu in zip(_MIX_W, _MIX_MU):
        out += w * np.exp(-0.5 * ((x - mu) / _MIX_SD) ** 2) / (_MIX_SD * math.sqrt(2 * math.pi))
    return out


def _sample_design(s: Scenario, rng, n):
    if s.g == "normal":
        return rng.standard_normal(n)
    if s.g == "laplace":
        return rng.laplace(0.0, 1.0, n)
    comp = rng.random(n) < _MIX_W[0]
    mu = np.where(comp, _MIX_MU[0], _MIX_MU[1])
    return mu + _MIX_SD * rng.standard_normal(n)


def generate(s: Scenario, seed=None) -> SimDataset:
    """Draw ``n`` observations; ``X``, ``xi`` and ``eps`` use independent streams."""
    ss = np.random.SeedSequence(seed)
    kx, kxi, keps = (np.random.default_rng(c) for c in ss.spawn(3))
    x = _sample_design(s, kx, s.n)
    if s.xi_sd == 0:
        xi = np.zeros(s.n)
    elif s.xi_dist == "normal":
        xi = s.xi_sd * kxi.standard_normal(s.n)
    else:
        df = s.xi_df
        xi = s.xi_sd * kxi.standard_t(df, s.n) / math.sqrt(df / (df - 2))
    y = _f(s, x) + xi
    z = x + sample_noise(s.noise, s.n, keps)
    return SimDataset(x, y, z, seed)


def true_curves(s: Scenario, grid):
    """``(f, g, ell)`` evaluated on ``grid``."""
    f = _f(s, grid)
    g = _g(s, grid)
    return f, g, f * g


def _gauss_cf(t, w, mu, sd):
    return w * np.exp(1j * t * mu - 0.5 * (sd * t) ** 2)


def fourier_oracle(s: Scenario):
    """Return callables ``(g*, ell*)`` with ``u*(t) = int exp(itx) u(x) dx``."""
    g_kind = s.g

    def gstar(t):
        t = np.asarray(t, dtype=float)
        if g_kind == "normal":
            return np.exp(-0.5 * t * t) + 0j
        if g_kind == "laplace":
            return 1.0 / (1.0 + t * t) + 0j
        return sum(_gauss_cf(t, w, mu, _MIX_SD) for w, mu in zip(_MIX_W, _MIX_MU))

    def dgstar(t):
        t = np.asarray(t, dtype=float)
        if g_kind == "normal":
            return -t * np.exp(-0.5 * t * t) + 0j
        if g_kind == "laplace":
            return -2.0 * t / (1.0 + t * t) ** 2 + 0j
        return sum((1j * mu - _MIX_SD**2 * t) * _gauss_cf(t, w, mu, _MIX_SD)
                   for w, mu in zip(_MIX_W, _MIX_MU))

    if s.f == "constant":
        c = s.c
        ellstar = lambda t: c * gstar(t)
    elif s.f == "linear":
        # (x g)* = -i d/dt g*
        ellstar = lambda t: -1j * dgstar(t)
    elif s.f == "sine":
        ellstar = lambda t: (gstar(np.asarray(t) + math.pi) - gstar(np.asarray(t) - math.pi)) / 2j
    else:
        ellstar = _bump_transform(g_kind)
    return gstar, ellstar


def _bump_transform(g_kind):
    if g_kind == "normal":
        # exp(-x^2) N(0,1) = N(0, 1/3) / sqrt(3)
        return lambda t: np.exp(-np.asarray(t, dtype=float) ** 2 / 6.0) / math.sqrt(3.0) + 0j
    if g_kind == "mixture":
        comps = []
        for w, mu in zip(_MIX_W, _MIX_MU):
            v = 0.5 + _MIX_SD**2
            scale = math.sqrt(math.pi) * math.exp(-0.5 * mu * mu / v) / math.sqrt(2 * math.pi * v)
            sd2 = 0.5 * _MIX_SD**2 / v
            m2 = mu * 0.5 / v
            comps.append((w * scale, m2, math.sqrt(sd2)))
        return lambda t: sum(_gauss_cf(np.asarray(t, dtype=float), a, m, sd) for a, m, sd in comps)

    # int_0^inf exp(-x^2 - a x) dx = sqrt(pi)/2 erfcx(a/2), erfcx(z) = wofz(i z)
    def lap(t):
        t = np.asarray(t, dtype=float)
        a = (1.0 - 1j * t) / 2.0
        return 0.5 * math.sqrt(math.pi) * np.real(special.wofz(1j * a)) + 0j

    return lap


def effective_support(s: Scenario, tol: float = 1e-6) -> float:
    """Half-width ``L`` beyond which ``|g|`` and ``|ell|`` stay below ``tol``."""
    L = 1.0
    while True:
        x = np.linspace(L, L + 50.0, 2001)
        _, g, ell = true_curves(s, np.concatenate([x, -x]))
        if max(np.max(np.abs(g)), np.max(np.abs(ell))) < tol:
            return L
        L += 0.25


def l2_norms(s: Scenario):
    """``(||g||_2^2, ||ell||_2^2)`` by quadrature of the spatial curves."""
    def sq(which):
        fn = lambda x: float(true_curves(s, np.array([x]))[which][0] ** 2)
        val, _ = integrate.quad(fn, -L, L, points=[-1.0, 0.0, 1.0], epsabs=1e-15,
                                epsrel=1e-12, limit=1000)
        return val
    L = effective_support(s, 1e-9)
    return sq(1), sq(2)


def default_smoothness(f: str, g: str) -> Smoothness:
    """Conservative class membership for catalog pairs.

    Gaussian-type transforms with ``|psi*(t)|^2 ~ exp(-c t^2)`` belong to
    ``r = 2`` for any ``B < c/2``; we report ``B = c/4``.  Laplace-design
    transforms decay at least like ``t^-2``, which allows any ``a < 3/2``.
    """
    if g == "laplace":
        return Smoothness(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)
    c_g = 1.0 if g == "normal" else _MIX_SD**2
    if f == "bump":
        c_ell = 1.0 / 3.0 if g == "normal" else _MIX_SD**2 / (1.0 + 2.0 * _MIX_SD**2)
    else:
        c_ell = c_g
    return Smoothness(0.0, 2.0, c_ell / 4.0, 0.0, 2.0, c_g / 4.0)


@dataclass(frozen=True)
class RateDescriptor:
    """Rate ``n^n_exponent (ln n)^log_exponent``, or ``kind="implicit"``."""

    kind: str
    n_exponent: Optional[float]
    log_exponent: Optional[float]
    expression: str

    def value(self, n: float) -> float:
        if self.kind == "implicit":
            raise ValueError("implicit rate has no closed form")
        return n**self.n_exponent * math.log(n) ** self.log_exponent

    def to_dict(self) -> dict:
        return asdict(self)


def _component_rate(alpha, rho, a, r) -> RateDescriptor:
    if rho == 0 and r == 0:
        e = -2.0 * a / (2.0 * alpha + 2.0 * a + 1.0)
        return RateDescriptor("polynomial", e, 0.0, f"n^({e:.6g})")
    if rho == 0:
        le = (2.0 * alpha + 1.0) / r
        return RateDescriptor("log-over-n", -1.0, le, f"(ln n)^({le:.6g}) / n")
    if r == 0:
        le = -2.0 * a / rho
        return RateDescriptor("logarithmic", 0.0, le, f"(ln n)^({le:.6g})")
    return RateDescriptor("implicit", None, None,
                          "implicit: D^(2alpha+2a+1-r) exp(2 beta sigma^rho (pi D)^rho + 2B (pi D)^r) = O(n)")


def predicted_rate(s: Scenario, target: str) -> RateDescriptor:
    """Best achievable squared-L2 rate for ``target`` in ``{"ell", "density", "regression"}``.

    The regression rate is the component rate at ``a* = min(a_ell, a_g)`` and
    ``r* = min(r_ell, r_g)``.
    """
    sm = s.smoothness
    if sm is None:
        raise ValueError("scenario has no smoothness metadata")
    alpha, rho = s.noise.alpha, s.noise.rho
    ell = _component_rate(alpha, rho, sm.a_ell, sm.r_ell)
    g = _component_rate(alpha, rho, sm.a_g, sm.r_g)
    if target == "ell":
        return ell
    if target == "density":
        return g
    if target == "regression":
        return _component_rate(alpha, rho, min(sm.a_ell, sm.a_g), min(sm.r_ell, sm.r_g))
    raise ValueError(f"unknown target {target!r}")
