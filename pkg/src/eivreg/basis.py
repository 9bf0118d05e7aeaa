"""Sinc (Shannon) basis ``phi_{m,j}(x) = sqrt(D_m) sinc(D_m x - j)``.

For fixed ``m`` the translates ``{phi_{m,j}}_j`` form an orthonormal basis of
the L2 functions whose Fourier transform is supported in
``[-pi D_m, pi D_m]``.  Coefficient vectors are truncated to ``|j| <= k_n``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev
from scipy import integrate

__all__ = [
    "ModelIndex",
    "CoeffVector",
    "model_index",
    "sinc",
    "sinc_dd",
    "phi",
    "phi_dd",
    "reconstruct",
    "project_oracle",
    "projection_bias",
    "QuadratureError",
]

_SERIES_CUT = 1e-4


class QuadratureError(RuntimeError):
    """An adaptive quadrature did not reach its tolerance."""


@dataclass(frozen=True, order=True)
class ModelIndex:
    """Model number ``m`` and its dimension ``D_m = m * step``."""

    m: int
    dim: float

    def __post_init__(self):
        if self.m < 1 or not self.dim > 0:
            raise ValueError(f"invalid model index m={self.m}, D={self.dim}")


def model_index(m: int, step: float = 1.0) -> ModelIndex:
    return ModelIndex(int(m), float(m) * float(step))


@dataclass(frozen=True)
class CoeffVector:
    """Coefficients ``c_j`` for ``j = -k_n..k_n`` on model ``model``."""

    model: ModelIndex
    k_n: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (2 * self.k_n + 1,):
            raise ValueError(f"expected {2 * self.k_n + 1} coefficients, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def j(self) -> np.ndarray:
        return np.arange(-self.k_n, self.k_n + 1)

    def __getitem__(self, j: int) -> float:
        if abs(j) > self.k_n:
            raise IndexError(j)
        return self.coeffs[j + self.k_n]

    def norm_sq(self) -> float:
        return float(np.dot(self.coeffs, self.coeffs))

    def truncate(self, k: int) -> "CoeffVector":
        if k > self.k_n:
            raise ValueError("cannot extend a coefficient vector")
        return CoeffVector(self.model, k, self.coeffs[self.k_n - k: self.k_n + k + 1])


def sinc(w):
    """``sin(pi w)/(pi w)`` with a Taylor branch near the removable singularity."""
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    small = np.abs(w) < _SERIES_CUT
    ws = w[~small]
    out[~small] = np.sin(np.pi * ws) / (np.pi * ws)
    x2 = (np.pi * w[small]) ** 2
    out[small] = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    return out[()] if out.ndim == 0 else out


def sinc_dd(w):
    """Second derivative of :func:`sinc`."""
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    small = np.abs(w) < 1e-2
    ws = w[~small]
    s, c = np.sin(np.pi * ws), np.cos(np.pi * ws)
    out[~small] = (-np.pi * s / ws - 2.0 * c / ws**2 + 2.0 * s / (np.pi * ws**3))
    x2 = (np.pi * w[small]) ** 2
    # d2/dw2 of sum (-1)^k (pi w)^(2k) / (2k+1)!
    out[small] = np.pi**2 * (-1.0 / 3.0 + x2 / 10.0 - x2**2 / 168.0 + x2**3 / 6480.0)
    return out[()] if out.ndim == 0 else out


def phi(model: ModelIndex, j, x):
    """Basis function ``phi_{m,j}(x)``; broadcasts over ``j`` and ``x``."""
    d = model.dim
    return math.sqrt(d) * sinc(d * np.asarray(x, dtype=float) - np.asarray(j))


def phi_dd(model: ModelIndex, j, x):
    """Second derivative of ``phi_{m,j}`` with respect to ``x``."""
    d = model.dim
    return d**2.5 * sinc_dd(d * np.asarray(x, dtype=float) - np.asarray(j))


def _far_field(b, jj, ylo, yhi, deg=48, chunk=1 << 16):
    """Chebyshev interpolant of ``sum_j b_j / (y - j)`` on ``[ylo, yhi]``."""
    t = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
    yc = 0.5 * (ylo + yhi) + 0.5 * (yhi - ylo) * t
    vals = np.zeros(deg + 1)
    for s in range(0, len(jj), chunk):
        vals += (b[s:s + chunk][None, :] / (yc[:, None] - jj[s:s + chunk][None, :])).sum(axis=1)
    return chebyshev.chebfit(t, vals, deg)


def reconstruct(c: CoeffVector, grid) -> np.ndarray:
    """Evaluate ``sum_j c_j phi_{m,j}`` on ``grid``.

    Small problems are summed directly.  Otherwise the sum is split into
    translates centred near the grid (summed directly) and the remaining far
    translates, whose contribution is smooth on the grid range and is
    evaluated through a Chebyshev interpolant.
    """
    x = np.asarray(grid, dtype=float)
    shape = x.shape
    x = x.ravel()
    if x.size == 0:
        return np.zeros(shape)
    d = c.model.dim
    jj = c.j
    if x.size * jj.size <= 4_000_000:
        out = np.zeros(x.size)
        step = max(1, 4_000_000 // max(jj.size, 1))
        for s in range(0, x.size, step):
            out[s:s + step] = phi(c.model, jj[None, :], x[s:s + step, None]) @ c.coeffs
        return out.reshape(shape)

    y = d * x
    ylo, yhi = float(y.min()), float(y.max())
    half = max(0.5 * (yhi - ylo), 1.0)
    margin = math.ceil(half) + 8
    near = (jj >= math.floor(ylo) - margin) & (jj <= math.ceil(yhi) + margin)
    out = np.zeros(x.size)
    jn, cn = jj[near], c.coeffs[near]
    if jn.size:
        step = max(1, 4_000_000 // jn.size)
        for s in range(0, x.size, step):
            out[s:s + step] = sinc(y[s:s + step, None] - jn[None, :]) @ cn
    far = ~near
    if np.any(far):
        jf = jj[far].astype(float)
        # sinc(y - j) = (-1)^j sin(pi y) / (pi (y - j))
        b = np.where(jj[far] % 2 == 0, 1.0, -1.0) * c.coeffs[far]
        lo, hi = ylo - 1e-9, yhi + 1e-9
        cheb = _far_field(b, jf, lo, hi)
        t = (2.0 * y - (lo + hi)) / (hi - lo)
        out += np.sin(np.pi * y) / np.pi * chebyshev.chebval(t, cheb)
    return (math.sqrt(d) * out).reshape(shape)


def _quad(fn, a, b, weight=None, wvar=None, epsrel=1e-12):
    # convergence is judged by the caller from the returned error estimate
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(fn, a, b, weight=weight, wvar=wvar, epsabs=1e-15,
                                  epsrel=epsrel, limit=1000)
    return val, err


def project_oracle(fstar, model: ModelIndex, k_n: int, rtol: float = 1e-8) -> CoeffVector:
    """Exact coefficients ``<phi_{m,j}, psi>`` of a function known by its transform.

    Uses Plancherel, ``a_j = (2 pi)^-1 D^-1/2 int_{|x|<=pi D} exp(-i j x/D) psi*(x) dx``,
    with adaptive oscillatory quadrature per coefficient.  ``psi`` is taken real
    so ``psi*(-x) = conj(psi*(x))`` and the integral folds onto ``[0, pi D]``.
    """
    d = model.dim
    top = math.pi * d
    re = lambda x: float(np.real(fstar(x)))
    im = lambda x: float(np.imag(fstar(x)))
    # absolute floor for coefficients that vanish: relative to int |psi*|
    scale = _quad(lambda x: abs(fstar(x)), 0.0, top)[0]
    out = np.empty(2 * k_n + 1)
    for idx, j in enumerate(range(-k_n, k_n + 1)):
        w = j / d
        if j == 0:
            a, ea = _quad(re, 0.0, top)
            b, eb = 0.0, 0.0
        else:
            a, ea = _quad(re, 0.0, top, weight="cos", wvar=w)
            b, eb = _quad(im, 0.0, top, weight="sin", wvar=w)
        val = a + b
        err = ea + eb
        if err > max(rtol * abs(val), 1e-12 * scale):
            raise QuadratureError(
                f"coefficient j={j} on D={d}: value {val:.3e}, error estimate {err:.1e}")
        out[idx] = val / (math.pi * math.sqrt(d))
    return CoeffVector(model, k_n, out)


def projection_bias(fstar, model: ModelIndex, rtol: float = 1e-6) -> float:
    """Squared L2 distance between ``psi`` and its projection on ``S_m``.

    Equals ``(2 pi)^-1 int_{|x| >= pi D} |psi*(x)|^2 dx`` for real ``psi``.
    """
    top = math.pi * model.dim
    fn = lambda x: abs(fstar(x)) ** 2
    val, err = integrate.quad(fn, top, np.inf, epsabs=1e-300, epsrel=1e-10, limit=1000)
    if not math.isfinite(val) or err > max(rtol * abs(val), 1e-300):
        raise QuadratureError(f"tail integral did not converge on D={model.dim}")
    return val / math.pi
