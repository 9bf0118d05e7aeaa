"""Fourier-series coefficients ``int_{-pi}^{pi} exp(i j v) H(v) dv`` for all ``j`` at once.

``[-pi, pi]`` is cut into ``P`` equal panels.  On each panel ``H`` is
replaced by its degree ``p-1`` Legendre interpolant at the Gauss-Legendre
nodes, and the panel integrals of ``exp(i j v) P_k`` are exact:

    int_{-1}^{1} exp(i theta t) P_k(t) dt = 2 i^k j_k(theta)

with ``j_k`` the spherical Bessel function.  The sum over panels is a DFT of
length ``P``, so every ``|j| <= k`` costs ``O(p)`` once the FFTs are done and
the result carries no aliasing in ``j``; the only error is the interpolation
error of ``H`` on a panel.
"""

from __future__ import annotations

import math
from functools import lru_cache

import finufft
import numba
import numpy as np
from numpy.polynomial import legendre
from scipy.special import spherical_jn

ORDER = 16
# n * panels above which the empirical characteristic function uses the NUFFT
NUFFT_THRESHOLD = 1 << 15


@lru_cache(maxsize=None)
def gl_rule(order: int = ORDER):
    t, w = legendre.leggauss(order)
    return t, w


@lru_cache(maxsize=None)
def _legendre_transform(order: int):
    # L_k = (2k+1)/2 sum_q w_q P_k(t_q) H(t_q)
    t, w = gl_rule(order)
    V = legendre.legvander(t, order - 1)  # (q, k)
    return (V * w[:, None]).T * ((2 * np.arange(order) + 1) / 2.0)[:, None]


def panel_nodes(n_panels: int, order: int = ORDER) -> np.ndarray:
    """Gauss-Legendre nodes of every panel, shape ``(n_panels, order)``."""
    h = 2.0 * math.pi / n_panels
    centers = -math.pi + (np.arange(n_panels) + 0.5) * h
    t, _ = gl_rule(order)
    return centers[:, None] + 0.5 * h * t[None, :]


_BESSEL_CACHE: dict = {}


def _bessel_table(n_panels: int, order: int, kmax: int) -> np.ndarray:
    """``i^k j_k(j pi / P)`` for ``j = 0..kmax``, shape ``(order, kmax+1)``."""
    key = (n_panels, order)
    tab = _BESSEL_CACHE.get(key)
    if tab is None or tab.shape[1] <= kmax:
        size = max(kmax + 1, 1024)
        theta = np.arange(size) * (math.pi / n_panels)
        tab = np.empty((order, size), dtype=complex)
        for k in range(order):
            tab[k] = (1j) ** k * spherical_jn(k, theta)
        if len(_BESSEL_CACHE) > 8:
            _BESSEL_CACHE.clear()
        _BESSEL_CACHE[key] = tab
    return tab


@lru_cache(maxsize=4)
def _panel_plan(n_panels: int, order: int, kmax: int):
    # per-j gather index and h * phase * (+-1)^k i^k j_k(|j| pi / P), shared by every call
    h = 2.0 * math.pi / n_panels
    tab = _bessel_table(n_panels, order, kmax)
    j = np.arange(-kmax, kmax + 1)
    T = tab[:, np.abs(j)].copy()
    neg = j < 0
    T[:, neg] *= ((-1.0) ** np.arange(order))[:, None]
    # exp(i j (-pi + h/2)) = (-1)^j exp(i pi j / P)
    phase = np.where(j % 2 == 0, 1.0, -1.0) * np.exp(1j * math.pi * (j % (2 * n_panels)) / n_panels)
    T *= h * phase
    return j % n_panels, np.ascontiguousarray(T.T)


def panel_fourier(values: np.ndarray, kmax: int) -> np.ndarray:
    """``int_{-pi}^{pi} exp(i j v) H(v) dv`` for ``j = -kmax..kmax``.

    ``values`` holds ``H`` at :func:`panel_nodes`, shape ``(..., P, order)``;
    complex input is allowed and leading axes are batched.  Returns a
    complex array of shape ``(..., 2 kmax + 1)``.
    """
    values = np.asarray(values)
    n_panels, order = values.shape[-2:]
    L = values @ _legendre_transform(order).T  # (..., P, k)
    # B_k[r] = sum_p L[p, k] exp(2 pi i r p / P)
    B = np.fft.ifft(L, axis=-2) * n_panels
    idx, T = _panel_plan(n_panels, order, kmax)
    return np.einsum("...jk,jk->...j", B[..., idx, :], T)


def gauss_legendre_fourier(fn_values, nodes, weights, j) -> np.ndarray:
    """Direct quadrature sum ``sum_q w_q exp(i j v_q) H(v_q)``, one row per ``j``."""
    j = np.asarray(j, dtype=float)
    return np.exp(1j * np.outer(j, nodes)) @ (weights * fn_values)


def composite_gl(n_panels: int, order: int = ORDER):
    """Flattened nodes and weights of the composite rule on ``[-pi, pi]``."""
    v = panel_nodes(n_panels, order).ravel()
    _, w = gl_rule(order)
    h = 2.0 * math.pi / n_panels
    return v, np.tile(0.5 * h * w, n_panels)


@numba.njit(cache=True, fastmath=False)
def _ecf_kernel(freq, weights, v0, v1, t, out):
    # out[s, p, q] += sum_i weights[s, i] exp(-i freq_i (c_p + h t_q / 2))
    n_panels = out.shape[1]
    order = out.shape[2]
    nw = weights.shape[0]
    h = v1
    base = np.empty(order, dtype=np.complex128)
    for i in range(freq.shape[0]):
        f = freq[i]
        for q in range(order):
            base[q] = np.exp(-1j * f * (0.5 * h * t[q]))
        step = np.exp(-1j * f * h)
        cur = np.exp(-1j * f * v0)
        for p in range(n_panels):
            if p % 32 == 31:
                cur = np.exp(-1j * f * (v0 + p * h))
            for q in range(order):
                e = cur * base[q]
                for s in range(nw):
                    out[s, p, q] += weights[s, i] * e
            cur *= step


def _ecf_nufft(freq, weights, n_panels, order, eps):
    # panel centres are equispaced, so for each in-panel offset q the sum over
    # panels is a type-1 NUFFT in k = p - P/2 with points freq*h wrapped to [-pi, pi)
    h = 2.0 * math.pi / n_panels
    v0 = -math.pi + 0.5 * h
    t, _ = gl_rule(order)
    x = np.mod(freq * h + math.pi, 2.0 * math.pi) - math.pi
    shift = v0 + 0.5 * n_panels * h
    phase = np.exp(-1j * np.outer(shift + 0.5 * h * t, freq))          # (order, n)
    strengths = (weights[:, None, :] * phase[None, :, :]).reshape(-1, freq.size)
    f = finufft.nufft1d1(x, np.ascontiguousarray(strengths), n_panels, isign=-1, eps=eps,
                         nthreads=1, modeord=0)
    return f.reshape(weights.shape[0], order, n_panels).transpose(0, 2, 1)


def empirical_cf(freq: np.ndarray, weights: np.ndarray, n_panels: int,
                 order: int = ORDER, method: str = "auto") -> np.ndarray:
    """``sum_i w_{s,i} exp(-i freq_i v)`` at the panel nodes for each weight row ``s``.

    Returns shape ``(S, P, order)``.  ``method="direct"`` sums every term
    (exact to rounding); ``"nufft"`` uses a type-1 nonuniform FFT at
    relative accuracy ``1e-14``; ``"auto"`` picks the NUFFT only for large
    ``n * P``.
    """
    freq = np.ascontiguousarray(freq, dtype=np.float64)
    weights = np.ascontiguousarray(np.atleast_2d(weights), dtype=np.float64)
    if method == "auto":
        method = "nufft" if freq.size * n_panels > NUFFT_THRESHOLD else "direct"
    if method == "nufft":
        return _ecf_nufft(freq, weights, n_panels, order, 1e-14)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    out = np.zeros((weights.shape[0], n_panels, order), dtype=np.complex128)
    h = 2.0 * math.pi / n_panels
    t, _ = gl_rule(order)
    _ecf_kernel(freq, weights, -math.pi + 0.5 * h, h, np.ascontiguousarray(t), out)
    return out
