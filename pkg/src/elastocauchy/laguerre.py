"""Scaled Laguerre expansions in time.

A causal signal is represented as ``u(t) = kappa * sum_n u_n L_n(kappa t)``
with coefficients ``u_n = int_0^inf exp(-kappa t) L_n(kappa t) u(t) dt``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


def laguerre_eval(n: int, x):
    """L_n(x) by the upward three-term recurrence."""
    if n < 0:
        raise ValueError("order must be nonnegative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return cur if cur.ndim else float(cur)


def laguerre_table(n_max: int, x) -> np.ndarray:
    """All of L_0 .. L_{n_max-1} at ``x``; shape ``(n_max,) + x.shape``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max,) + x.shape)
    out[0] = 1.0
    if n_max > 1:
        out[1] = 1.0 - x
    for k in range(1, n_max - 1):
        out[k + 1] = ((2 * k + 1 - x) * out[k] - k * out[k - 1]) / (k + 1)
    return out


@dataclass
class LaguerreSeries:
    """Fourier-Laguerre coefficients of a (scalar or vector) time signal."""

    kappa: float
    coeffs: Sequence

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape[0] == 0:
            raise ValueError("at least one coefficient is required")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("coefficients must be finite")

    def __len__(self):
        return self.coeffs.shape[0]


def synthesize(series: LaguerreSeries, t):
    """Evaluate ``kappa * sum_n c_n L_n(kappa t)``.

    For scalar ``t`` the result has the shape of one coefficient; for an
    array of times the time axis comes first.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("time must be nonnegative")
    lag = laguerre_table(len(series), series.kappa * t_arr)
    val = series.kappa * np.tensordot(lag, series.coeffs, axes=(0, 0))
    return float(val) if np.ndim(val) == 0 else val


def _gauss_panels(f, n, kappa, a, b, panels, x, w):
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    vals = np.asarray(f(t), dtype=float)
    if vals.shape != t.shape:
        vals = np.array([f(ti) for ti in t], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("signal produced non-finite samples")
    return float(np.sum(wt * np.exp(-kappa * t) * laguerre_eval(n, kappa * t) * vals))


def transform_numeric(f: Callable, n: int, kappa: float, *, tol: float = 1e-12,
                      panels: int = 400, order: int = 20) -> float:
    """Laguerre coefficient of ``f`` by composite Gauss-Legendre quadrature.

    The half-line is first cut at ``T`` with ``exp(-kappa T) < tol``; further
    segments of the same length are added while they still contribute more
    than ``tol`` relative to the running total (polynomial growth of the
    integrand can defeat the first cut). Meant as an independent check of
    closed-form coefficients, not for production use.
    """
    t_cut = -np.log(tol) / kappa
    x, w = np.polynomial.legendre.leggauss(order)
    total = _gauss_panels(f, n, kappa, 0.0, t_cut, panels, x, w)
    a = t_cut
    for _ in range(20):
        part = _gauss_panels(f, n, kappa, a, a + t_cut, panels // 4, x, w)
        total += part
        a += t_cut
        if abs(part) <= tol * max(1.0, abs(total)):
            break
    return total


def test_signal(t):
    """Boundary pulse used for the data-generation example, (t^2/4) exp(1 - t)."""
    t = np.asarray(t, dtype=float)
    return t * t / 4.0 * np.exp(1.0 - t)


test_signal.__test__ = False


def test_signal_coeffs(N: int, kappa: float) -> np.ndarray:
    """Closed-form Laguerre coefficients of :func:`test_signal`, times ``kappa``.

    ``c_n = (kappa e / 4) (2 + kappa n (kappa (n-1) - 4)) / (kappa + 1)^(n+3)``,
    so that ``test_signal(t) = sum_n c_n L_n(kappa t)``; divide by ``kappa`` to
    get the transform coefficients.
    """
    if N < 1 or not kappa > 0:
        raise ValueError("need N >= 1 and kappa > 0")
    n = np.arange(N, dtype=float)
    return kappa * np.e / 4.0 * (2.0 + kappa * n * (kappa * (n - 1.0) - 4.0)) / (kappa + 1.0) ** (n + 3.0)


test_signal_coeffs.__test__ = False


def test_signal_series(N: int, kappa: float) -> LaguerreSeries:
    """Truncated expansion of :func:`test_signal` ready for :func:`synthesize`."""
    return LaguerreSeries(kappa, test_signal_coeffs(N, kappa) / kappa)


test_signal_series.__test__ = False
