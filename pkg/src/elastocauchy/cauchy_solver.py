"""Dense solves, the order-recursive driver, reconstruction and error measures."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .laguerre import laguerre_table
from .nystrom import DensitySet, DiscreteSystem, KernelBank, history_term

logger = logging.getLogger(__name__)


class RankDeficiencyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TikhonovConfig:
    """Regularization parameter ``alpha`` (0 means plain least squares).

    ``rank_tol`` is the relative singular value threshold below which an
    unregularized solve is reported as rank deficient.
    """

    alpha: float = 0.0
    rank_tol: float = 1e-13

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError("alpha must be nonnegative")
        if not self.rank_tol >= 0:
            raise ValueError("rank_tol must be nonnegative")


class SVDSolver:
    """Tikhonov solver that factorizes once and reuses the SVD for every right-hand side."""

    def __init__(self, A, cfg: TikhonovConfig = TikhonovConfig()):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] < A.shape[1]:
            raise ValueError("matrix must be square or tall")
        self.A = A
        self.cfg = cfg
        self.U, self.sigma, self.Vt = np.linalg.svd(A, full_matrices=False)
        self.set_alpha(cfg.alpha)

    @property
    def condition_number(self) -> float:
        return float(self.sigma[0] / self.sigma[-1]) if self.sigma[-1] > 0 else np.inf

    def set_alpha(self, alpha: float):
        if not alpha >= 0:
            raise ValueError("alpha must be nonnegative")
        self.alpha = alpha
        sig = self.sigma
        if alpha == 0:
            tiny = sig <= self.cfg.rank_tol * sig[0]
            if np.any(tiny):
                warnings.warn(f"unregularized solve of a numerically rank-deficient matrix "
                              f"({int(tiny.sum())} singular values below tolerance)",
                              RankDeficiencyWarning, stacklevel=2)
            self._filt = np.where(sig > 0, 1.0 / np.where(sig > 0, sig, 1.0), 0.0)
        else:
            self._filt = sig / (sig * sig + alpha)

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        return self.Vt.T @ (self._filt * (self.U.T @ b))


class LUSolver:
    """Plain LU solve for the well-posed direct problems."""

    def __init__(self, A):
        self.A = np.asarray(A, dtype=float)
        self._lu = sla.lu_factor(self.A)

    def solve(self, b) -> np.ndarray:
        return sla.lu_solve(self._lu, np.asarray(b, dtype=float))


def tikhonov_solve(A, b, cfg: TikhonovConfig = TikhonovConfig()):
    """``argmin |Ax - b|^2 + alpha |x|^2`` by SVD."""
    return SVDSolver(A, cfg).solve(b)


def solve_sequence(system: DiscreteSystem, rhs_gen: Callable[[int, DensitySet], np.ndarray], N: int,
                   solver=None) -> DensitySet:
    """Solve ``A psi_n = rhs_gen(n, history)`` for n = 0..N with one factorization.

    ``solver`` defaults to an unregularized SVD solver; pass a
    :class:`TikhonovConfig` or a ready solver object to change that.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    if solver is None or isinstance(solver, TikhonovConfig):
        solver = SVDSolver(system.matrix, solver or TikhonovConfig())
    dens = DensitySet(system.grid)
    for n in range(N + 1):
        b = rhs_gen(n, dens)
        x = solver.solve(b)
        if not np.all(np.isfinite(x)):
            raise FloatingPointError(f"non-finite density at order {n}")
        dens.append(x)
    return dens


# --------------------------------------------------------------------------
# reconstruction
# --------------------------------------------------------------------------


def interior_eval(densities: DensitySet, n: int, x, bank: KernelBank) -> np.ndarray:
    """``u_n(x; M)`` at interior points ``x`` (shape (..., 2)) by the trapezoid rule."""
    x = np.asarray(x, dtype=float)
    if len(densities) < n + 1:
        raise ValueError(f"densities through order {n} are required")
    grid = bank.grid
    pts = x.reshape(-1, 2)
    for ell in (1, 2):
        nodes = bank.nodes[ell]
        dist = np.linalg.norm(pts[:, None, :] - nodes.points[None], axis=-1).min(axis=1)
        if np.any(dist < grid.h * nodes.speed.min()):
            warnings.warn("evaluation point close to the boundary: trapezoid rule is inaccurate",
                          RuntimeWarning, stacklevel=2)
    out = np.zeros_like(pts)
    for m in range(n + 1):
        for ell in (1, 2):
            y = bank.nodes[ell].points
            E = bank.seq.E(n - m, pts[:, None, :], y[None, :, :])
            out += np.einsum("pkab,kb->pa", E, densities.curve(m, ell)) / grid.n_nodes
    return out.reshape(x.shape)


def _trace(bank, kind, densities, n, curve):
    if len(densities) < n + 1:
        raise ValueError(f"densities through order {n} are required")
    rows = ((kind, curve),)
    return (history_term(bank, rows, n, densities, upto=n + 1)).reshape(-1, 2)


def gamma1_trace(densities: DensitySet, n: int, bank: KernelBank) -> np.ndarray:
    """``f_{1,n}`` at the inner-curve nodes, shape (2M, 2)."""
    return _trace(bank, "value", densities, n, 1)


def gamma2_trace(densities: DensitySet, n: int, bank: KernelBank) -> np.ndarray:
    """Value of the layer representation at the outer-curve nodes, shape (2M, 2)."""
    return _trace(bank, "value", densities, n, 2)


def gamma1_traction(densities: DensitySet, n: int, bank: KernelBank, normal: str = "domain") -> np.ndarray:
    """``g_{1,n}`` at the inner-curve nodes, shape (2M, 2).

    The layer formula (with the ``-1/2`` jump) is written for the normal of
    the inner curve that points into the annulus. ``normal="domain"`` reports
    the traction for the outward normal of the annulus, which on the inner
    curve is the opposite vector; ``normal="curve"`` returns the raw value.
    """
    g = _trace(bank, "traction", densities, n, 1)
    if normal == "domain":
        return -g
    if normal == "curve":
        return g
    raise ValueError("normal must be 'domain' or 'curve'")


def gamma2_traction(densities: DensitySet, n: int, bank: KernelBank) -> np.ndarray:
    """Traction of the layer representation on the outer curve (``+1/2`` jump, m <= n)."""
    return _trace(bank, "traction", densities, n, 2)


# --------------------------------------------------------------------------
# noise and errors
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSpec:
    """Relative noise level ``delta`` and seed for ``numpy.random.default_rng`` (PCG64)."""

    delta: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError("delta must be nonnegative")


def add_noise(values, spec: NoiseSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """``g + delta |g|_2 / |v|_2 v`` with i.i.d. standard normal ``v`` per scalar entry."""
    g = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("values must be finite")
    if spec.delta == 0:
        return g.copy()
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    while True:
        v = rng.standard_normal(g.shape)
        nv = np.linalg.norm(v)
        if nv > 0:
            break
    return g + spec.delta * np.linalg.norm(g) / nv * v


def relative_l2(computed, exact) -> float:
    """Discrete relative L2 error on an equispaced periodic grid (trapezoid rule)."""
    c = np.asarray(computed, dtype=float)
    e = np.asarray(exact, dtype=float)
    den = np.sum(e * e)
    if den == 0:
        raise ZeroDivisionError("exact field vanishes identically")
    return float(np.sqrt(np.sum((c - e) ** 2) / den))


def errors_stationary(f_rec, f_exact, g_rec, g_exact, component: int = 0):
    """``(e_f, e_g)`` on the inner curve for one vector component (default the first)."""
    sl = (slice(None), component)
    return (relative_l2(np.asarray(f_rec)[sl], np.asarray(f_exact)[sl]),
            relative_l2(np.asarray(g_rec)[sl], np.asarray(g_exact)[sl]))


def trapezoid_weights(T: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * T:
        raise ValueError("T must be a positive multiple of dt")
    t = np.linspace(0.0, T, n + 1)
    w = np.full(n + 1, dt)
    w[[0, -1]] = dt / 2
    return t, w


def synthesize_nodal(coeffs, kappa: float, t) -> np.ndarray:
    """``kappa sum_n c_n L_n(kappa t)`` for stacked nodal coefficients ``c`` (N, ...)."""
    c = np.asarray(coeffs, dtype=float)
    lag = laguerre_table(c.shape[0], kappa * np.asarray(t, dtype=float))
    return kappa * np.tensordot(lag, c, axes=(0, 0))


def transient_error(computed: Callable, exact: Callable, T: float = 3.0, dt: float = 0.2) -> float:
    """Space-time relative L2 error; ``computed(t)``, ``exact(t)`` return nodal arrays.

    Time integrals use the trapezoid rule with step ``dt`` on ``[0, T]``,
    space integrals the trapezoid rule on the periodic grid.
    """
    t, w = trapezoid_weights(T, dt)
    num = den = 0.0
    for ti, wi in zip(t, w):
        c = np.asarray(computed(ti), dtype=float)
        e = np.asarray(exact(ti), dtype=float)
        num += wi * np.sum((c - e) ** 2)
        den += wi * np.sum(e * e)
    if den == 0:
        raise ZeroDivisionError("exact field vanishes identically")
    return float(np.sqrt(num / den))


__all__ = [
    "RankDeficiencyWarning", "TikhonovConfig", "SVDSolver", "LUSolver", "tikhonov_solve",
    "solve_sequence", "interior_eval", "gamma1_trace", "gamma1_traction", "gamma2_trace", "gamma2_traction",
    "NoiseSpec", "add_noise", "relative_l2", "errors_stationary", "trapezoid_weights",
    "synthesize_nodal", "transient_error",
]
