"""Nystrom discretization of the single-layer boundary integral equations.

Unknowns are the parametrized densities ``psi^l_n(s) = q^l_n(x_l(s)) |x_l'(s)|``
on the inner curve (l = 1) and the outer curve (l = 2), sampled at the
equispaced nodes ``s_k = k pi / M``. The unknown vector is laid out curve
by curve, node-major, with the two vector components of each node adjacent:
index ``(l - 1) * 4M + 2k + c``.

Every discrete operator in the recursion has the same shape: a row block
collocates either the single layer ("value" rows) or its traction plus the
jump term ("traction" rows) on one curve. The order-p operator ``A_p`` uses
the kernels E_p, T E_p; the order-n system is

    A_0 psi_n = data_n - sum_{m < n} A_{n-m} psi_m .
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .fundamental import FundamentalSequence, SplitMatrix, get_sequence
from .geometry import (DegenerateCurveError, MaterialParams, ParametricCurve, curve_local_matrices,
                       make_curve, matrix_J, outward_normal, winding_inside)

_EYE = np.eye(2)
_LOG_4_OVER_E = np.log(4.0) - 1.0


@dataclass(frozen=True)
class NystromGrid:
    """``2M`` equispaced nodes ``s_k = k h`` with ``h = pi / M``."""

    M: int

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 2:
            raise ValueError("M must be an integer >= 2")

    @property
    def n_nodes(self) -> int:
        return 2 * self.M

    @property
    def h(self) -> float:
        return np.pi / self.M

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(2 * self.M) * self.h


def weight_R(k, s, M: int):
    """Weight of node ``k`` in the rule for ``(1/2pi) int ln(4/e sin^2((s-sigma)/2)) f(sigma)``."""
    k = np.asarray(k)
    if np.any((k < 0) | (k >= 2 * M)):
        raise ValueError("node index out of range")
    t = np.asarray(s, dtype=float) - k * np.pi / M
    m = np.arange(1, M)
    acc = 1.0 + 2.0 * np.sum(np.cos(np.multiply.outer(t, m)) / m, axis=-1) + np.cos(M * t) / M
    return -acc / (2 * M)


def weight_S(k, s, M: int):
    """Weight of node ``k`` in the rule for ``(1/2pi) int cot((sigma-s)/2) f(sigma)``.

    Zero when ``s`` coincides with the node.
    """
    k = np.asarray(k)
    if np.any((k < 0) | (k >= 2 * M)):
        raise ValueError("node index out of range")
    s = np.asarray(s, dtype=float)
    half = (k * np.pi / M - s) / 2
    sn = np.sin(half)
    on_node = np.abs(sn) < 1e-14
    with np.errstate(divide="ignore", invalid="ignore"):
        w = (1.0 - np.where(k % 2, -1.0, 1.0) * np.cos(M * s)) * np.cos(half) / sn / (2 * M)
    w = np.where(on_node, 0.0, w)
    return float(w) if w.ndim == 0 else w


@lru_cache(maxsize=16)
def weight_matrices(M: int):
    """``R[i, j] = R_j(s_i)`` and ``S[i, j] = S_j(s_i)`` on the grid nodes."""
    grid = NystromGrid(M)
    idx = np.arange(grid.n_nodes)
    s = grid.nodes
    R = weight_R(idx[None, :], s[:, None], M)
    S = weight_S(idx[None, :], s[:, None], M)
    R.setflags(write=False)
    S.setflags(write=False)
    return R, S


@dataclass(frozen=True)
class Geometry:
    """Annular domain between ``inner`` (curve 1) and ``outer`` (curve 2)."""

    inner: ParametricCurve
    outer: ParametricCurve

    @classmethod
    def from_specs(cls, inner, outer) -> "Geometry":
        return cls(make_curve(inner), make_curve(outer))

    def curve(self, ell: int) -> ParametricCurve:
        if ell == 1:
            return self.inner
        if ell == 2:
            return self.outer
        raise ValueError("curve index must be 1 or 2")

    def validate(self, n: int = 64):
        s = np.arange(n) * 2 * np.pi / n
        for ell in (1, 2):
            if np.any(self.curve(ell).speed(s) == 0):
                raise DegenerateCurveError(f"curve {ell} has a vanishing tangent")
        if not winding_inside(self.inner, self.outer, n):
            raise ValueError("inner curve is not strictly inside the outer curve")


@dataclass(frozen=True)
class CurveNodes:
    """Point data of one curve at the grid nodes."""

    points: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    speed: np.ndarray
    normal: np.ndarray


def curve_nodes(curve: ParametricCurve, grid: NystromGrid) -> CurveNodes:
    s = grid.nodes
    d1 = curve.first_derivative(s)
    return CurveNodes(curve.point(s), d1, curve.second_derivative(s),
                      np.linalg.norm(d1, axis=-1), outward_normal(curve, s))


# --------------------------------------------------------------------------
# parametrized kernels
# --------------------------------------------------------------------------


def _log_sin(s, sigma):
    return _LOG_4_OVER_E + np.log(np.sin((s - sigma) / 2) ** 2)


def _diag_mask(s, sigma):
    return np.abs(np.sin((s - sigma) / 2)) < 1e-13


def _seq_for(params, n, seq):
    return seq if seq is not None else get_sequence(params, n)


def kernel_H(ell: int, k_curve: int, n: int, s, sigma, geometry: Geometry, params: MaterialParams,
             seq: FundamentalSequence | None = None) -> SplitMatrix:
    """``E_n(x_k(s), x_l(sigma))``, split on the self curve.

    For ``ell == k_curve`` the result satisfies
    ``E_n = ln(4/e sin^2((s-sigma)/2)) log_part + smooth`` off the diagonal, and
    ``log_part``, ``smooth`` hold the limit values on it. For distinct curves
    only ``smooth`` (the plain kernel) is meaningful.
    """
    seq = _seq_for(params, n, seq)
    s, sigma = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(sigma, dtype=float))
    xk = geometry.curve(k_curve).point(s)
    xl = geometry.curve(ell).point(sigma)
    if ell != k_curve:
        full = seq.E(n, xk, xl)
        return SplitMatrix(np.zeros_like(full), full, None, full)
    diag = _diag_mask(s, sigma)
    sig = np.where(diag, s + 1.0, sigma)
    d = np.where(diag[..., None], 1.0, xk - xl)
    r = np.linalg.norm(d, axis=-1)
    J = matrix_J(d)
    eta1, eta2, xi1, xi2 = (np.asarray(seq.channel(c, ell_, n, r))
                            for c, ell_ in (("eta", 1), ("eta", 2), ("xi", 1), ("xi", 2)))
    # ln r^2 - ln(4/e sin^2): E_n = ln r * eta + xi rewritten around the periodic log
    lg = np.log(r * r) - _log_sin(s, sig)
    h1 = 0.5 * (eta1[..., None, None] * _EYE + eta2[..., None, None] * J)
    h2 = lg[..., None, None] * h1 + xi1[..., None, None] * _EYE + xi2[..., None, None] * J
    if np.any(diag):
        curve = geometry.curve(ell)
        sd = s[diag]
        d1 = curve.first_derivative(sd)
        sp2 = np.sum(d1 * d1, axis=-1)
        e1, x1, x2 = seq.at_zero("eta", 1, n), seq.at_zero("xi", 1, n), seq.at_zero("xi", 2, n)
        h1[diag] = 0.5 * e1 * _EYE
        h2[diag] = ((0.5 * np.log(sp2 * np.e) * e1 + x1)[..., None, None] * _EYE
                    + x2 * matrix_J(d1))
    full = np.where(diag[..., None, None], np.nan, seq.E(n, xk, xk - d))
    return SplitMatrix(h1, h2, None, full)


def _cot_coeff(curve: ParametricCurve, s, n, seq, params):
    loc = curve_local_matrices(curve, s, params)
    sp2 = np.sum(curve.first_derivative(s) ** 2, axis=-1)[..., None, None]
    xt1, x2 = seq.at_zero("xi_t", 1, n), seq.at_zero("xi", 2, n)
    return -(xt1 * loc.U1_tilde + x2 * loc.U2_tilde) / (2 * sp2), loc, sp2


def kernel_Q(ell: int, k_curve: int, n: int, s, sigma, geometry: Geometry, params: MaterialParams,
             seq: FundamentalSequence | None = None) -> SplitMatrix:
    """``T_x E_n(x_k(s), x_l(sigma))`` with the normal of curve ``k`` at ``x``.

    On the self curve ``Q = ln(4/e sin^2) log_part + cot((sigma-s)/2) cot_coeff + smooth``.
    """
    seq = _seq_for(params, n, seq)
    s, sigma = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(sigma, dtype=float))
    ck = geometry.curve(k_curve)
    xk = ck.point(s)
    nu = outward_normal(ck, s)
    xl = geometry.curve(ell).point(sigma)
    if ell != k_curve:
        full = seq.TE(n, xk, xl, nu)
        return SplitMatrix(np.zeros_like(full), full, None, full)
    diag = _diag_mask(s, sigma)
    sig = np.where(diag, s + 1.0, sigma)
    d = np.where(diag[..., None], 1.0, xk - xl)
    r = np.linalg.norm(d, axis=-1)
    w1, w2 = seq.traction(n, d, nu)
    q2, loc, sp2 = _cot_coeff(ck, s, n, seq, params)
    lg = np.log(r * r) - _log_sin(s, sig)
    cot = np.cos((sig - s) / 2) / np.sin((sig - s) / 2)
    q1 = 0.5 * w1
    q3 = 0.5 * lg[..., None, None] * w1 + w2 - cot[..., None, None] * q2
    if np.any(diag):
        xt1, x2 = seq.at_zero("xi_t", 1, n), seq.at_zero("xi", 2, n)
        d1 = ck.first_derivative(s)
        d2 = ck.second_derivative(s)
        curv = (2 * np.sum(d1 * d2, axis=-1))[..., None, None] / sp2
        q3_diag = -(xt1 * (loc.U1_hat - curv * loc.U1_tilde)
                    + x2 * (loc.U2_hat - curv * loc.U2_tilde)) / (2 * sp2)
        q1 = np.where(diag[..., None, None], 0.0, q1)
        q3 = np.where(diag[..., None, None], q3_diag, q3)
    full = np.where(diag[..., None, None], np.nan, seq.TE(n, xk, xk - d, nu))
    return SplitMatrix(q1, q3, q2, full)


# --------------------------------------------------------------------------
# discrete operators
# --------------------------------------------------------------------------


def _to_block(k4: np.ndarray) -> np.ndarray:
    """(i, j, a, b) kernel array -> (2i + a, 2j + b) matrix."""
    n_i, n_j = k4.shape[:2]
    return k4.transpose(0, 2, 1, 3).reshape(2 * n_i, 2 * n_j)


@dataclass(frozen=True)
class DiscreteSystem:
    """Collocated operator ``A_0`` for one problem type.

    ``rows`` lists the row blocks as ``(kind, curve)`` pairs, kind in
    ``{"value", "traction"}``.
    """

    matrix: np.ndarray
    rows: tuple
    grid: NystromGrid
    kind: str = ""

    @property
    def shape(self):
        return self.matrix.shape


class KernelBank:
    """Cache of order-p discrete blocks for one geometry, grid and material."""

    def __init__(self, geometry: Geometry, grid: NystromGrid, params: MaterialParams, n_max: int):
        self.geometry = geometry
        self.grid = grid
        self.params = params
        self.n_max = n_max
        self.nodes = {ell: curve_nodes(geometry.curve(ell), grid) for ell in (1, 2)}
        span = max(np.max(np.linalg.norm(self.nodes[a].points[:, None] - self.nodes[b].points[None], axis=-1))
                   for a in (1, 2) for b in (1, 2))
        self.seq = get_sequence(params, n_max, span * 1.01)
        self.R, self.S = weight_matrices(grid.M)
        self._blocks: dict = {}

    def _check(self, p):
        if not 0 <= p <= self.n_max:
            raise ValueError(f"order {p} outside 0..{self.n_max}")

    def block(self, kind: str, p: int, ell: int, k: int) -> np.ndarray:
        """Order-p contribution of the curve-``ell`` unknowns to the rows on curve ``k``.

        Traction self-blocks include the jump term ``+-psi / (2|x'|)``
        (plus on the outer curve, minus on the inner one).
        """
        self._check(p)
        key = (kind, p, ell, k)
        if key in self._blocks:
            return self._blocks[key]
        s = self.grid.nodes
        si, sj = s[:, None], s[None, :]
        w = 1.0 / self.grid.n_nodes
        if kind == "value":
            ker = kernel_H(ell, k, p, si, sj, self.geometry, self.params, self.seq)
            if ell == k:
                k4 = self.R[..., None, None] * ker.log_part + w * ker.smooth
            else:
                k4 = w * ker.smooth
        elif kind == "traction":
            ker = kernel_Q(ell, k, p, si, sj, self.geometry, self.params, self.seq)
            if ell == k:
                k4 = (self.R[..., None, None] * ker.log_part + self.S[..., None, None] * ker.cot_coeff
                      + w * ker.smooth)
            else:
                k4 = w * ker.smooth
        else:
            raise ValueError(f"unknown row kind {kind!r}")
        mat = _to_block(k4)
        if kind == "traction" and ell == k:
            sign = 1.0 if k == 2 else -1.0
            mat = mat + np.diag(np.repeat(sign / (2 * self.nodes[k].speed), 2))
        mat.setflags(write=False)
        self._blocks[key] = mat
        return mat

    def rows(self, kind: str, p: int, k: int) -> np.ndarray:
        """Full row block ``[curve 1 | curve 2]`` for rows of ``kind`` on curve ``k``."""
        return np.hstack([self.block(kind, p, 1, k), self.block(kind, p, 2, k)])

    def operator(self, p: int, rows: Sequence) -> np.ndarray:
        return np.vstack([self.rows(kind, p, k) for kind, k in rows])


def _bank(geometry, grid, params, bank, n_max=0):
    if bank is None:
        return KernelBank(geometry, grid, params, n_max)
    if bank.geometry is not geometry and bank.geometry != geometry:
        raise ValueError("kernel bank was built for a different geometry")
    return bank


CAUCHY_ROWS = (("value", 2), ("traction", 2))
NEUMANN_ROWS = (("traction", 1), ("traction", 2))
DIRICHLET_ROWS = (("value", 1), ("value", 2))


def assemble(rows, geometry: Geometry, grid: NystromGrid, params: MaterialParams,
             bank: KernelBank | None = None, kind: str = "") -> DiscreteSystem:
    bank = _bank(geometry, grid, params, bank)
    mat = bank.operator(0, rows)
    if not np.all(np.isfinite(mat)):
        raise FloatingPointError("non-finite entries in the assembled matrix")
    return DiscreteSystem(mat, tuple(rows), grid, kind)


def assemble_cauchy(geometry, grid, params, bank=None) -> DiscreteSystem:
    """Value and traction rows on the outer curve (the ill-posed system)."""
    return assemble(CAUCHY_ROWS, geometry, grid, params, bank, "cauchy")


def assemble_direct_neumann(geometry, grid, params, bank=None) -> DiscreteSystem:
    """Traction rows on both curves (well-posed verification problem)."""
    return assemble(NEUMANN_ROWS, geometry, grid, params, bank, "neumann")


def assemble_direct_dirichlet(geometry, grid, params, bank=None) -> DiscreteSystem:
    """Value rows on both curves (used to synthesize Cauchy data)."""
    return assemble(DIRICHLET_ROWS, geometry, grid, params, bank, "dirichlet")


# --------------------------------------------------------------------------
# densities and right-hand sides
# --------------------------------------------------------------------------


@dataclass
class DensitySet:
    """Densities ``psi_n`` for n = 0, 1, ... as flat vectors of length 8M."""

    grid: NystromGrid
    psi: list = field(default_factory=list)

    def __len__(self):
        return len(self.psi)

    def append(self, vec):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (8 * self.grid.M,):
            raise ValueError(f"density vector must have length {8 * self.grid.M}")
        self.psi.append(vec)

    def curve(self, n: int, ell: int) -> np.ndarray:
        """Nodal 2-vectors ``psi^ell_n(s_k)``, shape (2M, 2)."""
        size = 4 * self.grid.M
        return self.psi[n][(ell - 1) * size: ell * size].reshape(-1, 2)

    def scaled(self, c: float) -> "DensitySet":
        return DensitySet(self.grid, [c * p for p in self.psi])


def history_term(bank: KernelBank, rows, n: int, densities: DensitySet, upto: int | None = None):
    """``sum_{m < upto} A_{n-m} psi_m`` for the given row set (``upto`` defaults to n)."""
    upto = n if upto is None else upto
    if len(densities) < upto:
        raise ValueError(f"densities for orders 0..{upto - 1} are required, got {len(densities)}")
    acc = np.zeros(len(rows) * 4 * bank.grid.M)
    for m in range(upto):
        acc += bank.operator(n - m, rows) @ densities.psi[m]
    return acc


def _flat(*blocks):
    return np.concatenate([np.asarray(b, dtype=float).reshape(-1) for b in blocks])


def cauchy_rhs(n: int, f2, g2, densities: DensitySet, bank: KernelBank) -> np.ndarray:
    """Right-hand side of order n for the Cauchy system; ``f2``, ``g2`` are (2M, 2) nodal data."""
    return _flat(f2, g2) - history_term(bank, CAUCHY_ROWS, n, densities)


def direct_rhs(n: int, g1, g2, densities: DensitySet, bank: KernelBank) -> np.ndarray:
    """Right-hand side of order n for the Neumann system."""
    return _flat(g1, g2) - history_term(bank, NEUMANN_ROWS, n, densities)


def dirichlet_rhs(n: int, f1, f2, densities: DensitySet, bank: KernelBank) -> np.ndarray:
    """Right-hand side of order n for the Dirichlet system."""
    return _flat(f1, f2) - history_term(bank, DIRICHLET_ROWS, n, densities)
