"""Boundary curves, material constants and the pointwise traction matrices.

Curves are 2*pi-periodic, counterclockwise, and carry analytic first and
second derivatives. The normal returned by :func:`outward_normal` points
away from the region the curve encloses; on the inner curve of an annulus
that is *into* the annulus, which is the orientation the jump relations of
the layer potentials assume.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

TWO_PI = 2.0 * np.pi


class DegenerateCurveError(ValueError):
    pass


@dataclass(frozen=True)
class MaterialParams:
    """Lame constants, density and the Laguerre scale kappa."""

    lam: float
    mu: float
    rho: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.lam + self.mu > 0:
            raise ValueError("lambda + mu must be positive")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")

    @property
    def c_s(self) -> float:
        return float(np.sqrt(self.mu / self.rho))

    @property
    def c_p(self) -> float:
        return float(np.sqrt((self.lam + 2.0 * self.mu) / self.rho))

    @property
    def gamma_s(self) -> float:
        return self.kappa / self.c_s

    @property
    def gamma_p(self) -> float:
        return self.kappa / self.c_p

    def beta(self, n: int) -> float:
        return self.kappa**2 * (n + 1)


@dataclass(frozen=True)
class ParametricCurve:
    """Closed curve ``x(s)``, ``s`` in ``[0, 2 pi)``, with two derivatives.

    The three callables are vectorized: an input of shape ``S`` gives an
    output of shape ``S + (2,)``.
    """

    kind: str
    point: Callable = field(repr=False)
    first_derivative: Callable = field(repr=False)
    second_derivative: Callable = field(repr=False)
    description: Mapping = field(default_factory=dict, compare=False)

    def speed(self, s):
        return np.linalg.norm(self.first_derivative(s), axis=-1)


def _stack(a, b):
    return np.stack(np.broadcast_arrays(a, b), axis=-1)


def circle(center=(0.0, 0.0), radius: float = 1.0) -> ParametricCurve:
    if not radius > 0:
        raise ValueError("circle radius must be positive")
    cx, cy = map(float, center)
    R = float(radius)
    return ParametricCurve(
        "circle",
        lambda s: _stack(cx + R * np.cos(s), cy + R * np.sin(s)),
        lambda s: _stack(-R * np.sin(s), R * np.cos(s)),
        lambda s: _stack(-R * np.cos(s), -R * np.sin(s)),
        {"kind": "circle", "center": [cx, cy], "radius": R},
    )


def kite() -> ParametricCurve:
    """``x(s) = (cos s + 0.4 cos 2s, sin s)``."""
    return ParametricCurve(
        "kite",
        lambda s: _stack(np.cos(s) + 0.4 * np.cos(2 * s), np.sin(s)),
        lambda s: _stack(-np.sin(s) - 0.8 * np.sin(2 * s), np.cos(s)),
        lambda s: _stack(-np.cos(s) - 1.6 * np.cos(2 * s), -np.sin(s)),
        {"kind": "kite"},
    )


def radial(r, dr=None, ddr=None, center=(0.0, 0.0)) -> ParametricCurve:
    """Star-shaped curve ``x(s) = c + r(s) (cos s, sin s)``.

    ``r`` is either a string in the variable ``s`` (differentiated with
    sympy) or a callable, in which case ``dr`` and ``ddr`` must be given.
    """
    desc = {"kind": "radial", "center": list(map(float, center))}
    if isinstance(r, str):
        import sympy as sp

        sym = sp.Symbol("s", real=True)
        expr = sp.sympify(r, locals={"s": sym})
        desc["r"] = r
        r, dr, ddr = (sp.lambdify(sym, e, "numpy")
                      for e in (expr, sp.diff(expr, sym), sp.diff(expr, sym, 2)))
    elif dr is None or ddr is None:
        raise ValueError("callable radial functions need both derivatives")
    cx, cy = map(float, center)

    def f(s):
        return np.asarray(r(s), dtype=float) + 0.0 * np.asarray(s)

    def f1(s):
        return np.asarray(dr(s), dtype=float) + 0.0 * np.asarray(s)

    def f2(s):
        return np.asarray(ddr(s), dtype=float) + 0.0 * np.asarray(s)

    def point(s):
        return _stack(cx + f(s) * np.cos(s), cy + f(s) * np.sin(s))

    def d1(s):
        c, sn = np.cos(s), np.sin(s)
        return _stack(f1(s) * c - f(s) * sn, f1(s) * sn + f(s) * c)

    def d2(s):
        c, sn = np.cos(s), np.sin(s)
        return _stack(f2(s) * c - 2 * f1(s) * sn - f(s) * c,
                      f2(s) * sn + 2 * f1(s) * c - f(s) * sn)

    return ParametricCurve("radial", point, d1, d2, desc)


def make_curve(spec) -> ParametricCurve:
    """Build a curve from a mapping such as ``{"kind": "circle", "radius": 2}``."""
    if isinstance(spec, ParametricCurve):
        return spec
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "circle":
        return circle(spec.get("center", (0.0, 0.0)), spec.get("radius", 1.0))
    if kind == "kite":
        return kite()
    if kind == "radial":
        if "r" not in spec:
            raise ValueError("radial curve needs an expression 'r'")
        return radial(str(spec["r"]), center=spec.get("center", (0.0, 0.0)))
    raise ValueError(f"unknown curve kind {kind!r}")


def outward_normal(curve: ParametricCurve, s):
    """Unit normal ``(x2', -x1') / |x'|``."""
    d = curve.first_derivative(s)
    nrm = np.linalg.norm(d, axis=-1, keepdims=True)
    if np.any(nrm == 0):
        raise DegenerateCurveError("vanishing tangent: degenerate parametrization")
    return np.stack([d[..., 1], -d[..., 0]], axis=-1) / nrm


def matrix_J(d) -> np.ndarray:
    """``d d^T / |d|^2``, vectorized over leading axes of ``d``."""
    d = np.asarray(d, dtype=float)
    r2 = np.sum(d * d, axis=-1)
    if np.any(r2 == 0):
        raise ValueError("J is undefined for the zero vector")
    return d[..., :, None] * d[..., None, :] / r2[..., None, None]


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


_EYE = np.eye(2)


def matrix_U(kind: int, x, y, nu, params: MaterialParams) -> np.ndarray:
    """Traction helper matrices U_1 (kind 1) and U_2 (kind 2).

    ``T_x f(|x-y|) I = f'(r)/r U_1`` and ``T_x J(x-y) = U_2 / r^2``.
    """
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any(np.sum(d * d, axis=-1) == 0):
        raise ValueError("U matrices need x != y")
    nd = np.sum(nu * d, axis=-1)[..., None, None]
    lam, mu = params.lam, params.mu
    if kind == 1:
        return lam * _outer(nu, d) + mu * _outer(d, nu) + mu * nd * _EYE
    if kind == 2:
        return ((lam + 2 * mu) * _outer(nu, d) + mu * _outer(d, nu)
                + mu * nd * (_EYE - 4.0 * matrix_J(d)))
    raise ValueError("kind must be 1 or 2")


@dataclass(frozen=True)
class LocalMatrices:
    J: np.ndarray
    U1_tilde: np.ndarray
    U2_tilde: np.ndarray
    U1_hat: np.ndarray
    U2_hat: np.ndarray


def curve_local_matrices(curve: ParametricCurve, s, params: MaterialParams) -> LocalMatrices:
    """Leading terms of J and U_k/|x-y|^2 as the source point slides onto ``x(s)``."""
    d1 = curve.first_derivative(s)
    d2 = curve.second_derivative(s)
    nu = outward_normal(curve, s)
    lam, mu = params.lam, params.mu
    Jt = matrix_J(d1)
    nd2 = np.sum(nu * d2, axis=-1)[..., None, None]
    return LocalMatrices(
        J=Jt,
        U1_tilde=lam * _outer(nu, d1) + mu * _outer(d1, nu),
        U2_tilde=(lam + 2 * mu) * _outer(nu, d1) + mu * _outer(d1, nu),
        U1_hat=lam * _outer(nu, d2) + mu * _outer(d2, nu) + mu * nd2 * _EYE,
        U2_hat=(lam + 2 * mu) * _outer(nu, d2) + mu * _outer(d2, nu) + mu * nd2 * (_EYE - 4.0 * Jt),
    )


def winding_inside(inner: ParametricCurve, outer: ParametricCurve, n: int = 64) -> bool:
    """True if every sampled point of ``inner`` lies strictly inside ``outer``."""
    s = np.arange(n) * TWO_PI / n
    pts = inner.point(s)
    fine = np.arange(8 * n) * TWO_PI / (8 * n)
    poly = outer.point(fine)
    for p in pts:
        rel = poly - p
        ang = np.arctan2(rel[:, 1], rel[:, 0])
        dang = np.diff(np.concatenate([ang, ang[:1]]))
        dang = (dang + np.pi) % TWO_PI - np.pi
        if abs(np.sum(dang) / TWO_PI) < 0.5:
            return False
        if np.min(np.linalg.norm(rel, axis=1)) < 1e-9:
            return False
    return True
