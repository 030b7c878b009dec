"""Modified Bessel functions of order 0 and 1 from their power series.

K_0 and K_1 are written as

    K_0(z) = -(ln(z/2) + C) I_0(z) + S_0(z)
    K_1(z) = 1/z + (ln(z/2) + C) I_1(z) + S_1(z)

so the logarithmic part and the entire part can be used separately by the
kernel splittings. Only real arguments in ``[0, Z_MAX]`` are supported and no
asymptotic branch is provided on purpose.

The two parts of K cancel to about exp(-2z) of their size, so ``bessel_k``
sums the same series in mpmath with enough extra digits to return a full
double-precision result.

All evaluators accept scalars or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp
import numpy as np

EULER_GAMMA = 0.57721566490153286061
EULER_GAMMA_MP = "0.57721566490153286060651209008240243104215933593992"
Z_MAX = 30.0


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation control for the power series."""

    max_terms: int = 60
    rel_tol: float = 1e-16

    def __post_init__(self):
        if self.max_terms < 10:
            raise ValueError("max_terms must be at least 10")
        if not 0.0 < self.rel_tol < 1e-8:
            raise ValueError("rel_tol must lie in (0, 1e-8)")


DEFAULT_SERIES = SeriesConfig()


@lru_cache(maxsize=None)
def harmonic(n: int) -> float:
    """Partial harmonic sum psi(n) = 1 + 1/2 + ... + 1/n, psi(0) = 0."""
    if n < 0:
        raise ValueError("harmonic(n) needs n >= 0")
    if n == 0:
        return 0.0
    return harmonic(n - 1) + 1.0 / n


def _check_arg(z, allow_zero=True):
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)):
        raise ValueError("non-finite argument")
    if allow_zero:
        if np.any(z < 0):
            raise ValueError("argument must be nonnegative")
    elif np.any(z <= 0):
        raise ValueError("argument must be positive")
    if np.any(z > Z_MAX):
        raise ValueError(f"argument exceeds the series validity range z <= {Z_MAX}")
    return z


def _sum_series(z, order, kind, cfg):
    # term_j = coef_j * (z/2)^(2j + order); coefficient ratios are built up
    # incrementally to avoid factorial overflow.
    half = z / 2.0
    q = half * half
    base = half if order == 1 else np.ones_like(z)
    # j = 0 term
    fact = 1.0 if order == 0 else 1.0  # 1/(j!(j+order)!) at j = 0
    if kind == "i":
        total = fact * base
    elif order == 0:
        total = np.zeros_like(z)
    else:
        total = -0.5 * harmonic(1) * base
    power = base.copy()
    for j in range(1, cfg.max_terms):
        fact /= j * (j + order)
        power = power * q
        if kind == "i":
            weight = fact
        elif order == 0:
            weight = harmonic(j) * fact
        else:
            weight = -0.5 * (harmonic(j + 1) + harmonic(j)) * fact
        term = weight * power
        total = total + term
        if np.all(np.abs(term) <= cfg.rel_tol * np.abs(total)):
            break
    return total


def _out(z, value):
    return float(value) if np.ndim(z) == 0 else value


def bessel_i(order: int, z, cfg: SeriesConfig = DEFAULT_SERIES):
    """I_0(z) or I_1(z) by direct summation of the power series."""
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    zz = _check_arg(z)
    return _out(z, _sum_series(zz, order, "i", cfg))


def series_s(order: int, z, cfg: SeriesConfig = DEFAULT_SERIES):
    """The entire remainders S_0, S_1 in the K_0/K_1 series."""
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    zz = _check_arg(z)
    return _out(z, _sum_series(zz, order, "s", cfg))


def bessel_k_mp(order: int, z, extra_dps: int = 20, cfg: SeriesConfig = DEFAULT_SERIES):
    """K_0 or K_1 from the same series as an mpmath number.

    The working precision is ``extra_dps`` digits plus what the cancellation
    between the two parts costs; the result is returned at that precision.
    """
    zf = float(z)
    dps = extra_dps + int(np.ceil(2.0 * zf / np.log(10.0)))
    with mp.workdps(max(dps, mp.mp.dps)):
        zz = mp.mpf(z)
        q = (zz / 2) ** 2
        lg = mp.log(zz / 2) + mp.mpf(EULER_GAMMA_MP)
        eps = mp.mpf(10) ** (-dps)
        power = mp.mpf(1) if order == 0 else zz / 2
        fact = mp.mpf(1)
        h = mp.mpf(0)
        i_sum = power
        s_sum = mp.mpf(0) if order == 0 else -power / 2
        for j in range(1, max(cfg.max_terms, 4 * int(zf) + 40)):
            fact /= j * (j + order)
            power *= q
            h += mp.mpf(1) / j
            term = fact * power
            i_sum += term
            s_sum += h * term if order == 0 else -(h + 1 / mp.mpf(j + 1) + h) * term / 2
            if abs(term) * (1 + h) <= eps * abs(i_sum):
                break
        return -lg * i_sum + s_sum if order == 0 else 1 / zz + lg * i_sum + s_sum


def bessel_k(order: int, z, cfg: SeriesConfig = DEFAULT_SERIES):
    """Macdonald function K_0(z) or K_1(z) for 0 < z <= Z_MAX."""
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    zz = _check_arg(z, allow_zero=False)
    flat = np.array([float(bessel_k_mp(order, float(v), cfg=cfg)) for v in zz.ravel()])
    return _out(z, flat.reshape(zz.shape))


def power_coefficients(kind: str, gamma: float, n_terms: int = DEFAULT_SERIES.max_terms) -> np.ndarray:
    """Taylor coefficients in ``r`` of I_0, I_1, S_0 or S_1 evaluated at ``gamma*r``.

    Returns ``c`` with ``f(gamma*r) = sum_j c[j] r**j``; the array has length
    ``2*n_terms + 1``.
    """
    c = np.zeros(2 * n_terms + 1)
    half = gamma / 2.0
    fact = 1.0
    for j in range(n_terms):
        if j > 0:
            fact /= j * j if kind in ("I0", "S0") else j * (j + 1)
        if kind == "I0":
            c[2 * j] = fact * half ** (2 * j)
        elif kind == "S0":
            c[2 * j] = harmonic(j) * fact * half ** (2 * j)
        elif kind == "I1":
            c[2 * j + 1] = fact * half ** (2 * j + 1)
        elif kind == "S1":
            c[2 * j + 1] = -0.5 * (harmonic(j + 1) + harmonic(j)) * fact * half ** (2 * j + 1)
        else:
            raise ValueError(f"unknown series {kind!r}")
    return c
