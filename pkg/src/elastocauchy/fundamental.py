"""Fundamental sequence of the Laguerre-transformed Lame system and its traction.

Two evaluation routes are provided and kept independent of each other:

* the *direct* route evaluates K_0, K_1 and the polynomials v_n, w_n and
  forms the ``1/(kappa r)^2`` difference combination literally. It is exact
  in exact arithmetic but loses digits as ``r -> 0``;
* the *split* route expands every scalar function into a Taylor series in
  ``r^2`` (after pulling out ``ln r``). The leading cancellations in the
  difference combination are then done on coefficients, so the log and
  smooth channels are accurate uniformly down to ``r = 0`` and their
  constant terms are the limits at zero.

The solver uses the split route; the direct route is used as a cross-check.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import mpmath as mp
import numpy as np

from .geometry import MaterialParams, matrix_J, matrix_U
from .special_functions import DEFAULT_SERIES, EULER_GAMMA, bessel_k, bessel_k_mp

logger = logging.getLogger(__name__)

_EYE = np.eye(2)


def chi(k: int, n: int) -> int:
    """Weights of the five-term difference combination, k = -2..2."""
    return {
        -2: n * (n - 1),
        -1: -4 * n * n,
        0: 2 * (3 * n * n + 3 * n + 1),
        1: -4 * (n + 1) ** 2,
        2: (n + 1) * (n + 2),
    }[k]


# --------------------------------------------------------------------------
# recurrence coefficients and polynomials
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientTable:
    """Coefficients ``a[n, m]``, ``0 <= m <= n <= n_max``, for one gamma."""

    gamma: float
    n_max: int
    a: np.ndarray

    def __getitem__(self, idx):
        return self.a[idx]


def _build_table(n_max: int, gamma: float) -> np.ndarray:
    a = np.zeros((n_max + 1, n_max + 2))
    for n in range(n_max + 1):
        a[n, 0] = 1.0
        if n >= 1:
            a[n, n] = -gamma / n * a[n - 1, n - 1]
        for m in range(n - 1, 0, -1):
            tail = sum((n - k + 1) * a[k, m - 1] for k in range(m - 1, n))
            a[n, m] = (4 * ((m + 1) // 2) ** 2 * a[n, m + 1] - gamma**2 * tail) / (2 * gamma * m)
    return a[:, : n_max + 1]


_TABLE_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()


def build_coefficient_table(N: int, gamma: float) -> CoefficientTable:
    """Table built to order ``N + 2`` (the difference combination needs n+2)."""
    if N < 0 or not gamma > 0:
        raise ValueError("need N >= 0 and gamma > 0")
    key = (int(N), float(gamma))
    with _CACHE_LOCK:
        tab = _TABLE_CACHE.get(key)
        if tab is None:
            a = _build_table(N + 2, float(gamma))
            a.setflags(write=False)
            tab = CoefficientTable(float(gamma), N + 2, a)
            _TABLE_CACHE[key] = tab
    return tab


def _poly_coeffs(table: CoefficientTable, n: int):
    """Coefficient arrays (in powers of r) of v_n, w_n, v~_n, w~_n."""
    if not 0 <= n <= table.n_max:
        raise IndexError(f"order {n} outside table range 0..{table.n_max}")
    a, g = table.a, table.gamma
    size = n + 3
    v = np.zeros(size)
    w = np.zeros(size)
    vt = np.zeros(size)
    wt = np.zeros(size)
    for m in range(n // 2 + 1):
        v[2 * m] = a[n, 2 * m]
        vt[2 * m] += 2 * m * a[n, 2 * m]
        wt[2 * m + 1] -= g * a[n, 2 * m]
    for m in range((n - 1) // 2 + 1 if n >= 1 else 0):
        w[2 * m + 1] = a[n, 2 * m + 1]
        wt[2 * m + 1] += 2 * m * a[n, 2 * m + 1]
        vt[2 * m + 2] -= g * a[n, 2 * m + 1]
    return v, w, vt, wt


def eval_polys(table: CoefficientTable, n: int, r):
    """Values ``(v_n, w_n, v~_n, w~_n)`` at ``r``."""
    r = np.asarray(r, dtype=float)
    out = tuple(np.polynomial.polynomial.polyval(r, c) for c in _poly_coeffs(table, n))
    if r.ndim == 0:
        out = tuple(float(x) for x in out)
    return out


# --------------------------------------------------------------------------
# split scalars
# --------------------------------------------------------------------------


class SplitScalar(NamedTuple):
    """``full = log_factor * ln r + smooth``."""

    full: object
    log_factor: object
    smooth: object

    def check(self, r, rtol=1e-12):
        rec = np.asarray(self.log_factor) * np.log(r) + np.asarray(self.smooth)
        scale = np.maximum(np.abs(self.full), np.abs(self.log_factor * np.log(r)))
        return bool(np.all(np.abs(rec - self.full) <= rtol * np.maximum(scale, 1e-300)))


class SplitMatrix(NamedTuple):
    """2x2 kernel ``ln r * log_part (+ cot term) + smooth``."""

    log_part: np.ndarray
    smooth: np.ndarray
    cot_coeff: object = None
    full: object = None


# The series coefficients are built in multiprecision: the difference
# combination weights grow like n^2 and the polynomial coefficients
# alternate, so double precision coefficients lose several digits for
# orders beyond ~10. Evaluation is done in extended precision.
_MP_DPS = 50


def _mp_table(n_max: int, gamma):
    zero = mp.mpf(0)
    a = [[zero] * (n_max + 2) for _ in range(n_max + 1)]
    for n in range(n_max + 1):
        a[n][0] = mp.mpf(1)
        if n >= 1:
            a[n][n] = -gamma / n * a[n - 1][n - 1]
        for m in range(n - 1, 0, -1):
            tail = mp.fsum((n - k + 1) * a[k][m - 1] for k in range(m - 1, n))
            a[n][m] = (4 * ((m + 1) // 2) ** 2 * a[n][m + 1] - gamma**2 * tail) / (2 * gamma * m)
    return a


def _mp_bessel_series(gamma, n_terms: int):
    """Coefficients in r of I_0, I_1, S_0, S_1 at gamma*r (index = power of r)."""
    size = 2 * n_terms + 2
    out = {k: [mp.mpf(0)] * size for k in ("I0", "I1", "S0", "S1")}
    half = gamma / 2
    for j in range(n_terms):
        f0 = half ** (2 * j) / mp.factorial(j) ** 2
        f1 = half ** (2 * j + 1) / (mp.factorial(j) * mp.factorial(j + 1))
        out["I0"][2 * j] = f0
        out["S0"][2 * j] = mp.harmonic(j) * f0
        out["I1"][2 * j + 1] = f1
        out["S1"][2 * j + 1] = -(mp.harmonic(j + 1) + mp.harmonic(j)) / 2 * f1
    return out


def _mp_conv(series, poly, size):
    out = [mp.mpf(0)] * size
    for i, p in enumerate(poly):
        if p == 0:
            continue
        for j in range(min(len(series), size - i)):
            if series[j] != 0:
                out[i + j] += p * series[j]
    return out


def _mp_scalar_series(a, gamma, n: int, base, size: int):
    """Coefficient lists (powers of r) of phi_n, varphi_n, phi~_n, varphi~_n."""
    v = [mp.mpf(0)] * (n + 3)
    w = [mp.mpf(0)] * (n + 3)
    vt = [mp.mpf(0)] * (n + 3)
    wt = [mp.mpf(0)] * (n + 3)
    for m in range(n // 2 + 1):
        v[2 * m] = a[n][2 * m]
        vt[2 * m] += 2 * m * a[n][2 * m]
        wt[2 * m + 1] -= gamma * a[n][2 * m]
    for m in range((n - 1) // 2 + 1 if n >= 1 else 0):
        w[2 * m + 1] = a[n][2 * m + 1]
        wt[2 * m + 1] += 2 * m * a[n][2 * m + 1]
        vt[2 * m + 2] -= gamma * a[n][2 * m + 1]
    L = mp.euler + mp.log(gamma / 2)
    sm_even = [-L * x + y for x, y in zip(base["I0"], base["S0"])]
    sm_odd = [L * x + y for x, y in zip(base["I1"], base["S1"])]
    res = []
    for pe, po in ((v, w), (vt, wt)):
        log_f = [-x + y for x, y in zip(_mp_conv(base["I0"], pe, size), _mp_conv(base["I1"], po, size))]
        smooth = [x + y for x, y in zip(_mp_conv(sm_even, pe, size), _mp_conv(sm_odd, po, size))]
        for j in range(len(po) - 1):
            smooth[j] += po[j + 1] / gamma
        res.extend([log_f, smooth])
    return res


def _mp_combine(params_mp, ell: int, n: int, low_s, low_p, pair_s, pair_p):
    """One channel of Phi_{ell,n} (or its tilde) from scalar coefficient lists.

    ``pair_*[k]`` enters the difference sum at order n+k, ``low_*`` the two
    direct terms at order n.
    """
    kap2, cs2, cp2 = params_mp
    size = len(low_s)
    acc = [mp.mpf(0)] * size
    scale = mp.mpf(0)
    for k in range(-2, 3):
        if n + k < 0:
            continue
        c = chi(k, n)
        for j in range(size):
            acc[j] += c * (pair_s[k][j] - pair_p[k][j])
        scale = max(scale, abs(c) * max(abs(pair_s[k][0]), abs(pair_p[k][0]), 1))
    # the r^0 and r^1 coefficients cancel identically
    if abs(acc[0]) > mp.mpf(10) ** (-30) * scale or abs(acc[1]) > mp.mpf(10) ** (-30) * scale:
        raise ArithmeticError(f"difference combination does not vanish at r=0 (n={n}, ell={ell})")
    pre = mp.mpf((-ell) ** (ell - 1)) / kap2
    out = []
    for j in range(size):
        val = (-1) ** (ell - 1) / cp2 * low_p[j] + (ell - 1) / cs2 * low_s[j]
        if j + 2 < size:
            val += pre * acc[j + 2]
        out.append(val)
    return out


class FundamentalSequence:
    """Split-route evaluator of E_n and T_x E_n for orders ``0..n_max``.

    Parameters
    ----------
    params : MaterialParams
    n_max : int
        Largest order that will be requested.
    r_max : float
        Largest distance that will be requested; used to trim the series.
    """

    def __init__(self, params: MaterialParams, n_max: int, r_max: float = 12.0,
                 n_terms: int = DEFAULT_SERIES.max_terms):
        if max(params.gamma_s, params.gamma_p) * r_max > 30.0:
            raise ValueError("kappa * r_max / c_s exceeds the series validity range")
        self.params = params
        self.n_max = n_max
        self.r_max = r_max
        self._coef = {}
        with mp.workdps(_MP_DPS):
            kappa = mp.mpf(params.kappa)
            cs2 = mp.mpf(params.mu) / mp.mpf(params.rho)
            cp2 = (mp.mpf(params.lam) + 2 * mp.mpf(params.mu)) / mp.mpf(params.rho)
            pmp = (kappa**2, cs2, cp2)
            size = 2 * n_terms + n_max + 8
            ser = {}
            for tag, c2 in (("s", cs2), ("p", cp2)):
                g = kappa / mp.sqrt(c2)
                a = _mp_table(n_max + 2, g)
                base = _mp_bessel_series(g, n_terms)
                ser[tag] = [_mp_scalar_series(a, g, m, base, size) for m in range(n_max + 3)]
            for n in range(n_max + 1):
                ks = [k for k in range(-2, 3) if n + k >= 0]
                for ell in (1, 2):
                    for name, idx in (("eta", 0), ("xi", 1)):
                        c = _mp_combine(pmp, ell, n, ser["s"][n][idx], ser["p"][n][idx],
                                        {k: ser["s"][n + k][idx] for k in ks},
                                        {k: ser["p"][n + k][idx] for k in ks})
                        self._coef[name, ell, n] = self._finish(c)
                    # tilde channels: bracket X~(s) - 2X(s) + 2X(p) - X~(p)
                    for name, idx in (("eta_t", 0), ("xi_t", 1)):
                        pair = {tag: {k: [x - 2 * y for x, y in zip(ser[tag][n + k][idx + 2], ser[tag][n + k][idx])]
                                      for k in ks} for tag in ("s", "p")}
                        c = _mp_combine(pmp, ell, n, ser["s"][n][idx + 2], ser["p"][n][idx + 2],
                                        pair["s"], pair["p"])
                        self._coef[name, ell, n] = self._finish(c)

    def _finish(self, c):
        # every channel is even in r: keep the coefficients of r^(2j)
        odd = max(abs(x) for x in c[1::2])
        even = c[0::2]
        if odd > mp.mpf(10) ** (-25) * max(max(abs(x) for x in even), 1):
            raise ArithmeticError("odd Taylor coefficient in an even channel")
        t = mp.mpf(self.r_max) ** 2
        mags = [abs(x) * t**j for j, x in enumerate(even)]
        top = max(mags)
        last = max((j for j, m in enumerate(mags) if m > top * mp.mpf(10) ** (-22)), default=0) + 1
        return np.array([np.longdouble(mp.nstr(x, 25)) for x in even[:last]], dtype=np.longdouble)

    def coefficients(self, name: str, ell: int, n: int) -> np.ndarray:
        """Taylor coefficients in ``r**2`` of eta, xi, eta_t or xi_t."""
        return self._coef[name, ell, n]

    def _horner(self, name, ell, n, r):
        r = np.asarray(r, dtype=float)
        if np.any(r > self.r_max * (1 + 1e-12)):
            raise ValueError(f"distance exceeds r_max={self.r_max}")
        t = r.astype(np.longdouble) ** 2
        c = self._coef[name, ell, n]
        acc = np.full(t.shape, c[-1], dtype=np.longdouble)
        for cj in c[-2::-1]:
            acc = acc * t + cj
        return acc

    def channel(self, name: str, ell: int, n: int, r):
        out = self._horner(name, ell, n, r).astype(float)
        return float(out) if out.ndim == 0 else out

    def value(self, ell: int, n: int, r, tilde: bool = False):
        """Full Phi_{ell,n}(r) (or Phi~) for r > 0.

        ``eta ln r + xi`` is formed in extended precision: for large ``r``
        both channels grow like exp(gamma r) while their combination decays.
        """
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise ValueError("value needs r > 0")
        a, b = ("eta_t", "xi_t") if tilde else ("eta", "xi")
        out = (self._horner(a, ell, n, r) * np.log(r.astype(np.longdouble))
               + self._horner(b, ell, n, r)).astype(float)
        return float(out) if out.ndim == 0 else out

    def at_zero(self, name: str, ell: int, n: int) -> float:
        return float(self._coef[name, ell, n][0])

    def channels(self, n: int, r):
        """Dict of all eight scalar channels at ``r``."""
        return {(name, ell): self.channel(name, ell, n, r)
                for name in ("eta", "xi", "eta_t", "xi_t") for ell in (1, 2)}

    # ---- matrices ------------------------------------------------------

    def single(self, n: int, d):
        """Log and smooth 2x2 parts of E_n at displacements ``d = x - y``."""
        d = np.asarray(d, dtype=float)
        r = np.linalg.norm(d, axis=-1)
        J = matrix_J(d)
        eta1, eta2, xi1, xi2 = (np.asarray(self.channel(c, ell, n, r))
                                for c, ell in (("eta", 1), ("eta", 2), ("xi", 1), ("xi", 2)))
        log_part = eta1[..., None, None] * _EYE + eta2[..., None, None] * J
        smooth = xi1[..., None, None] * _EYE + xi2[..., None, None] * J
        return log_part, smooth

    def traction(self, n: int, d, nu):
        """Log and smooth parts W^{n,1}, W^{n,2} of T_x E_n."""
        d = np.asarray(d, dtype=float)
        r = np.linalg.norm(d, axis=-1)
        r2 = (r * r)[..., None, None]
        J = matrix_J(d)
        zero = np.zeros_like(d)
        U1 = matrix_U(1, d, zero, nu, self.params) / r2
        U2 = matrix_U(2, d, zero, nu, self.params) / r2
        ch = {k: np.asarray(v) for k, v in self.channels(n, r).items()}

        def part(tilde, plain):
            bracket = ch[tilde, 1][..., None, None] * _EYE + ch[tilde, 2][..., None, None] * J
            return U1 @ bracket + ch[plain, 2][..., None, None] * U2

        return part("eta_t", "eta"), part("xi_t", "xi")

    def E(self, n: int, x, y):
        """Full E_n(x, y) for x != y."""
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        r = np.linalg.norm(d, axis=-1)
        p1, p2 = self.value(1, n, r), self.value(2, n, r)
        return np.asarray(p1)[..., None, None] * _EYE + np.asarray(p2)[..., None, None] * matrix_J(d)

    def TE(self, n: int, x, y, nu):
        """Full traction T_x E_n(x, y) for x != y."""
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        r = np.linalg.norm(d, axis=-1)
        r2 = (r * r)[..., None, None]
        zero = np.zeros_like(d)
        U1 = matrix_U(1, d, zero, nu, self.params) / r2
        U2 = matrix_U(2, d, zero, nu, self.params) / r2
        pt1 = np.asarray(self.value(1, n, r, True))[..., None, None]
        pt2 = np.asarray(self.value(2, n, r, True))[..., None, None]
        p2 = np.asarray(self.value(2, n, r))[..., None, None]
        return U1 @ (pt1 * _EYE + pt2 * matrix_J(d)) + p2 * U2


_SEQ_CACHE: dict = {}


def get_sequence(params: MaterialParams, n_max: int, r_max: float = 12.0) -> FundamentalSequence:
    """Process-wide cached :class:`FundamentalSequence`.

    A cached sequence built for a larger ``n_max`` and ``r_max`` is reused.
    """
    with _CACHE_LOCK:
        for (p, n, r), seq in _SEQ_CACHE.items():
            if p == params and n >= n_max and r >= r_max:
                return seq
    default = min(12.0, 30.0 / max(params.gamma_s, params.gamma_p))
    seq = FundamentalSequence(params, n_max, max(r_max, default))
    with _CACHE_LOCK:
        seq = _SEQ_CACHE.setdefault((params, int(n_max), seq.r_max), seq)
    return seq


# --------------------------------------------------------------------------
# direct route (closed-form Bessel evaluation)
# --------------------------------------------------------------------------


def phi(table: CoefficientTable, n: int, r) -> SplitScalar:
    """Phi_n(gamma, r) = K_0 v_n + K_1 w_n with its log/smooth split."""
    return _phi_generic(table, n, r, tilde=False)


def phi_tilde(table: CoefficientTable, n: int, r) -> SplitScalar:
    """Phi~_n(gamma, r) = K_0 v~_n + K_1 w~_n with its log/smooth split."""
    return _phi_generic(table, n, r, tilde=True)


@lru_cache(maxsize=256)
def _split_coeffs(gamma: float, n: int, n_terms: int = DEFAULT_SERIES.max_terms):
    with mp.workdps(_MP_DPS):
        g = mp.mpf(gamma)
        a = _mp_table(n, g)
        base = _mp_bessel_series(g, n_terms)
        res = _mp_scalar_series(a, g, n, base, 2 * n_terms + n + 4)
        return tuple(np.array([float(x) for x in c]) for c in res)


def _phi_generic(table, n, r, tilde):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("r must be nonnegative")
    g = table.gamma
    v, w, vt, wt = eval_polys(table, n, r_arr)
    if tilde:
        v, w = vt, wt
    series = _split_coeffs(g, n)
    lf_c, sm_c = (series[2], series[3]) if tilde else (series[0], series[1])
    log_f = np.polynomial.polynomial.polyval(r_arr, lf_c)
    smooth = np.polynomial.polynomial.polyval(r_arr, sm_c)
    with np.errstate(divide="ignore", invalid="ignore"):
        if np.all(r_arr > 0):
            full = bessel_k(0, g * r_arr) * v + bessel_k(1, g * r_arr) * w
        else:
            full = np.where(r_arr > 0, 0.0, -np.inf)
            pos = r_arr > 0
            if np.any(pos):
                full[pos] = (bessel_k(0, g * r_arr[pos]) * np.asarray(v)[pos]
                             + bessel_k(1, g * r_arr[pos]) * np.asarray(w)[pos])
    if r_arr.ndim == 0:
        return SplitScalar(float(full), float(log_f), float(smooth))
    return SplitScalar(full, log_f, smooth)


def _direct_phi(a, g, m, r, tilde):
    """Phi_m (or Phi~_m) at one ``r`` from multiprecision coefficients ``a``."""
    v = mp.fsum(a[m][2 * j] * r ** (2 * j) for j in range(m // 2 + 1))
    w = mp.fsum(a[m][2 * j + 1] * r ** (2 * j + 1) for j in range((m - 1) // 2 + 1)) if m else mp.mpf(0)
    if tilde:
        v, w = (2 * mp.fsum(j * a[m][2 * j] * r ** (2 * j) for j in range(1, m // 2 + 1))
                - g * mp.fsum(a[m][2 * j + 1] * r ** (2 * j + 2) for j in range((m - 1) // 2 + 1) if m),
                2 * mp.fsum(j * a[m][2 * j + 1] * r ** (2 * j + 1) for j in range(1, (m - 1) // 2 + 1))
                - g * mp.fsum(a[m][2 * j] * r ** (2 * j + 1) for j in range(m // 2 + 1)))
    return bessel_k_mp(0, g * r) * v + bessel_k_mp(1, g * r) * w


def _direct_scalar(params, ell, n, r, tilde, tabs):
    gs, a_s, gp, a_p = tabs
    r = mp.mpf(r)
    acc = mp.mpf(0)
    for k in range(-2, 3):
        if n + k < 0:
            continue
        if tilde:
            term = (_direct_phi(a_s, gs, n + k, r, True) - 2 * _direct_phi(a_s, gs, n + k, r, False)
                    + 2 * _direct_phi(a_p, gp, n + k, r, False) - _direct_phi(a_p, gp, n + k, r, True))
        else:
            term = _direct_phi(a_s, gs, n + k, r, False) - _direct_phi(a_p, gp, n + k, r, False)
        acc += chi(k, n) * term
    kappa = mp.mpf(params.kappa)
    cs2 = mp.mpf(params.mu) / mp.mpf(params.rho)
    cp2 = (mp.mpf(params.lam) + 2 * mp.mpf(params.mu)) / mp.mpf(params.rho)
    out = (-ell) ** (ell - 1) / (kappa**2 * r * r) * acc
    out += (-1) ** (ell - 1) / cp2 * _direct_phi(a_p, gp, n, r, tilde)
    out += (ell - 1) / cs2 * _direct_phi(a_s, gs, n, r, tilde)
    return float(out)


def direct_layer(params: MaterialParams, ell: int, n: int, r, tilde: bool = False):
    """Phi_{ell,n}(r) (or its tilde version) straight from K_0, K_1.

    The difference combination cancels to O(r^2) while its terms are of size
    ln r, so it is evaluated in multiprecision and rounded once.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("direct evaluation needs r > 0")
    with mp.workdps(_MP_DPS):
        kappa = mp.mpf(params.kappa)
        gs = kappa / mp.sqrt(mp.mpf(params.mu) / mp.mpf(params.rho))
        gp = kappa / mp.sqrt((mp.mpf(params.lam) + 2 * mp.mpf(params.mu)) / mp.mpf(params.rho))
        tabs = (gs, _mp_table(n + 2, gs), gp, _mp_table(n + 2, gp))
        out = np.array([_direct_scalar(params, ell, n, v, tilde, tabs) for v in r.ravel()]).reshape(r.shape)
    return float(out) if out.ndim == 0 else out


def _r_max_for(r):
    return max(12.0, float(np.max(r)) * 1.0001) if np.size(r) else 12.0


def layer_coeffs(params: MaterialParams, ell: int, n: int, r):
    """``(Phi_{ell,n}, eta_{ell,n}, xi_{ell,n})`` at ``r > 0``.

    The full value comes from the direct route, the split from the series.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("use limits_at_zero for r = 0")
    seq = get_sequence(params, n, _r_max_for(r))
    res = (direct_layer(params, ell, n, r), seq.channel("eta", ell, n, r), seq.channel("xi", ell, n, r))
    return tuple(float(x) for x in res) if r.ndim == 0 else res


def layer_coeffs_tilde(params: MaterialParams, ell: int, n: int, r):
    """``(Phi~_{ell,n}, eta~_{ell,n}, xi~_{ell,n})`` at ``r > 0``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("use limits_at_zero for r = 0")
    seq = get_sequence(params, n, _r_max_for(r))
    res = (direct_layer(params, ell, n, r, tilde=True),
           seq.channel("eta_t", ell, n, r), seq.channel("xi_t", ell, n, r))
    return tuple(float(x) for x in res) if r.ndim == 0 else res


# --------------------------------------------------------------------------
# limits at r = 0 from the closed-form epsilon coefficients
# --------------------------------------------------------------------------


def _eps(tab: CoefficientTable, n: int):
    """epsilon_{n,0}, epsilon_{n,2} (log part) and their smooth/tilde versions."""
    g = tab.gamma
    a = lambda m: tab.a[n, m] if m <= n else 0.0  # noqa: E731
    L = EULER_GAMMA + np.log(g / 2.0)
    log0 = -a(0)
    log2 = -g * g / 4 * a(0) + g / 2 * a(1) - a(2)
    sm0 = -L * a(0) + a(1) / g
    sm2 = L * log2 + g * g / 4 * a(0) - g / 4 * a(1) + a(3) / g
    smt0 = -a(0)
    smt2 = L * (g * a(1) - 2 * a(2) - g * g / 2 * a(0)) + g * g / 4 * a(0) - a(2) + 2 / g * a(3)
    return log0, log2, sm0, sm2, smt0, smt2


def limits_closed_form(ell: int, n: int, params: MaterialParams):
    """``(eta(0), xi(0), xi~(0))`` from the epsilon coefficient formulas."""
    ts = build_coefficient_table(n, params.gamma_s)
    tp = build_coefficient_table(n, params.gamma_p)
    pre = (-ell) ** (ell - 1) / params.kappa**2
    cp2, cs2 = params.c_p**2, params.c_s**2
    eta = xi = xit = 0.0
    for k in range(-2, 3):
        if n + k < 0:
            continue
        es, ep = _eps(ts, n + k), _eps(tp, n + k)
        c = chi(k, n)
        eta += c * (es[1] - ep[1])
        xi += c * (es[3] - ep[3])
        # the tilde bracket is X~(s) - 2X(s) + 2X(p) - X~(p), hence the minus sign
        xit += c * (es[5] - ep[5] - 2 * (es[3] - ep[3]))
    es, ep = _eps(ts, n), _eps(tp, n)
    eta = pre * eta + (-1) ** (ell - 1) / cp2 * ep[0] + (ell - 1) / cs2 * es[0]
    xi = pre * xi + (-1) ** (ell - 1) / cp2 * ep[2] + (ell - 1) / cs2 * es[2]
    xit = pre * xit + (-1) ** (ell - 1) / cp2 * ep[4] + (ell - 1) / cs2 * es[4]
    return eta, xi, xit


def limits_at_zero(ell: int, n: int, params: MaterialParams, *, check: bool = True):
    """``(eta_{ell,n}(0), xi_{ell,n}(0), xi~_{ell,n}(0))``.

    Values come from the series constant terms. With ``check`` the closed
    epsilon formulas are evaluated as well and any disagreement above 1e-6
    is logged; the series value is returned either way.
    """
    seq = get_sequence(params, n)
    vals = (seq.at_zero("eta", ell, n), seq.at_zero("xi", ell, n), seq.at_zero("xi_t", ell, n))
    if check:
        closed = limits_closed_form(ell, n, params)
        for name, a, b in zip(("eta", "xi", "xi_tilde"), vals, closed):
            if abs(a - b) > 1e-6 * max(1.0, abs(a)):
                logger.warning("closed-form limit %s_{%d,%d}(0)=%.12g disagrees with series value %.12g",
                               name, ell, n, b, a)
    return vals


# --------------------------------------------------------------------------
# matrix kernels
# --------------------------------------------------------------------------


def fundamental_matrix(n: int, x, y, params: MaterialParams) -> SplitMatrix:
    """E_n(x, y) with ``full = ln r * log_part + smooth``."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise ValueError("E_n is singular at x = y")
    seq = get_sequence(params, n, _r_max_for(r))
    lg, sm = seq.single(n, d)
    return SplitMatrix(lg, sm, None, seq.E(n, x, y))


def traction_matrix(n: int, x, y, nu_x, params: MaterialParams) -> SplitMatrix:
    """T_x E_n(x, y) with ``full = ln r * W1 + W2``."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise ValueError("T_x E_n is singular at x = y")
    seq = get_sequence(params, n, _r_max_for(r))
    w1, w2 = seq.traction(n, d, nu_x)
    return SplitMatrix(w1, w2, None, seq.TE(n, x, y, nu_x))
