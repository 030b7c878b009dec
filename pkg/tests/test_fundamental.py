from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastocauchy.fundamental import (FundamentalSequence, build_coefficient_table, chi, direct_layer,
                                      eval_polys, fundamental_matrix, get_sequence, layer_coeffs,
                                      layer_coeffs_tilde, limits_at_zero, limits_closed_form, phi, phi_tilde,
                                      traction_matrix)
from elastocauchy.geometry import MaterialParams, matrix_J
from elastocauchy.special_functions import bessel_k

# c_s = 1, c_p = 2, so gamma_s = 1 and gamma_p = 1/2 are exact rationals
P = MaterialParams(2.0, 1.0, 1.0, 1.0)


# ---- exact oracles ------------------------------------------------------


def fraction_table(n_max, gamma):
    g = Fraction(gamma)
    a = [[Fraction(0)] * (n_max + 2) for _ in range(n_max + 1)]
    for n in range(n_max + 1):
        a[n][0] = Fraction(1)
        if n:
            a[n][n] = -g / n * a[n - 1][n - 1]
        for m in range(n - 1, 0, -1):
            tail = sum((n - k + 1) * a[k][m - 1] for k in range(m - 1, n))
            a[n][m] = (4 * ((m + 1) // 2) ** 2 * a[n][m + 1] - g * g * tail) / (2 * g * m)
    return a


def mp_polys(a, n, g, r):
    v = sum(a[n][2 * m] * r ** (2 * m) for m in range(n // 2 + 1))
    w = sum(a[n][2 * m + 1] * r ** (2 * m + 1) for m in range((n - 1) // 2 + 1)) if n else 0
    vt = (2 * sum(m * a[n][2 * m] * r ** (2 * m) for m in range(1, n // 2 + 1))
          - g * sum(a[n][2 * m + 1] * r ** (2 * m + 2) for m in range((n - 1) // 2 + 1) if n))
    wt = (2 * sum(m * a[n][2 * m + 1] * r ** (2 * m + 1) for m in range(1, (n - 1) // 2 + 1))
          - g * sum(a[n][2 * m] * r ** (2 * m + 1) for m in range(n // 2 + 1)))
    return v, w, vt, wt


def mp_layer(ell, n, r, tilde=False, dps=60):
    """Phi_{ell,n}(r) for P from exact coefficients and mpmath Bessel functions."""
    with mp.workdps(dps):
        r = mp.mpf(r)
        gs, gp = mp.mpf(1), mp.mpf(1) / 2
        tabs = {g: [[mp.mpf(x.numerator) / x.denominator for x in row] for row in fraction_table(n + 2, f)]
                for g, f in ((gs, 1), (gp, Fraction(1, 2)))}

        def Phi(g, m, til):
            v, w, vt, wt = mp_polys(tabs[g], m, g, r)
            if til:
                v, w = vt, wt
            return mp.besselk(0, g * r) * v + mp.besselk(1, g * r) * w

        acc = 0
        for k in range(-2, 3):
            if n + k < 0:
                continue
            if tilde:
                term = Phi(gs, n + k, True) - 2 * Phi(gs, n + k, False) + 2 * Phi(gp, n + k, False) - Phi(gp, n + k, True)
            else:
                term = Phi(gs, n + k, False) - Phi(gp, n + k, False)
            acc += chi(k, n) * term
        cs2, cp2 = mp.mpf(1), mp.mpf(4)
        out = (-ell) ** (ell - 1) / r**2 * acc + (-1) ** (ell - 1) / cp2 * Phi(gp, n, tilde) + (ell - 1) / cs2 * Phi(gs, n, tilde)
        return float(out)


# ---- coefficient table ------------------------------------------------------


def test_table_examples():
    t = build_coefficient_table(0, 2.0)
    assert t.n_max == 2
    assert t[1, 1] == pytest.approx(-2.0)
    assert t[2, 2] == pytest.approx(2.0)
    assert t[2, 1] == pytest.approx(-3.0)
    assert np.all(build_coefficient_table(10, 0.7).a[:, 0] == 1.0)
    with pytest.raises(ValueError):
        build_coefficient_table(-1, 1.0)
    with pytest.raises(ValueError):
        build_coefficient_table(3, 0.0)


@pytest.mark.parametrize("gamma", [Fraction(1, 2), Fraction(1), Fraction(2)])
def test_table_matches_exact_rationals(gamma):
    exact = fraction_table(22, gamma)
    tab = build_coefficient_table(20, float(gamma))
    for n in range(23):
        for m in range(n + 1):
            assert tab[n, m] == pytest.approx(float(exact[n][m]), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
def test_recurrence_resubstitution(gamma):
    a = build_coefficient_table(20, gamma).a
    for n in range(1, 23):
        assert a[n, n] == pytest.approx(-gamma / n * a[n - 1, n - 1], rel=1e-13)
        for m in range(1, n):
            tail = sum((n - k + 1) * a[k, m - 1] for k in range(m - 1, n))
            lhs = 2 * gamma * m * a[n, m]
            rhs = 4 * ((m + 1) // 2) ** 2 * a[n, m + 1] - gamma**2 * tail
            scale = max(abs(lhs), abs(4 * ((m + 1) // 2) ** 2 * a[n, m + 1]), abs(gamma**2 * tail))
            assert abs(lhs - rhs) <= 1e-13 * scale


def test_chi_vanishing():
    assert chi(-2, 0) == chi(-1, 0) == chi(-2, 1) == 0
    assert chi(0, 0) == 2 and chi(2, 0) == 2 and chi(1, 0) == -4
    with pytest.raises(KeyError):
        chi(3, 1)


# ---- polynomials and scalar functions ---------------------------------------


def test_poly_examples():
    for gamma in (0.5, 2.0):
        tab = build_coefficient_table(2, gamma)
        v, w, vt, wt = eval_polys(tab, 0, 0.8)
        assert (v, w, vt) == (1.0, 0.0, 0.0)
        assert wt == pytest.approx(-gamma * 0.8)
    v, *_ = eval_polys(build_coefficient_table(2, 2.0), 2, 0.5)
    assert v == pytest.approx(1.5)
    with pytest.raises(IndexError):
        eval_polys(build_coefficient_table(0, 1.0), 5, 1.0)


def test_polys_against_exact():
    a = fraction_table(8, Fraction(1, 2))
    tab = build_coefficient_table(6, 0.5)
    r = Fraction(7, 10)
    for n in range(9):
        ref = [float(x) for x in mp_polys(a, n, Fraction(1, 2), r)]
        assert np.allclose(eval_polys(tab, n, 0.7), ref, rtol=1e-13, atol=1e-15)


def test_phi_examples():
    tab = build_coefficient_table(4, 1.0)
    val = phi(tab, 0, 1.0)
    assert val.full == pytest.approx(0.4210244382, abs=1e-10)
    assert phi(tab, 0, 1e-12).log_factor == pytest.approx(-1.0, abs=1e-12)
    assert phi(tab, 0, 0.3).check(0.3, 1e-12)
    assert phi_tilde(tab, 0, 0.6).full == pytest.approx(-0.6 * bessel_k(1, 0.6), rel=1e-14)
    assert phi_tilde(tab, 0, 1e-9).smooth == pytest.approx(-1.0, abs=1e-8)
    with pytest.raises(ValueError):
        phi(tab, 0, -0.1)


def test_phi_tilde_is_radial_derivative():
    tab = build_coefficient_table(6, 1.0)
    h, r = 1e-5, 0.4
    for n in range(5):
        d = (phi(tab, n, r + h).full - phi(tab, n, r - h).full) / (2 * h)
        assert r * d == pytest.approx(phi_tilde(tab, n, r).full, abs=1e-8)


def test_phi_at_zero_returns_log_split():
    out = phi(build_coefficient_table(2, 1.0), 1, np.array([0.0, 0.5]))
    assert out.full[0] == -np.inf
    assert np.isfinite(out.log_factor).all() and np.isfinite(out.smooth).all()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10), st.floats(1e-2, 3.0), st.sampled_from([0.5, 1.0, 0.7]))
def test_split_identities_scalar(n, r, gamma):
    tab = build_coefficient_table(10, gamma)
    for f in (phi, phi_tilde):
        s = f(tab, n, r)
        assert s.check(r, 1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10), st.floats(1e-2, 3.0), st.sampled_from([1, 2]))
def test_split_identities_layer(n, r, ell):
    for fn in (layer_coeffs, layer_coeffs_tilde):
        full, eta, xi = fn(P, ell, n, r)
        rec = eta * np.log(r) + xi
        assert abs(rec - full) <= 1e-9 * max(abs(full), abs(eta * np.log(r)))


# ---- layer coefficients ------------------------------------------------------


@pytest.mark.parametrize("ell", [1, 2])
@pytest.mark.parametrize("n", [0, 1, 3, 7, 12])
def test_layer_against_mpmath(ell, n):
    seq = get_sequence(P, 12)
    for r in (0.05, 0.7, 2.3, 4.0):
        ref = mp_layer(ell, n, r)
        assert seq.value(ell, n, r) == pytest.approx(ref, abs=2e-9 * max(1.0, abs(ref)))
        assert direct_layer(P, ell, n, r) == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("ell", [1, 2])
@pytest.mark.parametrize("n", [0, 2, 5])
def test_layer_tilde_against_mpmath(ell, n):
    seq = get_sequence(P, 12)
    for r in (0.1, 1.3, 3.0):
        ref = mp_layer(ell, n, r, tilde=True)
        assert seq.value(ell, n, r, True) == pytest.approx(ref, abs=2e-9 * max(1.0, abs(ref)))


def test_layer_examples():
    full, eta, xi = layer_coeffs(P, 1, 3, 0.2)
    assert eta * np.log(0.2) + xi == pytest.approx(full, rel=1e-10)
    for n in range(6):
        assert abs(layer_coeffs(P, 2, n, 1e-4)[1]) < 1e-6
    # O(r^2) approach of eta_{1,2} to its limit
    lim = limits_at_zero(1, 2, P)[0]
    d1 = abs(layer_coeffs(P, 1, 2, 1e-4)[1] - lim)
    d2 = abs(layer_coeffs(P, 1, 2, 5e-5)[1] - lim)
    assert d1 < 1e-7
    assert d2 < 0.3 * d1
    assert abs(layer_coeffs_tilde(P, 1, 1, 1e-3)[1]) < 1e-5
    with pytest.raises(ValueError):
        layer_coeffs(P, 1, 0, 0.0)


def test_limit_examples():
    for n in range(8):
        eta1, xi1, xit1 = limits_at_zero(1, n, P)
        eta2, xi2, xit2 = limits_at_zero(2, n, P)
        assert eta1 == pytest.approx(-0.625, abs=1e-12)
        assert xit1 == pytest.approx(-0.625, abs=1e-12)
        assert xi2 == pytest.approx(0.375, abs=1e-12)
        assert xit2 == pytest.approx(0.0, abs=1e-12)
    p1 = MaterialParams(3.0, 2.0, 1.0, 1.0)
    assert limits_at_zero(1, 3, p1)[0] == pytest.approx(-(1 / 14 + 1 / 4), abs=1e-12)


@pytest.mark.parametrize("kappa", [0.5, 1.0])
def test_closed_form_limits_agree_with_series(kappa):
    p = MaterialParams(2.0, 1.0, 1.0, kappa)
    for ell in (1, 2):
        for n in range(10):
            series = limits_at_zero(ell, n, p, check=False)
            closed = limits_closed_form(ell, n, p)
            assert np.allclose(series, closed, atol=1e-9, rtol=1e-9)


def test_limit_consistency_small_r():
    for ell in (1, 2):
        for n in range(8):
            eta0, xi0, xit0 = limits_at_zero(ell, n, P)
            _, eta, xi = layer_coeffs(P, ell, n, 1e-5)
            _, _, xit = layer_coeffs_tilde(P, ell, n, 1e-5)
            assert abs(eta - eta0) < 1e-8
            assert abs(xi - xi0) < 1e-8
            assert abs(xit - xit0) < 1e-8


def test_sequence_range_guard():
    with pytest.raises(ValueError):
        FundamentalSequence(MaterialParams(2.0, 1.0, 1.0, 5.0), 2, r_max=10.0)
    with pytest.raises(ValueError):
        get_sequence(P, 2).value(1, 0, 0.0)


# ---- matrix kernels -----------------------------------------------------------


def fd_lame(n, x, y, h=1e-4):
    def f(dx, dy):
        return fundamental_matrix(n, x + np.array([dx, dy]), y, P).full

    c = f(0, 0)
    xx = (f(h, 0) - 2 * c + f(-h, 0)) / h**2
    yy = (f(0, h) - 2 * c + f(0, -h)) / h**2
    xy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h)
    grad_div = np.array([xx[0] + xy[1], xy[0] + yy[1]])
    return P.c_s**2 * (xx + yy) + (P.c_p**2 - P.c_s**2) * grad_div


def pde_residual(n, x, y):
    E = lambda m: fundamental_matrix(m, x, y, P).full  # noqa: E731
    return fd_lame(n, x, y) - P.kappa**2 * E(n) - sum(P.beta(n - m) * E(m) for m in range(n))


def fd_traction(n, x, y, nu, h=1e-5):
    dX = (fundamental_matrix(n, x + [h, 0], y, P).full - fundamental_matrix(n, x - [h, 0], y, P).full) / (2 * h)
    dY = (fundamental_matrix(n, x + [0, h], y, P).full - fundamental_matrix(n, x - [0, h], y, P).full) / (2 * h)
    out = np.empty((2, 2))
    for j in range(2):
        G = np.array([[dX[0, j], dY[0, j]], [dX[1, j], dY[1, j]]])
        sigma = P.lam * np.trace(G) * np.eye(2) + P.mu * (G + G.T)
        out[:, j] = sigma @ nu
    return out


def random_pairs(rng, count):
    pairs = []
    while len(pairs) < count:
        x, y = rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2)
        if 0.5 <= np.linalg.norm(x - y) <= 4.0:
            pairs.append((x, y))
    return pairs


def test_pde_residual_example():
    assert np.max(np.abs(pde_residual(2, np.array([1.1, 0.7]), np.zeros(2)))) < 1e-5


@pytest.mark.parametrize("n", range(5))
def test_pde_residual_random(n, rng):
    for x, y in random_pairs(rng, 3):
        assert np.max(np.abs(pde_residual(n, x, y))) < 1e-5


@pytest.mark.parametrize("n", range(5))
def test_traction_finite_differences(n, rng):
    for x, y in random_pairs(rng, 3):
        nu = rng.normal(size=2)
        nu /= np.linalg.norm(nu)
        assert np.max(np.abs(fd_traction(n, x, y, nu) - traction_matrix(n, x, y, nu, P).full)) < 1e-5


def test_traction_example():
    x, y, nu = np.array([1.0, 0.2]), np.zeros(2), np.array([1.0, 0.0])
    tm = traction_matrix(1, x, y, nu, P)
    rec = np.log(np.linalg.norm(x - y)) * tm.log_part + tm.smooth
    assert np.allclose(rec, tm.full, rtol=1e-10, atol=1e-12)
    assert np.max(np.abs(fd_traction(1, x, y, nu) - tm.full)) < 1e-5


def test_matrix_examples():
    r = 0.9
    E = fundamental_matrix(3, np.array([r, 0.0]), np.zeros(2), P)
    f1, f2 = get_sequence(P, 3).value(1, 3, r), get_sequence(P, 3).value(2, 3, r)
    assert np.allclose(E.full, np.diag([f1 + f2, f1]), atol=1e-15)
    x, y = np.array([0.3, -1.2]), np.array([1.0, 0.4])
    a, b = fundamental_matrix(2, x, y, P).full, fundamental_matrix(2, y, x, P).full
    assert np.allclose(a, b, atol=1e-15)
    assert np.allclose(a, a.T, atol=1e-15)
    with pytest.raises(ValueError):
        fundamental_matrix(0, x, x, P)
    with pytest.raises(ValueError):
        traction_matrix(0, x, x, [1.0, 0.0], P)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10), st.floats(1e-2, 3.0), st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
def test_split_identities_matrix(n, r, theta, phi_nu):
    d = r * np.array([np.cos(theta), np.sin(theta)])
    nu = np.array([np.cos(phi_nu), np.sin(phi_nu)])
    y = np.array([0.2, -0.1])
    E = fundamental_matrix(n, y + d, y, P)
    T = traction_matrix(n, y + d, y, nu, P)
    for sm in (E, T):
        rec = np.log(r) * sm.log_part + sm.smooth
        scale = max(np.max(np.abs(sm.full)), np.max(np.abs(np.log(r) * sm.log_part)))
        assert np.max(np.abs(rec - sm.full)) <= 1e-9 * scale
    # log part of E is eta_1 I + eta_2 J
    eta1 = get_sequence(P, 10).channel("eta", 1, n, r)
    eta2 = get_sequence(P, 10).channel("eta", 2, n, r)
    assert np.allclose(E.log_part, eta1 * np.eye(2) + eta2 * matrix_J(d), atol=1e-12)


def test_traction_log_part_vanishes_first_order():
    x = np.array([0.4, 0.3])
    d = np.array([0.6, 0.8])
    nu = np.array([1.0, 0.0])
    vals = [np.max(np.abs(traction_matrix(2, x + eps * d, x, nu, P).log_part)) for eps in (1e-2, 5e-3, 2.5e-3)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[0] / vals[1] == pytest.approx(2.0, rel=0.1)
    assert vals[1] / vals[2] == pytest.approx(2.0, rel=0.1)


def test_sequence_cache_reuse():
    # parameters no other test uses, so the process-wide cache starts empty for them
    q = MaterialParams(2.0, 1.0, 1.0, 0.77)
    a = get_sequence(q, 6)
    assert get_sequence(q, 4) is a
