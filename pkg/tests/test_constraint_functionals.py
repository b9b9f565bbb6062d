from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

from mixlab.basis_builder import c2_bump
from mixlab.constraint_functionals import (CorrectorQ, HatData, SmoothnessError, SupportError, apply_D1, apply_D3,
                                           build_Q, chi, derivative_at_zero, eval_alpha, eval_beta, eval_l,
                                           eval_l_minus1, fd_weights, source_cap_ladder)
from mixlab.fs_profile import fs_solve
from mixlab.grid_core import Field, SideData, make_grid
from tests.oracles.polyfit import D1_exact, D3_exact, cutoff, q_coefficients
from tests.oracles.quadrature import alpha_t_times_g, beta_q2_only


def _taylor_poly(seed):
    rng = np.random.default_rng(seed)
    return Polynomial(rng.normal(size=7) / np.array([factorial(n) for n in range(7)]))


def test_cutoff_matches_bspline_oracle():
    r = np.linspace(0, 3, 3001)
    np.testing.assert_allclose(chi(r), cutoff(r), atol=1e-14)
    assert np.all(chi(r[r < 1]) == 1) and np.all(chi(r[r > 2]) == 0)


def test_fd_weights_exact_on_polynomials():
    for order in range(0, 7):
        w = fd_weights(order, order + 3)
        x = np.arange(order + 3, dtype=float)
        for deg in range(order + 3):
            exact = factorial(deg) if deg == order else 0.0
            assert np.dot(w, x**deg) == pytest.approx(exact, abs=1e-9 * max(1, factorial(deg)))


# D3 / D1 ---------------------------------------------------------------------

def test_D3_monomials():
    h = 1e-2
    r = np.arange(0, 0.9, h)
    np.testing.assert_allclose(apply_D3(r**3, h), 6.0, rtol=1e-9)
    np.testing.assert_allclose(apply_D3(r**2, h), 0.0, atol=1e-9)


def test_D1_monomials():
    h = 1e-2
    r = np.arange(0, 0.9, h)
    np.testing.assert_allclose(apply_D1(r, h), 1.0, rtol=1e-12)
    np.testing.assert_allclose(apply_D1(np.full_like(r, 3.0), h), 0.0, atol=1e-12)


def test_D3_exact_on_cubics():
    h = 1e-2
    r = np.arange(0, 2.5 + h / 2, h)
    p = Polynomial([0.3, -1.2, 0.7, 0.25])
    np.testing.assert_allclose(apply_D3(p(r), h), D3_exact(p, r), atol=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_D3_polyfit_oracle(seed):
    p = _taylor_poly(seed)
    far_err, zero_err = [], []
    for h in (2e-3, 1e-3, 5e-4):
        r = np.arange(0, 2.5 + h / 2, h)
        d = np.abs(apply_D3(p(r), h) - D3_exact(p, r))
        far_err.append(np.max(d[r >= 0.05]))
        zero_err.append(d[0])
    sc = max(1.0, np.max(np.abs(D3_exact(p, np.linspace(0, 2.5, 101)))))
    assert far_err[-1] <= 1e-4 * sc
    assert np.log2(far_err[1] / far_err[2]) >= 1.9
    assert zero_err[-1] <= 5e-5 * sc  # the ρ→0 limit divides by h³: roundoff-limited


@pytest.mark.parametrize("seed", range(5))
def test_D1_polyfit_oracle(seed):
    p = _taylor_poly(seed)
    h = 1e-3
    r = np.arange(0, 2.5 + h / 2, h)
    ref = D1_exact(p, r)
    np.testing.assert_allclose(apply_D1(p(r), h), ref, atol=1e-6 * max(1.0, np.max(np.abs(ref))))


def test_D3_right_side_sign():
    h = 1e-2
    r = np.arange(0, 1.5, h)
    np.testing.assert_allclose(apply_D3(r**3, h, side="right"), -apply_D3(r**3, h))


def test_D3_inverts_double_integral():
    # u'' = ρ f with f supported away from 0 → D3 u = f
    errs = []
    for h in (1e-2, 5e-3, 2.5e-3):
        r = np.arange(0, 6 + h / 2, h)
        f = c2_bump((r - 3) / 1.5)
        s = r * f
        u1 = np.concatenate([[0], np.cumsum(0.5 * (s[1:] + s[:-1]) * h)])
        u = np.concatenate([[0], np.cumsum(0.5 * (u1[1:] + u1[:-1]) * h)])
        errs.append(np.max(np.abs(apply_D3(u, h) - f)[1:]))
    assert errs[-1] < 1e-4 and np.log2(errs[1] / errs[2]) >= 1.8


def test_D_short_input():
    with pytest.raises(SmoothnessError):
        apply_D3(np.zeros(4), 0.1)
    with pytest.raises(SmoothnessError):
        apply_D1(np.zeros(2), 0.1)


# HatData / Q ---------------------------------------------------------------------

def test_hat_support_enforced(grid_mid):
    r = grid_mid.r
    with pytest.raises(SupportError):
        HatData(c2_bump(r - 0.2), np.zeros_like(r), grid_mid.h_rho)
    with pytest.raises(SupportError):
        HatData(np.zeros_like(r), c2_bump(r - 7.8), grid_mid.h_rho)


def test_build_Q_zero(grid_mid):
    Q = build_Q(Field.zeros(grid_mid), 3)
    assert np.all(Q.qL == 0) and np.all(Q.qR == 0)


def test_build_Q_constant_source(grid_mid):
    c = 1.7
    Q = build_Q(Field.from_function(grid_mid, lambda T, P: c + 0 * T * P), 1)
    assert Q.qL[0] == pytest.approx(-c / 2, rel=1e-12)
    assert Q.derivative_at_zero(2) == pytest.approx(-c, rel=1e-12)


def test_build_Q_cubic_source(grid_mid, frozen):
    G = Field.from_function(grid_mid, lambda T, P: P**3 + 0 * T)
    Q = build_Q(G, 2)
    ref = [float(Fraction(q)) for q in frozen["q_rho3_kstar2"]]
    assert ref[1] == -0.05
    np.testing.assert_allclose(Q.qL, ref, atol=1e-9)
    # right cap: G_R(ρ) = ρ³ on ρ < 0 has the same Taylor coefficients
    np.testing.assert_allclose(Q.qR, ref, atol=1e-9)


@given(st.lists(st.floats(-2, 2), min_size=7, max_size=7))
def test_build_Q_symbolic_postcondition(coeffs):
    g = make_grid(3, 129, 2.0)
    p = Polynomial(coeffs)
    Q = build_Q(Field.from_function(g, lambda T, P: p(P) + 0 * T), 2)
    exact = q_coefficients([Fraction(c) for c in coeffs], 2)
    np.testing.assert_allclose(Q.qL, [float(q) for q in exact], atol=1e-6)
    for k in (1, 2):
        d = 3 * (k - 1)
        assert Q.derivative_at_zero(2 + d) == pytest.approx(-float(p.deriv(d)(0.0)) if d else -coeffs[0], abs=1e-5)


def test_corrector_right_reflection():
    Q = CorrectorQ(np.array([0.0, 0.0]), np.array([1.0, 2.0]))
    r = np.linspace(0, 0.9, 10)
    np.testing.assert_allclose(Q.right(r), r**2 - 2 * r**5)


# functionals -----------------------------------------------------------------------

def _hat(g):
    r = g.r
    return HatData(c2_bump((r - 3) / 1.5), 0.5 * c2_bump((r - 4) / 1.2), g.h_rho)


def test_eval_l_zero(duals_mid, grid_mid):
    z = HatData.zeros_like(grid_mid.r.size, grid_mid.h_rho)
    for k in (1, 2, 3):
        for j in (0, 1):
            for form in ("ibp", "weighted"):
                assert eval_l(j, k, z, duals_mid, form) == 0.0


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(1, 3), st.integers(0, 1))
def test_eval_l_linear(duals_mid, grid_mid, a, b, k, j):
    g = grid_mid
    r = g.r
    u = HatData(c2_bump((r - 3) / 1.5), np.zeros_like(r), g.h_rho)
    v = HatData(np.zeros_like(r), c2_bump((r - 5) / 1.0), g.h_rho)
    lhs = eval_l(j, k, u.scaled(a) + v.scaled(b), duals_mid)
    rhs = a * eval_l(j, k, u, duals_mid) + b * eval_l(j, k, v, duals_mid)
    assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(lhs)))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_weighted_vs_ibp_sign_relation(duals_mid, grid_mid, k):
    # discrete summation by parts gives weighted = (-1)^k ibp on the same grid (see ledger)
    hat = _hat(grid_mid)
    for j in (0, 1):
        a = eval_l(j, k, hat, duals_mid, "ibp")
        b = eval_l(j, k, hat, duals_mid, "weighted")
        assert b == pytest.approx((-1) ** k * a, abs=1e-12 * (1 + abs(a)))


def test_ell_converges_under_refinement():
    vals = []
    for nt, nr in ((65, 129), (129, 257), (257, 513)):
        from mixlab.dual_profiles import build_duals
        g = make_grid(nt, nr, 8.0)
        vals.append(eval_l(0, 1, _hat(g), build_duals(g, 1)))
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])


def test_eval_l_rejects_bad_support(grid_small):
    from mixlab.dual_profiles import build_duals
    ds = build_duals(grid_small, 1, epsilon_ladder=1.0)
    r = grid_small.r
    hat = HatData(c2_bump((r - 0.75) / 0.25), np.zeros_like(r), grid_small.h_rho)
    with pytest.raises(SupportError):
        eval_l(0, 1, hat, ds)


def test_alpha_zero_and_t_independent(duals_mid, grid_mid):
    g = grid_mid
    assert eval_alpha(0, Field.zeros(g), duals_mid) == 0.0
    G = Field.from_function(g, lambda T, P: np.exp(-(P**2)) + 0 * T)
    assert abs(eval_alpha(1, G, duals_mid)) <= 1e-12


@pytest.mark.parametrize("j", [0, 1])
def test_alpha_t_times_g(duals_default, grid_default, j):
    g = grid_default
    gv = np.exp(-((g.rho - 0.3) ** 2))
    G = Field.from_function(g, lambda T, P: T * np.exp(-((P - 0.3) ** 2)))
    ref = alpha_t_times_g(gv, duals_default[j].field.values, g.t, g.rho)
    assert eval_alpha(j, G, duals_default) == pytest.approx(ref, rel=5e-3)


def test_beta_zero(duals_mid, grid_mid):
    Q = CorrectorQ(np.zeros(1), np.zeros(1))
    for j in (0, 1):
        assert eval_beta(j, SideData.zeros(grid_mid), Q, duals_mid) == 0.0


def test_beta_q2_quadrature(duals_default, duals_mid, grid_default, grid_mid):
    Q = CorrectorQ(np.array([1.0]), np.array([0.0]))
    diffs = []
    for g, ds in ((grid_mid, duals_mid), (grid_default, duals_default)):
        b = eval_beta(0, SideData.zeros(g), Q, ds)
        diffs.append(abs(b - beta_q2_only(ds[0].left_traces[0], g.r)))
        assert diffs[-1] <= 0.05 * abs(b)
    assert diffs[1] < diffs[0]


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_beta_linear(duals_mid, grid_mid, a, b):
    g = grid_mid
    G1 = Field.from_function(g, lambda T, P: np.exp(-((P - 0.4) ** 2)) * (1 + T))
    G2 = Field.from_function(g, lambda T, P: np.cos(P) * np.exp(-(P**2)) + 0 * T)
    Q1, Q2 = build_Q(G1, 2), build_Q(G2, 2)
    for k in (1, 2):
        for j in (0, 1):
            L1 = source_cap_ladder(G1, k)
            L2 = source_cap_ladder(G2, k)
            comb = [x.scaled(a) + y.scaled(b) for x, y in zip(L1, L2)]
            Qc = CorrectorQ(a * Q1.qL + b * Q2.qL, a * Q1.qR + b * Q2.qR)
            lhs = eval_beta(j, comb, Qc, duals_mid, k)
            rhs = a * eval_beta(j, L1, Q1, duals_mid, k) + b * eval_beta(j, L2, Q2, duals_mid, k)
            assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(lhs)) * 100)


# mass functional -------------------------------------------------------------------

class _EvenProfile:
    """Stand-in profile with ū'(1, z) even about the interval midpoint."""

    def fpp_interp(self):
        return lambda z: 1.0 + (np.asarray(z) - 0.5) ** 2


@pytest.fixture(scope="module")
def blasius():
    return fs_solve(0.0)


def test_l_minus1_zero(blasius):
    assert eval_l_minus1(lambda rho: 0 * rho, blasius, 0.5) == 0.0


@given(st.floats(-5, 5))
def test_l_minus1_scaling(c):
    fs = _EvenProfile()
    F = lambda rho: np.exp(rho)
    assert eval_l_minus1(lambda rho: c * F(rho), fs, 0.3) == pytest.approx(c * eval_l_minus1(F, fs, 0.3), abs=1e-12)


def test_l_minus1_odd_symmetry():
    L = 0.7
    s = L ** (-1 / 3)
    # odd about z' = 1/2, i.e. about rho = -s/2
    F = lambda rho: np.sin(3 * (rho + s / 2))
    assert abs(eval_l_minus1(F, _EvenProfile(), L)) <= 1e-12


def test_l_minus1_direct_quadrature(blasius):
    from scipy.integrate import quad
    L = 0.5
    s = L ** (-1 / 3)
    F = lambda rho: np.exp(rho) * np.cos(rho)
    spline = blasius.fpp_interp()
    ref, _ = quad(lambda z: F(s * (z - 1)) / spline(z), 0, 1, epsabs=1e-13)
    assert eval_l_minus1(F, blasius, L) == pytest.approx(ref, rel=1e-6)


def test_l_minus1_samples_input(blasius):
    r = np.linspace(0, 8, 801)
    a = eval_l_minus1((r, np.exp(-r)), blasius, 1.0)
    b = eval_l_minus1(lambda rho: np.exp(rho), blasius, 1.0)
    assert a == pytest.approx(b, rel=1e-4)


class _CrossingProfile:
    def fpp_interp(self):
        return lambda z: np.asarray(z) - 0.5


def test_l_minus1_zero_denominator():
    with pytest.raises(ZeroDivisionError):
        eval_l_minus1(lambda rho: 1 + 0 * rho, _CrossingProfile(), 1.0)


def test_l_minus1_reversed_profile_finite():
    # on the reversed branch f'' < 0 on all of [0, 1], so the integral exists
    rev = fs_solve(-0.1, branch="reversed")
    assert np.isfinite(eval_l_minus1(lambda rho: np.exp(rho), rev, 1.0))
