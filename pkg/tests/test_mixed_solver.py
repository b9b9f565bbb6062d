import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixlab.basis_builder import c2_bump
from mixlab.grid_core import Field, GridError, SideData, d2, integrate_halfline, make_grid
from mixlab.mixed_solver import (MANUFACTURED, JumpSpec, MixedProblem, SolverError, assemble_primal,
                                 cap_trace_values, duality_residual, duality_terms, jump_defects,
                                 jumps_for, manufactured_study, primal_operator, solve_adjoint,
                                 solve_mixed)
from tests.oracles.dense_primal import dense_solve
from tests.oracles.generate import smooth_case


def _problem(g, G, left, right, scale=1.0):
    return MixedProblem(g, Field(g, G), SideData(left, right, g.h_rho), scale)


def test_homogeneous_solve_is_zero(grid_small):
    W = solve_mixed(MixedProblem(grid_small, Field.zeros(grid_small), SideData.zeros(grid_small)))
    assert np.all(W.values == 0.0)


def test_dense_oracle_9x9_frozen(frozen):
    G, left, right = smooth_case()
    g = make_grid(9, 9, 2.0)
    W = solve_mixed(_problem(g, G, left, right))
    np.testing.assert_allclose(W.values, np.array(frozen["dense_9x9"]["solution"]), atol=1e-10)


@given(st.integers(2, 15), st.integers(1, 7), st.floats(0.5, 4.0), st.integers(0, 10**6), st.floats(0.5, 3.0))
def test_dense_oracle_equivalence(n_t, half, R, seed, scale):
    n_rho = 2 * half + 1
    g = make_grid(n_t, n_rho, R)
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(n_t, n_rho))
    left, right = rng.normal(size=(2, half + 1))
    W_dense, A_dense = dense_solve(n_t, n_rho, R, G, left, right, scale)
    np.testing.assert_allclose(assemble_primal(g).toarray(), A_dense, rtol=1e-13, atol=1e-12)
    W = solve_mixed(_problem(g, G, left, right, scale), check_conditioning=False)
    np.testing.assert_allclose(W.values, W_dense, atol=1e-10 * (1 + np.max(np.abs(W_dense))))


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 10**6))
def test_linearity(a, b, seed):
    g = make_grid(17, 33, 4.0)
    rng = np.random.default_rng(seed)
    G1, G2 = rng.normal(size=(2, g.n_t, g.n_rho))
    L1, L2, R1, R2 = rng.normal(size=(4, g.interface_index + 1))
    W1 = solve_mixed(_problem(g, G1, L1, R1)).values
    W2 = solve_mixed(_problem(g, G2, L2, R2)).values
    W = solve_mixed(_problem(g, a * G1 + b * G2, a * L1 + b * L2, a * R1 + b * R2)).values
    np.testing.assert_allclose(W, a * W1 + b * W2, atol=1e-10 * (1 + np.max(np.abs(W))))


def test_degenerate_column(grid_mid):
    g = grid_mid
    case = MANUFACTURED["spatial"](g.R)
    p = case.problem(g)
    W = solve_mixed(p)
    m = g.interface_index
    lhs = -d2(W.values, g.h_rho, axis=1)[1:-1, m]
    np.testing.assert_allclose(lhs, p.G.values[1:-1, m], atol=1e-10)


def test_caps_imposed_strongly(grid_small):
    g = grid_small
    p = MANUFACTURED["shifted"](g.R).problem(g)
    W = solve_mixed(p)
    m = g.interface_index
    np.testing.assert_allclose(W.values[0, m + 1:-1], p.data.left[1:-1], atol=1e-12)
    np.testing.assert_allclose(W.values[-1, 1:m], p.data.right[::-1][1:m], atol=1e-12)


def test_manufactured_orders():
    sp = manufactured_study("spatial")
    tp = manufactured_study("temporal")
    assert np.all(sp.orders >= 1.9)
    assert np.all(tp.orders >= 0.9)
    assert np.all(np.diff(sp.errors) < 0) and np.all(np.diff(tp.errors) < 0)


def test_problem_validation(grid_small):
    g = grid_small
    with pytest.raises(GridError):
        MixedProblem(g, Field.zeros(make_grid(5, 9, 8.0)), SideData.zeros(g))
    with pytest.raises(GridError):
        MixedProblem(g, Field.zeros(g), SideData(np.zeros(3), np.zeros(3), 1.0))
    with pytest.raises(GridError):
        MixedProblem(g, Field.zeros(g), SideData.zeros(g), scale=0.0)


def test_condition_estimate_and_threshold(grid_small):
    op = primal_operator(grid_small)
    est = op.condition_estimate()
    assert 1 < est < 1e12
    with pytest.raises(SolverError) as e:
        op.check(threshold=1.0)
    assert e.value.estimate == pytest.approx(est)


def test_iterative_path_matches_direct():
    g = make_grid(33, 65, 8.0)
    p = MANUFACTURED["shifted"](g.R).problem(g)
    a = solve_mixed(p, method="direct").values
    b = solve_mixed(p, method="iterative").values
    np.testing.assert_allclose(b, a, atol=1e-7)


# ---------------------------------------------------------------------------
# adjoint
# ---------------------------------------------------------------------------

def test_zero_jump_adjoint_vanishes(grid_small):
    phi = solve_adjoint(grid_small, JumpSpec(0.0, 0.0))
    assert np.all(phi.values == 0) and np.all(phi.minus == 0) and np.all(phi.plus == 0)


@pytest.mark.parametrize("j", [0, 1])
def test_jump_conditions_enforced(grid_mid, j):
    dv, dd = jump_defects(solve_adjoint(grid_mid, jumps_for(j)), jumps_for(j))
    assert dv <= 1e-10 and dd <= 1e-10


@pytest.mark.parametrize("j", [0, 1])
def test_adjoint_symmetry(grid_mid, j):
    # ρ → −ρ, t → 1 − t maps the problem to itself with the jump signs set by j
    cap = cap_trace_values(solve_adjoint(grid_mid, jumps_for(j)))
    sign = 1 if j == 0 else -1
    assert cap[2] == pytest.approx(sign * cap[0], abs=1e-10)
    assert cap[3] == pytest.approx(-sign * cap[1], abs=1e-10)


def test_cap_trace_values_approach_jump_list():
    # values approach the (0, ., 0, .) / (1, ., -1, .) targets, but only like h^0.75
    # (corner singularity); derivative entries grow (see ledger)
    vals = []
    for nt, nr in ((33, 65), (65, 129), (129, 257)):
        g = make_grid(nt, nr, 8.0)
        vals.append((cap_trace_values(solve_adjoint(g, jumps_for(0))),
                     cap_trace_values(solve_adjoint(g, jumps_for(1)))))
    e0 = [abs(v[0][0]) for v in vals]
    e1 = [abs(v[1][0] - 1) for v in vals]
    assert e0[0] > e0[1] > e0[2] and e1[0] > e1[1] > e1[2]
    slopes = np.log2(np.array(e0[:-1]) / e0[1:])
    assert np.all((slopes > 0.5) & (slopes < 0.9))
    d = [v[0][1] for v in vals]
    assert d[0] < d[1] < d[2]  # ∂ρΦ⁰_L(0+) does not converge to −1


# ---------------------------------------------------------------------------
# duality
# ---------------------------------------------------------------------------

def test_duality_zero(grid_small):
    p = MixedProblem(grid_small, Field.zeros(grid_small), SideData.zeros(grid_small))
    W = solve_mixed(p)
    for j in (0, 1):
        assert duality_residual(p, W, solve_adjoint(grid_small, jumps_for(j)), j) == 0.0


@pytest.mark.parametrize("j", [0, 1])
def test_duality_manufactured_refinement(j):
    res = []
    for nt, nr in ((33, 65), (65, 129), (129, 257)):
        g = make_grid(nt, nr, 8.0)
        p = MANUFACTURED["shifted"](g.R).problem(g)
        res.append(duality_residual(p, solve_mixed(p), solve_adjoint(g, jumps_for(j)), j, relative=True))
    assert res[0] > res[1] > res[2]
    assert np.log2(res[1] / res[2]) >= 0.7


def test_duality_random_smooth_data(grid_default):
    g = grid_default
    rng = np.random.default_rng(3)
    r = g.r
    sides = [sum(a * c2_bump(r - c) for a, c in zip(rng.normal(size=4), rng.uniform(1, 6, 4))) for _ in range(2)]
    data = SideData(*sides, g.h_rho)
    G = Field.from_function(g, lambda T, P: np.exp(-((P - 1) ** 2)) * np.cos(T))
    p = MixedProblem(g, G, data)
    W = solve_mixed(p)
    norm = np.sqrt(integrate_halfline(data.left, data.left, g.h_rho) + integrate_halfline(data.right, data.right, g.h_rho))
    for j in (0, 1):
        assert duality_residual(p, W, solve_adjoint(g, jumps_for(j)), j) <= 1e-3 * norm


def test_duality_terms_grid_mismatch(grid_small, grid_mid):
    p = MixedProblem(grid_small, Field.zeros(grid_small), SideData.zeros(grid_small))
    W = solve_mixed(p)
    with pytest.raises(GridError):
        duality_terms(p, W, solve_adjoint(grid_mid, jumps_for(0)), 0)
    with pytest.raises(ValueError):
        duality_terms(p, W, solve_adjoint(grid_small, jumps_for(0)), 2)
