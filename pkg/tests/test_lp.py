import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import scipy_max_output
from svamp import lp, simplex
from svamp.bell import U0, U1


def test_simplex_small_problem_with_duals():
    # max 3x + 2y  s.t. x + y <= 4, x + 3y <= 6, x <= 3
    res = simplex.solve([3, 2], A_ub=[[1, 1], [1, 3], [1, 0]], b_ub=[4, 6, 3])
    assert res.objective == pytest.approx(11)
    assert res.x == pytest.approx([3, 1])
    assert res.y_ub @ [4, 6, 3] == pytest.approx(11)


def test_simplex_equalities_and_redundancy():
    A = [[1, 1, 0], [0, 1, 1], [1, 2, 1]]  # third row = first + second
    res = simplex.solve([1, 0, 1], A_eq=A, b_eq=[1, 1, 2])
    assert res.objective == pytest.approx(2)
    with pytest.raises(simplex.Infeasible):
        simplex.solve([1, 0, 1], A_eq=A, b_eq=[1, 1, 3])


def test_simplex_unbounded_and_infeasible():
    with pytest.raises(simplex.Unbounded):
        simplex.solve([1, 0], A_ub=[[0, 1]], b_ub=[1])
    with pytest.raises(simplex.Infeasible):
        simplex.solve([1], A_ub=[[1]], b_ub=[-1])


@pytest.mark.parametrize("rule", ["bland", "hybrid"])
def test_pivot_rules_agree(rule):
    cert = lp.max_output_probability(3, 7, 0.1, tableau=lp.feasible_tableau(0.1, rule))
    assert lp.verify_certificate(cert).ok
    assert cert.primal == pytest.approx(scipy_max_output(3, 7, 0.1), abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(m=st.integers(1, 6), nv=st.integers(1, 6), seed=st.integers(0, 10_000))
def test_simplex_matches_scipy_on_random_lps(m, nv, seed):
    from scipy.optimize import linprog

    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 2, (m, nv))
    b = rng.uniform(0.5, 3, m)
    A = np.vstack([A, np.ones((1, nv))])  # keeps the problem bounded
    b = np.append(b, 5.0)
    c = rng.uniform(-1, 2, nv)
    ref = linprog(-c, A_ub=A, b_ub=b, method="highs")
    res = simplex.solve(c, A_ub=A, b_ub=b)
    assert res.objective == pytest.approx(-ref.fun, abs=1e-8)
    # weak duality certificate
    assert res.y_ub.min() >= 0
    assert np.all(A.T @ res.y_ub >= c - 1e-9)
    assert res.y_ub @ b == pytest.approx(res.objective, abs=1e-8)


def test_equality_system_shape_and_rank():
    A, b = lp.equality_system()
    assert A.shape == (272, 256)
    assert np.linalg.matrix_rank(A) == 176
    assert b.sum() == 16


@pytest.mark.parametrize("x,u,delta", [(0, 1, 0.0), (0, 1, 0.15), (5, 14, 0.05), (9, 0, 0.1), (15, 7, 0.3)])
def test_optimum_matches_scipy(x, u, delta):
    cert = lp.max_output_probability(x, u, delta)
    assert cert.primal == pytest.approx(scipy_max_output(x, u, delta), abs=1e-9)
    assert lp.verify_certificate(cert).ok


def test_regression_values():
    # independently reproduced with scipy HiGHS
    assert lp.max_output_probability(0, 1, 0.15).primal == pytest.approx(0.075, abs=1e-9)
    target, opt, _ = lp.max_over_all_targets(0.15)
    assert opt == pytest.approx(1.15 / 3, abs=1e-9)


def test_large_cap_gives_one():
    cert = lp.max_output_probability(0, 1, 16.0)
    assert cert.primal == pytest.approx(1.0)
    assert lp.verify_certificate(cert).ok


def test_delta_zero_bound_on_constrained_targets():
    tab = lp.feasible_tableau(0.0)
    for u in sorted(U0 | U1):
        for x in (0, 1, 6, 15):
            cert = lp.max_output_probability(x, u, 0.0, tableau=tab)
            assert cert.primal <= 1 / 3 + 1e-7
            assert lp.verify_certificate(cert).ok


def test_certificate_check_detects_tampering():
    cert = lp.max_output_probability(2, 11, 0.05)
    assert lp.verify_certificate(cert).ok
    cert.lam = cert.lam.copy()
    cert.lam[-1] *= 0.5
    assert not lp.verify_certificate(cert).dual_feasible


def test_certificate_json():
    import json

    doc = json.loads(lp.max_output_probability(0, 1, 0.05).to_json())
    assert doc["schema"] == "svamp.lp-certificate/1"
    assert set(doc) >= {"target", "delta", "primal", "dual", "gap", "lambda"}


def test_mismatched_tableau_rejected():
    with pytest.raises(ValueError):
        lp.max_output_probability(0, 1, 0.1, tableau=lp.feasible_tableau(0.05))


def test_closed_forms():
    assert lp.sv_output_bound(0.0, 0.3) == pytest.approx(1 / 3)
    assert lp.sv_output_bound(0.01, 0.0) == pytest.approx(0.44)
    assert lp.sv_output_bound(0.01, 0.1) == pytest.approx(0.59375)
    assert lp.sv_output_bound(1.0, 0.4) == 1.0
    assert lp.gamma_of(0.0, 0.2) == pytest.approx(1 / 3)
    assert lp.gamma_of(0.0001, 0.0) == pytest.approx(0.44)
    assert lp.tradeoff_boundary(0.0) == pytest.approx(0.001953125, abs=1e-15)
    assert lp.tradeoff_boundary(0.1) == pytest.approx(0.00032768, abs=1e-15)
    assert lp.tradeoff_boundary(0.4999999) < 1e-50
    with pytest.raises(ValueError):
        lp.gamma_of(0.1, 0.5)


@settings(max_examples=200, deadline=None)
@given(eps=st.floats(0, 0.499), total=st.floats(0, 1))
def test_gamma_feasibility_edge(eps, total):
    g = lp.gamma_of(total, eps)
    lhs, rhs = np.sqrt(total), (0.5 - eps) ** 4
    if abs(lhs - rhs) > 1e-9 * max(rhs, 1e-300):
        assert (g < 1) == (lhs < rhs)


@pytest.mark.parametrize("eps,d", [(0.0, 0.005), (0.1, 0.001)])
def test_lp_bound_below_sv_bound_after_band_conversion(eps, d):
    # a per-round SV-weighted value <= d implies B.P <= d / (1/2 - eps)^4
    _, opt, _ = lp.max_over_all_targets(d / (0.5 - eps) ** 4)
    assert opt <= lp.sv_output_bound(d, eps) + 1e-7
