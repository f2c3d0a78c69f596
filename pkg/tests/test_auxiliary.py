import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import solve_banded

from qvilat import generators as gen
from qvilat.auxiliary import (
    AuxData,
    best_selection,
    check_sandwich,
    coercive_bound_constants,
    compensator_h,
    compensator_violations,
    cutoff_d,
    cutoff_d_slope,
    cutoff_growth_constant,
    piecewise_l,
    residual_qvip,
    solve_auxiliary,
    truncate_g,
)
from qvilat.errors import DegenerateBracketError, InfeasibleError, InvalidAuxDataError
from qvilat.grid import preset, problem_from_config


def _pgs(prob, v, tol=1e-12):
    """Projected Gauss-Seidel for p = 2 with a single-valued constant load."""
    load = prob.f_interval(prob.sub, v)[0]
    psi = prob.psi(v)
    u = np.zeros(prob.n)
    while True:
        change = 0.0
        for i in range(prob.n):
            left = u[i - 1] if i else 0.0
            right = u[i + 1] if i + 1 < prob.n else 0.0
            new = min(psi[i], 0.5 * (left + right - prob.h**2 * load[i]))
            change = max(change, abs(new - u[i]))
            u[i] = new
        if change < tol:
            return u


def test_cutoff_values_and_slope():
    s = np.array([-2.0, 0.0, 0.5, 3.0])
    d = cutoff_d(s, 0.0, 1.0, 3.0)
    assert d.tolist() == [-4.0, 0.0, 0.0, 4.0]
    num = (cutoff_d(s + 1e-7, 0.0, 1.0, 3.0) - cutoff_d(s - 1e-7, 0.0, 1.0, 3.0)) / 2e-7
    assert np.allclose(cutoff_d_slope(s, 0.0, 1.0, 3.0), num, atol=1e-5)
    assert cutoff_d(0.5, 0.0, 1.0, 2.0) == 0.0


def test_piecewise_bracket():
    assert piecewise_l(0.0, 1.0, 2.0, 3.0, 1.0) == 2.0
    assert piecewise_l(0.0, 1.0, 2.0, 3.0, -5.0) == 1.0
    assert piecewise_l(0.0, 1.0, 2.0, 3.0, 5.0) == 3.0
    with pytest.raises(DegenerateBracketError):
        piecewise_l(1.0, 0.0, 1.0, 0.0, 0.5)


def test_aux_data_validation():
    prob = preset("linear-load")
    v = prob.sup
    with pytest.raises(InvalidAuxDataError):
        AuxData.from_pair(prob, v, prob.sup, prob.sub)
    with pytest.raises(InvalidAuxDataError):
        AuxData(*(np.zeros(3),) * 7, np.zeros(4))
    lo = prob.f_interval(prob.sub, v)[0]
    with pytest.raises(InvalidAuxDataError):
        AuxData.build(prob, v, (prob.sub, prob.sub), (prob.sup, prob.sup), sub_etas=(lo + 1, lo))


def test_selection_combination_picks_the_larger_subsolution():
    z = np.zeros(2)
    aux = AuxData(np.array([1.0, 0.0]), np.array([0.0, 1.0]), z + 2, z + 2,
                  np.array([10.0, 20.0]), np.array([30.0, 40.0]), z, z)
    assert aux.ulv.tolist() == [1.0, 1.0]
    assert aux.uleta.tolist() == [10.0, 40.0]


def test_truncation_freezes_g_outside_the_band():
    prob = preset("step-bifunction")
    v = prob.sup
    aux = AuxData.from_pair(prob, v, prob.sub, prob.sup)
    i = prob.n // 2
    below = truncate_g(i, prob.sub[i] - 1.0, aux, prob, v)
    assert below == (aux.uleta[i], aux.uleta[i])
    above = truncate_g(i, prob.sup[i] + 1.0, aux, prob, v)
    assert above == (aux.oleta[i], aux.oleta[i])


def test_residual_rejects_infeasible_and_non_selections():
    prob = preset("plain-obstacle")
    v = prob.sup
    with pytest.raises(InfeasibleError):
        residual_qvip(prob.sup + 1.0, best_selection(prob.sup, v, prob), v, prob)
    with pytest.raises(ValueError):
        residual_qvip(prob.sub, np.full(prob.n, 100.0), v, prob)


def test_linear_load_matches_tridiagonal_solve():
    prob = preset("linear-load")
    n, h = prob.n, prob.h
    ab = np.vstack([np.full(n, -1.0), np.full(n, 2.0), np.full(n, -1.0)]) / h**2
    want = solve_banded((1, 1), ab, -prob.f_interval(prob.sub, prob.sub)[0])
    aux = AuxData.from_pair(prob, want, prob.sub, prob.sup)
    for mode in ("greatest", "smallest"):
        r = solve_auxiliary(prob, want, aux, mode=mode)
        assert np.max(np.abs(r.u - want)) <= 1e-10
        assert r.converged and r.sandwich_ok and r.qvip_residual <= 1e-10


def test_obstacle_matches_projected_gauss_seidel():
    prob = preset("plain-obstacle")
    v = prob.sup
    want = _pgs(prob, v)
    aux = AuxData.from_pair(prob, v, prob.sub, prob.sup)
    r = solve_auxiliary(prob, v, aux)
    assert np.max(np.abs(r.u - want)) <= 1e-6
    assert r.active.any() and not r.active.all()


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_p_laplacian_converges_to_the_exact_profile(p):
    errors = []
    for n in (31, 127):
        prob = preset(f"p-laplacian-load-{p:g}", n=n)
        x = prob.x
        q = 1 / (p - 1)
        exact = (0.5 ** (q + 1) - np.abs(0.5 - x) ** (q + 1)) / (q + 1)  # load 1
        aux = AuxData.from_pair(prob, prob.sup, prob.sub, prob.sup)
        r = solve_auxiliary(prob, prob.sup, aux)
        assert r.qvip_residual <= 1e-10
        errors.append(np.max(np.abs(r.u - exact)))
    assert errors[1] < errors[0] < 1e-2


def test_gauss_seidel_and_newton_agree():
    prob = gen.random_grid_problem(np.random.default_rng(4), 2.0, 7)
    v = gen.random_parameter(prob, np.random.default_rng(5))
    aux = AuxData.from_pair(prob, v, prob.sub, prob.sup)
    a = solve_auxiliary(prob, v, aux, method="gauss-seidel", max_iter=10_000)
    b = solve_auxiliary(prob, v, aux, method="newton")
    assert a.converged and b.converged
    assert np.max(np.abs(a.u - b.u)) <= 1e-8


def test_solver_argument_checks():
    prob = preset("linear-load")
    aux = AuxData.from_pair(prob, prob.sup, prob.sub, prob.sup)
    with pytest.raises(ValueError):
        solve_auxiliary(prob, prob.sup, aux, method="bisection")
    with pytest.raises(ValueError):
        solve_auxiliary(prob, prob.sup[:3], aux)


def test_compensator_is_zero_on_the_band():
    rng = np.random.default_rng(0)
    k, prob, v, aux = next(_instances(1))
    for i in range(prob.n):
        for s in np.linspace(aux.ulv[i], aux.olv[i], 7):
            assert compensator_h(i, s, aux) == 0.0
    rows = rng.integers(0, prob.n, 2000)
    s = rng.uniform(-1, 1, 2000) * (np.abs(prob.sub).max() + np.abs(prob.sup).max())
    low, up = compensator_violations(aux, s, rows)
    assert not low.any() and not up.any()


def _instances(count, seed=11):
    from qvilat.suites import sandwich_instances

    return sandwich_instances(seed, count)


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([1.5, 2.0, 3.0]), st.sampled_from(["greatest", "smallest"]))
def test_sandwich_property(seed, p, mode):
    rng = np.random.default_rng(seed)
    prob = gen.random_grid_problem(rng, p, 15)
    v = gen.random_parameter(prob, rng)
    sub2, sup2 = gen.second_pair(prob, v, rng)
    aux = AuxData.build(prob, v, (prob.sub, sub2), (prob.sup, sup2))
    r = solve_auxiliary(prob, v, aux, mode=mode)
    assert r.sandwich_ok and check_sandwich(r.u, aux)
    assert r.qvip_residual <= 1e-8


@settings(max_examples=100, deadline=None)
@given(st.floats(1.1, 6.0), st.floats(-3, 3), st.floats(-3, 3), st.floats(-5, 5))
def test_cutoff_coercive_and_growth_bounds(p, a, b, s):
    lo, hi = min(a, b), max(a, b)
    d = cutoff_d(s, lo, hi, p)
    c1, c2 = coercive_bound_constants(p)
    assert d * s >= c1 * abs(s) ** p - c2 * (abs(lo) ** p + abs(hi) ** p) - 1e-9
    d0 = cutoff_growth_constant(p)
    assert abs(d) <= d0 * (abs(lo) ** (p - 1) + abs(s) ** (p - 1) + abs(hi) ** (p - 1)) + 1e-9


def test_greatest_mode_is_above_smallest_mode():
    prob = preset("step-bifunction")
    v = prob.sup
    aux = AuxData.from_pair(prob, v, prob.sub, prob.sup)
    hi = solve_auxiliary(prob, v, aux, mode="greatest").u
    lo = solve_auxiliary(prob, v, aux, mode="smallest").u
    assert np.all(lo <= hi + 1e-10)


def test_single_node_problem():
    prob = problem_from_config({"n": 1, "f": {"terms": [{"kind": "const", "below": -1}]},
                                "sub": 0, "super": 1})
    aux = AuxData.from_pair(prob, prob.sup, prob.sub, prob.sup)
    r = solve_auxiliary(prob, prob.sup, aux)
    assert r.u[0] == pytest.approx(0.125)
