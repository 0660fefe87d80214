import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import space_and_set, spaces
from rieszcap import spacegen as sg
from rieszcap.capacity import (CapacityOracle, CapacityProblem, ball_admissible, ball_bound, capacity,
                               capacity_of_balls_report, critical_radii, dual_lower_bound,
                               first_order_residual, solve_capacity)
from rieszcap.kernel import DiagonalMode, RieszParams, assemble_kernel, potential
from rieszcap.mmspace import doubling_profile
from rieszcap.qp import QPError, active_set_qp, capacity_qp

TOL = 1e-6


@pytest.mark.parametrize("gamma,p", [(0.25, 2), (0.6, 1.5), (0.1, 4)])
def test_two_point_closed_forms(S2, gamma, p):
    k = assemble_kernel(S2, RieszParams(gamma, p))
    r = capacity(k, [0])
    assert r.primal_value == pytest.approx(1, rel=TOL)
    assert np.allclose(r.primal_f, [0, 1], atol=1e-6)
    assert capacity(k, [0, 1]).primal_value == pytest.approx(2, rel=TOL)


def test_triangle_closed_forms(S3):
    k = assemble_kernel(S3, RieszParams(0.3, 2))
    r = capacity(k, [0])
    assert r.primal_value == pytest.approx(0.5, rel=TOL)
    assert np.allclose(r.primal_f, [0, 0.5, 0.5], atol=1e-6)
    assert capacity(k, [0, 1, 2]).primal_value == pytest.approx(0.75, rel=TOL)
    for p in (1.5, 3.0):
        kp = assemble_kernel(S3, RieszParams(0.3, p))
        assert capacity(kp, [0]).primal_value == pytest.approx(2 ** (1 - p), rel=TOL)
        assert capacity(kp, [0, 1, 2]).primal_value == pytest.approx(3 * 2 ** -p, rel=TOL)


def test_result_invariants(S3):
    r = capacity(assemble_kernel(S3, RieszParams(0.3, 2)), [1])
    assert r.converged and r.rel_gap <= TOL
    assert r.feasibility_slack >= -TOL
    assert r.dual_value <= r.primal_value
    assert r.dual_nu[0] == 0 and r.dual_nu[2] == 0
    d = r.to_dict()
    assert set(d) >= {"primal_f", "dual_nu", "primal_value", "dual_value", "gap", "iterations",
                      "feasibility_slack", "active_set"}


def test_empty_set_and_errors(S2):
    k = assemble_kernel(S2, RieszParams(0.3, 2))
    assert capacity(k, []).primal_value == 0
    with pytest.raises(ValueError):
        CapacityProblem(k, [])
    with pytest.raises(IndexError):
        capacity(k, [3])
    with pytest.raises(ValueError):
        CapacityProblem(k, [0], tolerance=0)


def test_nonconvergence_is_flagged():
    sp = sg.random_cloud(np.random.default_rng(3), 30)
    r = capacity(assemble_kernel(sp, RieszParams(0.2, 3)), range(0, 30, 2), max_iter=2)
    assert not r.converged and r.iterations == 2
    assert r.primal_value >= r.dual_value


def test_dual_lower_bound_examples(S2, S3):
    k2 = assemble_kernel(S2, RieszParams(0.4, 3))
    assert dual_lower_bound(k2, [0], [1, 0]) == pytest.approx(1)
    k3 = assemble_kernel(S3, RieszParams(0.3, 2))
    assert dual_lower_bound(k3, [0], [1.0]) == pytest.approx(0.5)
    assert dual_lower_bound(k3, [0, 1], [0.2, 0.7]) == pytest.approx(dual_lower_bound(k3, [0, 1], [2, 7]))
    with pytest.raises(ValueError):
        dual_lower_bound(k3, [0], [0.0])
    with pytest.raises(ValueError):
        dual_lower_bound(k3, [0], [1, 1, 0])


@given(space_and_set(), st.integers(0, 2 ** 32 - 1), st.sampled_from([1.5, 2.0, 3.0]))
def test_weak_duality_any_measure(case, seed, p):
    sp, E = case
    k = assemble_kernel(sp, RieszParams(0.3, p))
    nu = np.random.default_rng(seed).random(len(E)) + 1e-3
    r = capacity(k, E)
    assert dual_lower_bound(k, E, nu) <= r.primal_value * (1 + 1e-12)


@given(space_and_set(2, 4), st.floats(0.1, 0.9))
def test_matches_enumeration_oracle(case, gamma):
    sp, E = case
    k = assemble_kernel(sp, RieszParams(gamma, 2))
    ref = oracles.qp_capacity_enum(k.K, sp.mass, E)
    assert capacity(k, E, 1e-9).primal_value == pytest.approx(ref, rel=1e-7)
    assert capacity_qp(k, E)[0] == pytest.approx(ref, rel=1e-9)


@given(space_and_set(2, 6), st.sampled_from([1.5, 3.0]))
def test_matches_nlp_oracle(case, p):
    sp, E = case
    k = assemble_kernel(sp, RieszParams(0.3, p))
    ref = oracles.nlp_capacity(k.K, sp.mass, E, p)
    val = capacity(k, E, 1e-8).primal_value
    assert val <= ref * (1 + 1e-6)
    assert val == pytest.approx(ref, rel=1e-4)


@given(space_and_set(2, 10))
def test_uniqueness_across_initializations(case):
    sp, E = case
    k = assemble_kernel(sp, RieszParams(0.35, 2.5))
    a = capacity(k, E, init="uniform")
    b = capacity(k, E, init="degree")
    assert a.primal_value == pytest.approx(b.primal_value, rel=10 * TOL)


@given(spaces(2, 10), st.data())
def test_monotone_and_subadditive(sp, data):
    o = CapacityOracle(assemble_kernel(sp, RieszParams(0.3, 2)))
    A = sorted(data.draw(st.sets(st.integers(0, sp.n - 1), min_size=1)))
    B = sorted(data.draw(st.sets(st.integers(0, sp.n - 1), min_size=1)))
    U = sorted(set(A) | set(B))
    assert o.upper(A) <= o.upper(U) + 2 * TOL * o.upper(U)
    assert o.lower(U) <= o.upper(A) + o.upper(B)


@given(spaces(2, 4), st.floats(0.2, 20), st.floats(0.1, 0.9))
def test_mass_scaling(sp, lam, gamma):
    params = RieszParams(gamma, 2)
    E = [0]
    base = oracles.qp_capacity_enum(assemble_kernel(sp, params).K, sp.mass, E)
    sc = sp.scaled(lam)
    scaled = oracles.qp_capacity_enum(assemble_kernel(sc, params).K, sc.mass, E)
    assert scaled == pytest.approx(lam ** (1 - params.gp) * base, rel=1e-9)
    assert capacity(assemble_kernel(sc, params), E, 1e-9).primal_value == pytest.approx(scaled, rel=1e-7)


def test_first_order_condition():
    sp = sg.random_cloud(np.random.default_rng(11), 12)
    k = assemble_kernel(sp, RieszParams(0.3, 2))
    E = [0, 3, 5]
    r = capacity(k, E, 1e-10)
    # directions in the span of constraint rows with I g >= 0 on E
    rng = np.random.default_rng(0)
    rows = (k.K[E] * sp.mass[None, :])
    dirs = [rows.T @ rng.normal(size=len(E)) for _ in range(200)]
    assert first_order_residual(k, E, r.primal_f, dirs) >= -1e-4


def test_active_set_qp_small():
    G = np.diag([2.0, 2.0])
    x, W, lam, _ = active_set_qp(G, np.zeros(2), np.array([[1.0, 1.0], [1.0, 0], [0, 1.0]]),
                                 np.array([1.0, 0, 0]), [1.0, 1.0])
    assert np.allclose(x, [0.5, 0.5])
    with pytest.raises(QPError):
        active_set_qp(G, np.zeros(2), np.array([[1.0, 1.0]]), np.array([5.0]), [0.0, 0.0])


def test_ball_admissible_examples(S2):
    params = RieszParams(0.25, 2)
    prof = doubling_profile(S2)
    g = ball_admissible(S2, prof, params, 0, 1.5)
    assert np.allclose(g, 4 * 3 ** 0.75 * 2 ** -0.25)
    assert g[0] == pytest.approx(7.667, abs=1e-3)
    assert potential(assemble_kernel(S2, params), g)[0] >= 1
    single = ball_admissible(S2, prof, params, 0, 0.5)
    assert single[1] == 0 and single[0] == pytest.approx(4 * 3 ** 0.75)
    assert ball_bound(S2, prof, params, 0, 1.5) == pytest.approx(83.138 * 2 ** 0.5, rel=1e-4)
    with pytest.raises(ValueError):
        ball_admissible(S2, prof, params, 0, 0.0)
    with pytest.raises(ValueError):
        ball_admissible(S2, prof, RieszParams(0.6, 2), 0, 1.5)


def test_balls_report_two_point(S2):
    rows = capacity_of_balls_report(S2, RieszParams(0.25, 2))
    full = [r for r in rows if r.ball_mass == 2]
    assert full and all(r.capacity == pytest.approx(2, rel=TOL) for r in full)
    assert all(r.ratio == pytest.approx(2 / 117.5755, rel=1e-4) for r in full)
    assert all(r.passed and r.test_margin >= 0 for r in rows)


def test_balls_report_scale_invariant(S3):
    params = RieszParams(0.3, 2)
    a = capacity_of_balls_report(S3, params)
    b = capacity_of_balls_report(S3.scaled(5.0), params)
    for ra, rb in zip(a, b):
        assert ra.ratio == pytest.approx(rb.ratio, rel=1e-5)


def test_critical_radii_distinct_balls(L4):
    rs = critical_radii(L4, 1)
    balls = [tuple(L4.ball_members(1, r)) for r in rs]
    assert len(set(balls)) == len(balls) == 3


def test_selfmass_solver_runs(S2):
    k = assemble_kernel(S2, RieszParams(0.5, 2), DiagonalMode.SELF_MASS)
    r = solve_capacity(CapacityProblem(k, [0, 1]))
    # K = ones, I f = f0 + f1 >= 1 on both: capacity 1/2
    assert r.primal_value == pytest.approx(0.5, rel=TOL)
