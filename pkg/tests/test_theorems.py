import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import space_and_set, spaces
from rieszcap import spacegen as sg
from rieszcap import theorems as T
from rieszcap.capacity import capacity
from rieszcap.kernel import RieszParams, assemble_kernel

P = RieszParams(0.25, 2)


def test_report_pass_rule():
    assert T.CheckReport("x", "", 1.0, 1.0, 1.0, 0.0).passed
    assert not T.CheckReport("x", "", 1.1, 1.0, 1.0, 0.01).passed
    r = T.CheckReport("x", "", 1.0, 1.0, 1.0, 0.01)
    assert r.passed and r.slack == 0


def test_capacity_le_content_examples(S2):
    r = T.check_capacity_le_content(S2, P, [0, 1])
    assert r.passed and r.lhs == pytest.approx(2, rel=1e-6)
    assert r.rhs == pytest.approx(83.1384 * math.sqrt(2), rel=1e-5)
    s = T.check_capacity_le_content(S2, P, [0])
    assert s.passed and s.rhs == pytest.approx(83.1384, rel=1e-5)
    v = T.check_capacity_le_content(S2, P, [])
    assert v.passed and v.note == "vacuous"


def test_content_bound_two_point(S2):
    pa, pb = RieszParams(0.45, 2), RieszParams(0.3, 2)
    cb = T.content_bound_from_admissible(S2, pa, pb, [0], [0, 1.0])
    assert cb.ok and not cb.failures and cb.content == pytest.approx(1)
    assert cb.bound >= cb.content and cb.dominates
    assert cb.selected and cb.selected[0][0] == 0
    cb2 = T.content_bound_from_admissible(S2, pa, pb, [0], [0, 2.0])
    assert cb2.bound == pytest.approx(4 * cb.bound, rel=1e-12)
    assert cb2.content == cb.content


def test_content_bound_errors(S2):
    pa, pb = RieszParams(0.45, 2), RieszParams(0.3, 2)
    with pytest.raises(ValueError, match="not admissible"):
        T.content_bound_from_admissible(S2, pa, pb, [0], [0, 0.5])
    with pytest.raises(ValueError):
        T.content_bound_from_admissible(S2, pb, pa, [0], [0, 1.0])
    with pytest.raises(ValueError):
        T.content_bound_from_admissible(S2, pa, pb, [], [0, 1.0])


def test_content_bound_cantor_depth4():
    sp = sg.cantor_dust(4)
    pa, pb = RieszParams(0.45, 2), RieszParams(0.3, 2)
    E = list(range(0, 16, 3))
    f = capacity(assemble_kernel(sp, pa), E).primal_f
    cb = T.content_bound_from_admissible(sp, pa, pb, E, f)
    assert cb.ok and cb.content_mode == "exact" and cb.dominates
    assert cb.cover_weight <= cb.bound
    for pt in cb.points:
        assert pt["lhs"] <= pt["rhs"] * (1 + 1e-12)


@given(space_and_set(3, 9), st.integers(0, 2 ** 32 - 1))
def test_content_bound_random_spaces(case, seed):
    sp, E = case
    pa, pb = RieszParams(0.4, 2), RieszParams(0.2, 2.5)
    f = capacity(assemble_kernel(sp, pa), E).primal_f
    f = f * (1 + np.random.default_rng(seed).random())
    cb = T.content_bound_from_admissible(sp, pa, pb, E, f)
    assert cb.ok and cb.dominates


def test_weak_type_examples(S3):
    params = RieszParams(0.3, 2)
    (r,) = T.check_weak_type(S3, params, [0, 1, 1], [0.9])
    assert r.lhs == pytest.approx(0.75, rel=1e-6) and r.rhs == pytest.approx(2 / 0.81)
    (e,) = T.check_weak_type(S3, params, [0, 1, 1], [10.0])
    assert e.lhs == 0 and e.passed
    (s,) = T.check_weak_type(S3, params, [0, 2, 2], [0.9])
    assert s.rhs == pytest.approx(4 * r.rhs)
    with pytest.raises(ValueError):
        T.check_weak_type(S3, params, [0, -1, 1])


@given(spaces(2, 9), st.integers(0, 2 ** 32 - 1), st.sampled_from([1.5, 2.0, 3.0]))
def test_weak_type_random(sp, seed, p):
    f = np.random.default_rng(seed).random(sp.n)
    reps = T.check_weak_type(sp, RieszParams(0.3, p), f)
    assert reps and all(r.passed for r in reps)


def test_axioms_two_point(S2):
    reps = T.check_axioms(S2, P, [[0], [1], [0, 1]])
    assert all(r.passed for r in reps)
    names = {r.check_name for r in reps}
    assert names >= {"empty", "monotone", "subadditive", "fatou_increasing", "fatou_limit",
                     "decreasing", "decreasing_limit", "liminf"}
    sub = [r for r in reps if r.check_name == "subadditive" and r.instance_id == "0+1"][0]
    assert sub.lhs == pytest.approx(2, rel=1e-6) and sub.rhs == pytest.approx(2, rel=1e-6)


def test_axioms_nested_grid():
    sp = sg.random_cloud(np.random.default_rng(4), 20, 2)
    fam = [list(range(k)) for k in (2, 5, 9, 14, 20)]
    reps = T.check_axioms(sp, RieszParams(0.3, 2), fam)
    assert all(r.passed for r in reps)


@given(spaces(2, 8), st.integers(0, 2 ** 32 - 1))
def test_axioms_random(sp, seed):
    rng = np.random.default_rng(seed)
    fam = [T.random_subset(rng, sp.n) for _ in range(3)]
    assert all(r.passed for r in T.check_axioms(sp, RieszParams(0.35, 2.5), fam))


def test_convergence_examples(S2):
    params = RieszParams(0.3, 2)
    es = [np.array([0, 2.0 ** -i]) for i in range(1, 6)]
    reps = T.check_convergence(S2, params, [0, 1.0], es)
    assert all(r.passed for r in reps)
    for i, r in enumerate(reps, 1):
        assert r.rhs == pytest.approx(2.0 ** (-i * params.p / 2))
    zero = T.check_convergence(S2, params, [0, 1.0], [np.zeros(2)] * 3)
    assert all(r.lhs == 0 and r.passed for r in zero)
    flipped = T.check_convergence(S2, params, [0, 1.0], [-e for e in es])
    assert [r.rhs for r in flipped] == [r.rhs for r in reps]
    assert [r.lhs for r in flipped] == [r.lhs for r in reps]


def test_convergence_explicit_eps():
    sp = sg.random_cloud(np.random.default_rng(5), 10)
    rng = np.random.default_rng(1)
    es = [rng.normal(size=10) * 2.0 ** -i for i in range(4)]
    reps = T.check_convergence(sp, RieszParams(0.3, 2), rng.random(10), es, eps=[0.05, 0.2])
    assert len(reps) == 8 and all(r.passed for r in reps)


def test_duality_examples(S2, S3):
    d2 = T.check_duality(S2, P, [[0]])
    assert all(r.passed for r in d2)
    assert [r for r in d2 if r.check_name == "duality_gap"][0].lhs <= 1e-12
    d3 = T.check_duality(S3, RieszParams(0.3, 2), [[0]])
    assert [r for r in d3 if r.check_name == "duality_gap"][0].lhs <= 1e-12
    sp = sg.random_cloud(np.random.default_rng(30), 30)
    assert all(r.passed for r in T.check_duality(sp, RieszParams(0.3, 2), [range(0, 30, 3)]))


def test_run_suite_deterministic_and_sorted(tmp_path):
    sp = sg.grid(2, 4, 1.0)
    params = RieszParams(0.3, 2)
    a = T.run_suite(sp, params, "all", seed=42, instances=2)
    b = T.run_suite(sp, params, "all", seed=42, instances=2, jobs=4)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]
    assert [(r.check_name, r.instance_id) for r in a] == sorted((r.check_name, r.instance_id) for r in a)
    assert all(r.passed for r in a)
    assert {r.check_name for r in a} >= {"content_bound", "capacity_le_content", "weak_type", "duality_gap"}
    path = tmp_path / "r.csv"
    T.reports_csv(a, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == T.CSV_FIELDS and len(rows) == len(a) + 1
    with pytest.raises(ValueError):
        T.run_suite(sp, params, "nope")


def test_run_suite_content_vacuous_supercritical(S2):
    reps = T.run_suite(S2, RieszParams(0.6, 2), "content", instances=1)
    assert all(r.passed for r in reps) and "vacuous" in reps[0].note
