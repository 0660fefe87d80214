import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from rieszcap import spacegen as sg
from rieszcap.kernel import RieszParams, assemble_kernel, potential
from rieszcap.mmspace import doubling_profile


def test_grid(L4):
    assert np.array_equal(L4.dist, np.abs(np.subtract.outer(np.arange(4.0), np.arange(4.0))))
    sp = sg.grid(2, 2, 1.0)
    assert doubling_profile(sp).c_d <= 4
    g3 = sg.grid(3, 3, 0.5)
    assert g3.total_mass() == pytest.approx(27 * 0.125)
    for bad in [(4, 2, 1), (1, 1, 1), (3, 30, 1)]:
        with pytest.raises(ValueError):
            sg.grid(*bad)


def test_cantor():
    c1 = sg.cantor_dust(1)
    assert c1.n == 2 and c1.dist[0, 1] == pytest.approx(2 / 3) and np.all(c1.mass == 0.5)
    for depth in (3, 4, 5):
        sp = sg.cantor_dust(depth)
        assert sp.n == 2 ** depth and sp.total_mass() == pytest.approx(1)
        assert 2 <= doubling_profile(sp).c_d <= 4
    with pytest.raises(ValueError):
        sg.cantor_dust(11)


def test_weighted_line():
    w0 = sg.weighted_line(8, 0.0)
    g = sg.grid(1, 8, 1 / 8)
    assert np.allclose(w0.dist, g.dist) and np.allclose(w0.mass, 1 / 8)
    w1 = sg.weighted_line(4, 1.0)
    assert w1.total_mass() == pytest.approx(1)
    assert np.allclose(w1.mass[1:] / w1.mass[1], [1, 2, 3])
    assert 0 < w1.mass[0] < w1.mass[1]
    cds = [doubling_profile(sg.weighted_line(32, a)).c_d for a in (0.0, 1.0, 3.0)]
    assert cds == sorted(cds)
    with pytest.raises(ValueError):
        sg.weighted_line(8, -1.0)


@given(st.floats(0.05, 1.0))
def test_snowflake(eps):
    base = sg.grid(2, 3, 1.0)
    sf = sg.snowflake(base, eps)
    assert doubling_profile(sf).c_d == doubling_profile(base).c_d
    for x in range(base.n):
        for r in (0.5, 1.2, 1.7, 2.1, 3.0):
            assert list(base.ball_members(x, r)) == list(sf.ball_members(x, r ** eps))
    with pytest.raises(ValueError):
        sg.snowflake(base, 0.0)


def test_snowflake_identity():
    base = sg.cantor_dust(3)
    assert np.allclose(sg.snowflake(base, 1.0).dist, base.dist)


def test_json_round_trip(tmp_path, S2):
    path = tmp_path / "s2.json"
    sg.save_space(S2, path)
    back = sg.load_space(path)
    assert np.array_equal(back.dist, S2.dist) and np.array_equal(back.mass, S2.mass)
    assert back.labels == ["a", "b"]


def test_json_points_and_snowflake():
    sp = sg.space_from_dict({"points": [[0, 0], [3, 4]], "mass": [1, 2]})
    assert sp.dist[0, 1] == 5
    sf = sg.space_from_dict({"points": [[0], [4]], "mass": [1, 1], "metric": "snowflake", "epsilon": 0.5})
    assert sf.dist[0, 1] == pytest.approx(2)


@pytest.mark.parametrize("doc,msg", [
    ({"dist": [[0, 1], [1, 0]], "mass": [1, -1]}, r"mass\[1\]"),
    ({"dist": [[0, 1], [2, 0]], "mass": [1, 1]}, r"dist\[0\]\[1\]"),
    ({"dist": [[0, 1], [1, 0]]}, "'mass' is required"),
    ({"dist": [[0, 1], [1, 0]], "points": [[0], [1]], "mass": [1, 1]}, "exactly one"),
    ({"dist": [[0, 1], [1]], "mass": [1, 1]}, r"dist\[1\]"),
    ({"points": [[0], [1]], "mass": [1]}, "length 1, expected 2"),
    ({"points": [[0], [1]], "mass": [1, 1], "metric": "snowflake", "epsilon": 2}, "epsilon"),
    ({"points": [[0], [1]], "mass": [1, "x"]}, r"mass\[1\]"),
    ([1, 2], "object"),
])
def test_json_rejects(doc, msg):
    with pytest.raises(sg.SpaceFormatError, match=msg):
        sg.space_from_dict(doc)


def test_load_reports_json_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"mass": [1, 2],\n "dist": [[0, 1] [1, 0]]}')
    with pytest.raises(sg.SpaceFormatError, match="line 2 column"):
        sg.load_space(path)


@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 30))
def test_random_cloud_valid(seed, n):
    sp = sg.random_cloud(np.random.default_rng(seed), n)
    assert sp.n == n and np.all((sp.mass >= 0.1) & (sp.mass <= 10))


def test_euclidean_midpoint_cross_check():
    sp = sg.grid(1, 256, 1 / 256)
    val = potential(assemble_kernel(sp, RieszParams(0.5, 2)), np.ones(sp.n))[128]
    ref = oracles.euclidean_midpoint_potential(0.5)
    assert ref == pytest.approx(2.0, rel=1e-8)
    assert abs(val - ref) / ref <= 0.05
