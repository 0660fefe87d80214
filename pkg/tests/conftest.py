import os
import sys

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from rieszcap import spacegen as sg  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def S2():
    return sg.two_point()


@pytest.fixture
def S3():
    return sg.equilateral()


@pytest.fixture
def L4():
    return sg.grid(1, 4, 1.0)


@st.composite
def spaces(draw, min_n=2, max_n=8):
    """Random Euclidean clouds with masses in [0.1, 10]."""
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    return sg.random_cloud(rng, n)


@st.composite
def space_and_set(draw, min_n=2, max_n=8):
    sp = draw(spaces(min_n, max_n))
    E = draw(st.sets(st.integers(0, sp.n - 1), min_size=1))
    return sp, sorted(E)
