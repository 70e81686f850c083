from __future__ import annotations

import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hashdistill.belldiag import BellDiagonalDistribution
from hashdistill.protocol import RoundString

settings.register_profile(
    "repo", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


@st.composite
def distributions(draw, n_min: int = 1, n_max: int = 3):
    n = draw(st.integers(n_min, n_max))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    w = rng.random(4**n) ** 3  # skewed, so MAP choices are not ties
    return BellDiagonalDistribution(n, w / w.sum())


@st.composite
def round_strings(draw, n: int):
    mask = draw(st.integers(1, 4**n - 1))
    return RoundString.from_int(mask, n)


@st.composite
def schedules(draw, n: int, max_rounds: int | None = None):
    top = n - 1 if max_rounds is None else min(max_rounds, n - 1)
    r = draw(st.integers(0, top))
    return [draw(round_strings(n - k)) for k in range(r)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
