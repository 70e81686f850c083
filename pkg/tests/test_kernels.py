import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hashdistill import kernels
from hashdistill.protocol import round_linear_maps

from .conftest import round_strings

try:
    compiled = kernels.backend_module("cython")
except ImportError:  # extension not built
    compiled = None
pure = kernels.backend_module("python")

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def _maps(s, variant):
    m = round_linear_maps(s, variant)
    return np.array(m.transform, dtype=np.uint64), m


@given(st.integers(1, 6).flatmap(round_strings), st.sampled_from(["cnot", "cz"]))
def test_destination_index_matches_linear_map(s, variant):
    cols, m = _maps(s, variant)
    dest = pure.destination_index(cols, m.j_star)
    half = 4 ** (s.n - 1)
    for x in range(0, 4**s.n, max(1, 4**s.n // 64)):
        y = m.apply(x)
        assert dest[x] == m.parity_of_transformed(y) * half + m.project(y)


@needs_ext
@given(st.integers(1, 7).flatmap(round_strings), st.sampled_from(["cnot", "cz"]),
       st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_backends_agree(s, variant, branches, seed):
    cols, m = _maps(s, variant)
    w = np.random.default_rng(seed).random((branches, 4**s.n))
    assert np.array_equal(compiled.destination_index(cols, m.j_star), pure.destination_index(cols, m.j_star))
    a = compiled.split_round(w, cols, m.j_star)
    b = pure.split_round(w, cols, m.j_star)
    assert a.shape == b.shape == (2 * branches, 4 ** (s.n - 1))
    assert np.allclose(a, b, rtol=1e-14, atol=0)
    assert compiled.branch_max_sum(a) == pytest.approx(pure.branch_max_sum(b), rel=1e-14)


def test_split_rejects_bad_shape():
    cols = np.array([1, 2, 4, 8], dtype=np.uint64)
    with pytest.raises(ValueError):
        pure.split_round(np.ones((1, 8)), cols, 0)


def test_pure_switch_in_subprocess():
    env = dict(os.environ, HASHDISTILL_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "from hashdistill import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


@needs_ext
def test_default_backend_is_compiled():
    assert kernels.BACKEND == "cython"
