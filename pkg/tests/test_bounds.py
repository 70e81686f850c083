import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hashdistill.belldiag import IIDWernerSpec, werner_distribution
from hashdistill.bounds import (
    asymptotic_rate,
    epsilon_for_output_fidelity,
    nontight_yield,
    rate_curve,
    rate_lower_bound,
    single_pair_threshold,
    yield_lower_bound,
)
from hashdistill.entropy import smooth_hartley_generic


def test_epsilon_examples():
    assert epsilon_for_output_fidelity(0.99) == pytest.approx(0.1)
    assert epsilon_for_output_fidelity(0.75) == pytest.approx(0.5)
    assert epsilon_for_output_fidelity(0.9999) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        epsilon_for_output_fidelity(1.0)


def test_noiseless_input():
    rep = yield_lower_bound(IIDWernerSpec(1.0, 5), 0.1, (0.01, 0.09))
    assert rep.rounds == 0 and rep.m == 5
    assert rate_lower_bound(IIDWernerSpec(1.0, 10), 0.1).rate == 1.0


def test_short_block_has_no_guarantee():
    rep = yield_lower_bound(IIDWernerSpec(0.9, 2), 0.1)
    assert rep.m < 0 and not rep.guaranteed


def test_explicit_split_frozen():
    rep = yield_lower_bound(IIDWernerSpec(0.99, 25), 0.1, (0.07, 0.03))
    assert rep.h0_eps1 == pytest.approx(11.253847485, abs=1e-9)
    assert rep.rounds == 22 and rep.m == 3


def test_optimized_split_frozen():
    rep = yield_lower_bound(IIDWernerSpec(0.99, 25), 0.1)
    assert rep.m == 5 and rep.rounds == 20
    assert rep.eps1 + rep.eps2 <= 0.1 * (1 + 1e-12)


def test_split_validation():
    with pytest.raises(ValueError):
        yield_lower_bound(IIDWernerSpec(0.9, 5), 0.1, (0.08, 0.08))
    with pytest.raises(ValueError):
        yield_lower_bound(IIDWernerSpec(0.9, 5), 0.1, (0.0, 0.1))
    with pytest.raises(ValueError):
        yield_lower_bound(IIDWernerSpec(0.9, 5), 1.5)


def test_depolarized_input_never_guaranteed():
    for n in (10, 200, 3000):
        assert rate_lower_bound(IIDWernerSpec(0.25, n), 0.5).rate < 0


@pytest.mark.parametrize("f", [0.8, 0.9, 0.99])
@pytest.mark.parametrize("n", [2, 5, 8])
@pytest.mark.parametrize("eps", [0.05, 0.1, 0.3])
def test_report_matches_generic_recomputation(f, n, eps):
    spec = IIDWernerSpec(f, n)
    rep = yield_lower_bound(spec, eps)
    h0 = smooth_hartley_generic(werner_distribution(spec), rep.eps1).value
    # a rank-one smoothed state is already perfect up to eps1: no rounds
    rounds = 0 if h0 == 0 else math.ceil(h0 - 2 * math.log2(rep.eps2) - 1e-12)
    assert rep.m == n - rounds
    assert rep.m <= n and rep.rate <= 1
    naive = yield_lower_bound(spec, eps, (eps / 2, eps / 2))
    assert rep.m >= naive.m
    assert nontight_yield(spec, eps) <= rep.m


def test_distribution_source_matches_spec():
    spec = IIDWernerSpec(0.95, 6)
    a = yield_lower_bound(spec, 0.1, (0.05, 0.05))
    b = yield_lower_bound(werner_distribution(spec), 0.1, (0.05, 0.05))
    assert (a.h0_eps1, a.m) == (pytest.approx(b.h0_eps1), b.m)


def test_threshold_examples():
    assert single_pair_threshold(1.0, 0.99) == 1
    assert single_pair_threshold(0.25, 0.99) is None
    n = single_pair_threshold(0.99, 0.99)
    assert 18 <= n <= 30
    assert yield_lower_bound(IIDWernerSpec(0.99, n - 1), 0.1).m < 1
    with pytest.raises(ValueError):
        single_pair_threshold(0.9, 0.99, n_max=200_000)


def test_threshold_none_below_cap():
    assert single_pair_threshold(0.6, 0.99, n_max=20) is None


def test_rate_curve_layout_and_consistency():
    rows = rate_curve([0.95, 0.99], 0.99, [20, 50, 100])
    assert [(r.f_in, r.n) for r in rows] == [(f, n) for f in (0.95, 0.99) for n in (20, 50, 100)]
    single = yield_lower_bound(IIDWernerSpec(0.99, 50), epsilon_for_output_fidelity(0.99))
    row = rows[4]
    assert (row.m, row.eps1) == (single.m, single.eps1)


def test_rate_curve_non_decreasing_after_threshold():
    ns = list(range(20, 400, 7))
    rows = rate_curve([0.99], 0.99, ns)
    ms = [r.m for r in rows]
    first = next(i for i, m in enumerate(ms) if m >= 1)
    for a, b in zip(ms[first:], ms[first + 1 :]):
        assert b >= a - 1


def test_rate_approaches_asymptote_from_below():
    target = asymptotic_rate(0.99)
    rates = [rate_lower_bound(IIDWernerSpec(0.99, n), 0.1).rate for n in (100, 1000, 10_000)]
    assert rates == sorted(rates)
    assert all(r < target for r in rates)
    assert target - rates[-1] < 0.05


@given(st.floats(0.3, 0.999), st.integers(1, 60), st.floats(0.02, 0.9))
def test_report_invariants(f, n, eps):
    rep = yield_lower_bound(IIDWernerSpec(f, n), eps)
    assert 0 < rep.eps1 and 0 < rep.eps2
    assert rep.eps1 + rep.eps2 <= eps * (1 + 1e-12)
    assert rep.m == n - rep.rounds and rep.m <= n
