import math
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hashdistill.belldiag import BellDiagonalDistribution, IIDWernerSpec, werner_distribution
from hashdistill.protocol import RoundString, Variant, sample_schedule
from hashdistill.simulator import (
    SimulationConfig,
    TruncationPolicy,
    certified_lower_bound,
    evolve_branches,
    run_experiment,
    run_trial_exact_branch,
    run_trial_sampled,
    trial_rng,
    truncate,
)

from .conftest import distributions, schedules


def test_perfect_input():
    p = werner_distribution(IIDWernerSpec(1.0, 6))
    sched = sample_schedule(6, 4, np.random.default_rng(1))
    assert run_trial_exact_branch(p, sched, "cnot") == pytest.approx(1.0)
    assert run_trial_sampled(p, sched, "cz", np.random.default_rng(2)) == pytest.approx(1.0)


def test_no_rounds_single_pair():
    p = werner_distribution(IIDWernerSpec(0.8, 1))
    assert run_trial_exact_branch(p, [], "cnot") == pytest.approx(0.8)


def test_frozen_two_pair_value():
    p = werner_distribution(IIDWernerSpec(0.9, 2))
    val = run_trial_exact_branch(p, [RoundString.parse("01 01")], Variant.CNOT)
    assert val == pytest.approx(0.8422222222222222, abs=1e-12)


def test_schedule_validation():
    p = werner_distribution(IIDWernerSpec(0.9, 3))
    with pytest.raises(ValueError):
        run_trial_exact_branch(p, [RoundString.parse("01 01")], "cnot")
    with pytest.raises(ValueError):
        run_trial_exact_branch(p, [RoundString.parse("01 01 01"), RoundString.parse("01 01"),
                                   RoundString.parse("11")], "cnot")
    sparse = BellDiagonalDistribution(14, {0: 1.0})
    with pytest.raises(ValueError):
        run_trial_exact_branch(sparse, [], "cnot")


@given(st.data())
def test_mass_conservation(data):
    p = data.draw(distributions(1, 5))
    sched = data.draw(schedules(p.n))
    leaves = evolve_branches(p, sched, data.draw(st.sampled_from(["cnot", "cz"])), check_mass=True)
    assert leaves.shape == (2 ** len(sched), 4 ** (p.n - len(sched)))
    assert leaves.sum() == pytest.approx(1.0, abs=1e-10)
    assert run_trial_exact_branch(p, sched, "cnot") <= 1.0 + 1e-12


def test_rank_one_leaf_is_perfect():
    # a point mass stays a point mass: every leaf is rank one
    p = BellDiagonalDistribution.point_mass(4, 0b10_01_11_00)
    sched = sample_schedule(4, 3, np.random.default_rng(5))
    assert run_trial_exact_branch(p, sched, "cz") == pytest.approx(1.0)


def test_sampled_is_unbiased():
    p = werner_distribution(IIDWernerSpec(0.9, 4))
    sched = [RoundString.parse("01 11 00 10"), RoundString.parse("11 01 01")]
    exact = run_trial_exact_branch(p, sched, "cnot")
    rng = np.random.default_rng(2024)
    vals = np.array([run_trial_sampled(p, sched, "cnot", rng) for _ in range(10_000)])
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - exact) < 3 * se


def test_seeded_experiment_is_reproducible():
    cfg = SimulationConfig(n=5, fidelity=0.9, rounds=(1, 3), trials=12, mode="sampled-syndrome", seed=9)
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    for x, y in zip(a, b):
        assert np.array_equal(x.per_trial, y.per_trial)


def test_single_trial_equals_direct_call():
    cfg = SimulationConfig(n=5, fidelity=0.92, rounds=(3,), trials=1, seed=4)
    res = run_experiment(cfg)[0]
    sched = sample_schedule(5, 3, trial_rng(4, 3, 0))
    p = werner_distribution(IIDWernerSpec(0.92, 5))
    assert res.mean_fidelity == run_trial_exact_branch(p, sched, "cnot")
    assert res.f_lb == res.mean_fidelity and res.eps_trunc == 0.0
    assert res.reference == pytest.approx(0.92**2)


def test_threads_do_not_change_results(monkeypatch):
    cfg = SimulationConfig(n=6, fidelity=0.9, rounds=(2, 4), trials=16, seed=3)
    serial = run_experiment(cfg)
    monkeypatch.setenv("HASHDISTILL_THREADS", "4")
    threaded = run_experiment(cfg)
    for x, y in zip(serial, threaded):
        assert np.array_equal(x.per_trial, y.per_trial)


def test_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig(n=4, fidelity=0.9, rounds=(4,))
    with pytest.raises(ValueError):
        SimulationConfig(n=4, fidelity=0.9, trials=0)
    with pytest.raises(ValueError):
        SimulationConfig(n=4)
    with pytest.raises(ValueError):
        SimulationConfig(n=4, fidelity=0.9, mode="guess")
    with pytest.raises(ValueError):
        SimulationConfig(n=14, fidelity=0.9)
    assert SimulationConfig(n=4, fidelity=0.9, mode="sampled").mode == "sampled-syndrome"


def test_explicit_distribution_has_no_reference():
    p = werner_distribution(IIDWernerSpec(0.9, 3))
    res = run_experiment(SimulationConfig(n=3, distribution=p, rounds=(1,), trials=2))[0]
    assert res.reference is None and not res.crosses_reference


def test_truncation_examples():
    p = werner_distribution(IIDWernerSpec(0.9, 2))
    q, eps = truncate(p, TruncationPolicy.parse("none"))
    assert q is p and eps == 0.0
    q, eps = truncate(p, TruncationPolicy.parse("top-k:6"))
    assert eps == pytest.approx(0.2)
    assert np.count_nonzero(q.dense) == 6 and q.total_mass == pytest.approx(1.0)
    point = BellDiagonalDistribution.point_mass(2, 5)
    q, eps = truncate(point, TruncationPolicy("top-k", 1))
    assert eps == 0.0 and np.array_equal(q.dense, point.dense)
    q, eps = truncate(p, TruncationPolicy.parse("mass:0"))
    assert eps == 0.0
    with pytest.raises(ValueError):
        TruncationPolicy.parse("keep:3")
    with pytest.raises(ValueError):
        truncate(p, TruncationPolicy("top-k", 0))


@given(st.floats(1e-6, 0.3), st.integers(2, 6))
def test_mass_truncation_distance(delta, n):
    p = werner_distribution(IIDWernerSpec(0.9, n))
    q, eps = truncate(p, TruncationPolicy("mass", delta))
    retained = p.dense[q.dense > 0].sum()
    assert retained >= 1 - delta - 1e-12
    assert eps == pytest.approx(math.sqrt(max(0.0, 1 - retained)), abs=1e-7)


def test_certified_lower_bound():
    assert certified_lower_bound(0.96, 0.0) == pytest.approx(0.96)
    assert certified_lower_bound(0.96, 0.1) == pytest.approx(1 - (0.2 + 0.1) ** 2)
    assert certified_lower_bound(0.1, 0.5) == 0.0


def test_truncated_run_reports_bound():
    cfg = SimulationConfig(
        n=6, fidelity=0.9, rounds=(3,), trials=4, truncation=TruncationPolicy("mass", 1e-3), seed=1
    )
    res = run_experiment(cfg)[0]
    assert res.eps_trunc > 0
    assert res.f_lb == pytest.approx(certified_lower_bound(res.mean_fidelity, res.eps_trunc))
    assert 0 <= res.f_lb <= res.mean_fidelity


@pytest.mark.parametrize("n,r", [(3, 1), (3, 2), (4, 2)])
def test_variants_agree_on_average_over_all_schedules(n, r):
    # per schedule the formulations can differ; summed over every schedule they do not
    import itertools

    w = np.random.default_rng(n + r).random(4**n) ** 3
    p = BellDiagonalDistribution(n, w / w.sum())
    totals = {"cnot": 0.0, "cz": 0.0}
    count = 0
    for masks in itertools.product(*[range(1, 4 ** (n - k)) for k in range(r)]):
        sched = [RoundString.from_int(m, n - k) for k, m in enumerate(masks)]
        count += 1
        for v in totals:
            totals[v] += run_trial_exact_branch(p, sched, v)
    assert totals["cnot"] / count == pytest.approx(totals["cz"] / count, abs=1e-12)


@pytest.mark.parametrize("n", [4, 8])
def test_expected_fidelity_grows_with_rounds(n):
    cfg = SimulationConfig(n=n, fidelity=0.8, rounds=tuple(range(n)), trials=200, seed=1)
    means = [r.mean_fidelity for r in run_experiment(cfg)]
    assert all(b >= a for a, b in zip(means, means[1:]))
