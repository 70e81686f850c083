"""Exact simulation of hashing rounds on dense Bell-diagonal distributions.

The tracked object is a stack of unnormalized branch distributions, one per
outcome history. A round maps every branch through the same linear relabeling
and splits it in two by the measured parity, so after ``k`` rounds there are
``2**k`` rows of ``4**(n-k)`` weights and each round touches ``4**n / 2**k``
numbers. At the leaves, MAP post-processing makes the most likely residual
string the target, so a leaf contributes its largest weight.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .belldiag import (
    DENSE_MAX_PAIRS,
    BellDiagonalDistribution,
    IIDWernerSpec,
    classical_fidelity_and_purified_distance,
    werner_distribution,
)
from .protocol import RoundString, Variant, round_linear_maps, sample_schedule

MASS_CHECK_TOL = 1e-10
MODE_ALIASES = {"exact": "exact-branch", "sampled": "sampled-syndrome"}


def _dense_weights(p: BellDiagonalDistribution) -> np.ndarray:
    if p.n > DENSE_MAX_PAIRS:
        raise ValueError(f"exact simulation needs n <= {DENSE_MAX_PAIRS}, got {p.n}")
    return p.dense


def _check_schedule(n: int, schedule: Sequence[RoundString]) -> None:
    if len(schedule) >= n and n > 0:
        raise ValueError(f"need fewer rounds than pairs (n={n}, rounds={len(schedule)})")
    for k, s in enumerate(schedule):
        if s.n != n - k:
            raise ValueError(f"round {k} string covers {s.n} pairs, {n - k} are live")


def _round_columns(s: RoundString, variant: Variant | str) -> tuple[np.ndarray, int]:
    maps = round_linear_maps(s, variant)
    return np.array(maps.transform, dtype=np.uint64), maps.j_star


def evolve_branches(
    p: BellDiagonalDistribution,
    schedule: Sequence[RoundString],
    variant: Variant | str,
    check_mass: bool = False,
) -> np.ndarray:
    """Leaf branch weights after all rounds, shape ``(2**r, 4**(n-r))``.

    Row index is the parity history read as a binary number, first round most
    significant.
    """
    _check_schedule(p.n, schedule)
    w = _dense_weights(p).reshape(1, -1)
    for s in schedule:
        cols, t = _round_columns(s, variant)
        before = w.sum(axis=1) if check_mass else None
        w = kernels.split_round(w, cols, t)
        if check_mass:
            after = w.reshape(len(before), 2, -1).sum(axis=(1, 2))
            if np.max(np.abs(after - before)) > MASS_CHECK_TOL:
                raise AssertionError("branch masses do not add up")
    return w


def run_trial_exact_branch(
    p: BellDiagonalDistribution,
    schedule: Sequence[RoundString],
    variant: Variant | str = Variant.CNOT,
) -> float:
    """Expected MAP output fidelity of one schedule, averaged over all outcomes."""
    leaves = evolve_branches(p, schedule, variant)
    return float(kernels.branch_max_sum(leaves))


def run_trial_sampled(
    p: BellDiagonalDistribution,
    schedule: Sequence[RoundString],
    variant: Variant | str,
    rng: np.random.Generator,
) -> float:
    """Posterior mass of the MAP residual for one sampled true error string."""
    _check_schedule(p.n, schedule)
    w = _dense_weights(p)
    total = w.sum()
    x = int(np.searchsorted(np.cumsum(w), rng.random() * total, side="right"))
    x = min(x, len(w) - 1)
    track = (w / total).reshape(1, -1)
    for s in schedule:
        maps = round_linear_maps(s, variant)
        y = maps.apply(x)
        parity = maps.parity_of_transformed(y)
        x = maps.project(y)
        branches = kernels.split_round(track, np.array(maps.transform, dtype=np.uint64), maps.j_star)
        track = branches[parity : parity + 1]
        mass = track.sum()
        track = track / mass
    return float(track.max())


@dataclass(frozen=True)
class TruncationPolicy:
    kind: str = "none"  # "none" | "top-k" | "mass"
    value: float = 0.0

    @classmethod
    def parse(cls, text: str | None) -> "TruncationPolicy":
        if not text or text == "none":
            return cls()
        kind, _, value = text.partition(":")
        if kind not in ("top-k", "mass"):
            raise ValueError(f"unknown truncation {text!r}; use none, top-k:K or mass:DELTA")
        return cls(kind, float(value))


def truncate(
    p: BellDiagonalDistribution, policy: TruncationPolicy
) -> tuple[BellDiagonalDistribution, float]:
    """Keep the heaviest strings and renormalize; return the purified distance paid."""
    w = _dense_weights(p)
    if policy.kind == "none":
        return p, 0.0
    order = np.argsort(-w, kind="stable")
    if policy.kind == "top-k":
        keep = int(policy.value)
        if keep < 1:
            raise ValueError("top-k truncation must keep at least one string")
    else:
        delta = policy.value
        if not 0.0 <= delta < 1.0:
            raise ValueError("mass truncation needs 0 <= delta < 1")
        csum = np.cumsum(w[order])
        keep = int(np.searchsorted(csum, (1.0 - delta) * csum[-1] - 1e-15, side="left")) + 1
    keep = min(keep, len(w))
    q = np.zeros_like(w)
    q[order[:keep]] = w[order[:keep]]
    retained = q.sum()
    if retained <= 0:
        raise ValueError("truncation retained no mass")
    if keep == len(w) or retained >= w.sum():
        return p, 0.0
    q /= retained
    _, dist = classical_fidelity_and_purified_distance(w, q)
    return BellDiagonalDistribution(p.n, q), dist


def certified_lower_bound(f_sim: float, eps_trunc: float) -> float:
    """Fidelity floor for the untruncated input from the purified-distance triangle inequality."""
    d = math.sqrt(max(0.0, 1.0 - f_sim)) + eps_trunc
    if d >= 1.0:
        return 0.0
    return 1.0 - d * d


@dataclass
class SimulationConfig:
    n: int
    fidelity: float | None = None
    distribution: BellDiagonalDistribution | None = None
    rounds: Sequence[int] = (1,)
    trials: int = 1
    variant: Variant = Variant.CNOT
    mode: str = "exact-branch"  # "exact-branch" | "sampled-syndrome"
    truncation: TruncationPolicy = field(default_factory=TruncationPolicy)
    seed: int = 0

    def __post_init__(self) -> None:
        self.variant = Variant(self.variant)
        if isinstance(self.rounds, int):
            self.rounds = (self.rounds,)
        self.rounds = tuple(int(r) for r in self.rounds)
        if (self.fidelity is None) == (self.distribution is None):
            raise ValueError("give exactly one of fidelity or distribution")
        if self.distribution is not None and self.distribution.n != self.n:
            raise ValueError("distribution pair count differs from n")
        if self.n < 1 or self.n > DENSE_MAX_PAIRS:
            raise ValueError(f"n must lie in [1, {DENSE_MAX_PAIRS}]")
        if any(not 0 <= r < self.n for r in self.rounds):
            raise ValueError("every round count must satisfy 0 <= r < n")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        self.mode = MODE_ALIASES.get(self.mode, self.mode)
        if self.mode not in ("exact-branch", "sampled-syndrome"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def input_distribution(self) -> BellDiagonalDistribution:
        if self.distribution is not None:
            return self.distribution
        return werner_distribution(IIDWernerSpec(self.fidelity, self.n))


@dataclass
class SimulationResult:
    n: int
    rounds: int
    trials: int
    mean_fidelity: float
    std_err: float
    reference: float | None
    eps_trunc: float
    f_lb: float
    per_trial: np.ndarray = field(repr=False, default=None)

    @property
    def crosses_reference(self) -> bool:
        return self.reference is not None and self.mean_fidelity > self.reference


def trial_rng(seed: int, rounds: int, trial: int) -> np.random.Generator:
    """Independent stream per ``(rounds, trial)``, fixed by the seed alone."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rounds, trial)))


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("HASHDISTILL_THREADS", "1")))
    except ValueError:
        return 1


def _one_trial(q, cfg: SimulationConfig, r: int, t: int) -> float:
    rng = trial_rng(cfg.seed, r, t)
    schedule = sample_schedule(cfg.n, r, rng)
    if cfg.mode == "exact-branch":
        return run_trial_exact_branch(q, schedule, cfg.variant)
    return run_trial_sampled(q, schedule, cfg.variant, rng)


def run_experiment(cfg: SimulationConfig) -> list[SimulationResult]:
    """One result per requested round count, trials drawn with fresh schedules."""
    p = cfg.input_distribution()
    q, eps_trunc = truncate(p, cfg.truncation)
    threads = _thread_count()
    results = []
    for r in cfg.rounds:
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                vals = list(pool.map(lambda t: _one_trial(q, cfg, r, t), range(cfg.trials)))
        else:
            vals = [_one_trial(q, cfg, r, t) for t in range(cfg.trials)]
        arr = np.array(vals)
        mean = float(arr.mean())
        se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
        ref = cfg.fidelity ** (cfg.n - r) if cfg.fidelity is not None else None
        results.append(
            SimulationResult(
                n=cfg.n,
                rounds=r,
                trials=cfg.trials,
                mean_fidelity=mean,
                std_err=se,
                reference=ref,
                eps_trunc=eps_trunc,
                f_lb=certified_lower_bound(mean, eps_trunc) if eps_trunc > 0 else mean,
                per_trial=arr,
            )
        )
    return results
