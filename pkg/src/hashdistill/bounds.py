"""Finite-size yield and rate lower bounds for one-way hashing.

With ``r = ceil(H0^eps1 - 2 log2 eps2)`` rounds the hashing method leaves
``m = n - r`` pairs within purified distance ``eps1 + eps2`` of perfect Bell
pairs. The split of ``eps`` into ``eps1 + eps2`` is a free parameter; the
optimizer scans it on a fine grid and polishes the best cell with a
bounded scalar search on the pre-ceiling objective.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .belldiag import BellDiagonalDistribution, IIDWernerSpec
from .entropy import SortedWeights, WeightClassProfile, hartley, shannon_and_asymptotic_rate

SPLIT_RESOLUTION = 1e-4


def epsilon_for_output_fidelity(f_out: float) -> float:
    """Purified-distance budget that guarantees output fidelity ``f_out``."""
    if not 0.0 < f_out < 1.0:
        raise ValueError(f"output fidelity must lie in (0, 1), got {f_out}")
    return math.sqrt(1.0 - f_out)


@dataclass(frozen=True)
class BoundReport:
    n: int
    eps: float
    eps1: float
    eps2: float
    h0_eps1: float
    rounds: int
    m: int
    rate: float
    m_nontight: int | None = None

    @property
    def guaranteed(self) -> bool:
        return self.m >= 1

    def as_dict(self) -> dict:
        d = asdict(self)
        d["guaranteed"] = self.guaranteed
        return d


def _smoother(source) -> tuple[int, object]:
    """``(n, object with .smooth(eps))`` for a Werner spec or a distribution."""
    if isinstance(source, IIDWernerSpec):
        return source.n, WeightClassProfile.build(source, any_fidelity=True)
    if isinstance(source, BellDiagonalDistribution):
        return source.n, SortedWeights(source)
    raise TypeError(f"cannot bound {type(source).__name__}")


def _rounds_needed(h0: float, eps2: float) -> int:
    """Rounds that certify ``eps2`` on a state of Hartley entropy ``h0``.

    A rank-one state is pure after a Pauli relabel, so it needs no rounds.
    """
    if h0 <= 0.0:
        return 0
    # guard against ceil(3.0000000000000004) style noise
    return math.ceil(h0 - 2.0 * math.log2(eps2) - 1e-12)


def _report(n, eps, eps1, eps2, h0, m_nontight=None) -> BoundReport:
    r = _rounds_needed(h0, eps2)
    m = n - r
    return BoundReport(n, eps, eps1, eps2, h0, r, m, m / n, m_nontight)


def nontight_yield(source, eps: float) -> int:
    """``n - ceil(H0 - 2 log2 eps)`` using the unsmoothed Hartley entropy."""
    if isinstance(source, IIDWernerSpec):
        h0 = 0.0 if source.fidelity == 1.0 else 2.0 * source.n
    else:
        h0 = hartley(source)
    n = source.n
    return n - _rounds_needed(h0, eps)


def _optimize_split(smoother, n: int, eps: float) -> tuple[float, float, float]:
    """Return ``(eps1, eps2, h0_eps1)`` maximizing the yield."""
    cells = max(2, int(math.ceil(eps / SPLIT_RESOLUTION)))
    cells += cells % 2  # keeps eps/2 on the grid
    grid = eps * np.arange(1, cells) / cells
    best = None
    cache: dict[float, float] = {}

    def h0(e1: float) -> float:
        if e1 not in cache:
            cache[e1] = smoother.smooth(e1).value
        return cache[e1]

    def objective(e1: float) -> float:
        return h0(e1) - 2.0 * math.log2(eps - e1)

    for e1 in grid:
        e1 = float(e1)
        val = objective(e1)
        key = (_rounds_needed(h0(e1), eps - e1), val)
        if best is None or key < best[0]:
            best = (key, e1)
    e1_best = best[1]
    # bounded scalar search on the continuous objective inside the neighbouring cells
    step = eps / cells
    lo, hi = max(e1_best - step, step * 1e-3), min(e1_best + step, eps - step * 1e-3)
    res = minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    e1 = float(res.x)
    key = (_rounds_needed(h0(e1), eps - e1), objective(e1))
    if key < best[0]:
        best = (key, e1)
    e1 = best[1]
    return e1, eps - e1, h0(e1)


def yield_lower_bound(
    source: IIDWernerSpec | BellDiagonalDistribution,
    eps: float,
    split: tuple[float, float] | str = "optimized",
) -> BoundReport:
    """Guaranteed number of output pairs at purified distance ``eps``.

    ``split`` is either an explicit ``(eps1, eps2)`` or ``"optimized"``. The
    returned ``m`` can be zero or negative, meaning no guarantee.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    n, smoother = _smoother(source)
    if isinstance(split, str):
        if split not in ("optimized", "auto"):
            raise ValueError(f"unknown split {split!r}")
        eps1, eps2, h0 = _optimize_split(smoother, n, eps)
    else:
        eps1, eps2 = (float(v) for v in split)
        if eps1 <= 0 or eps2 <= 0:
            raise ValueError("eps1 and eps2 must be positive")
        if eps1 + eps2 > eps * (1.0 + 1e-12):
            raise ValueError(f"eps1 + eps2 = {eps1 + eps2} exceeds eps = {eps}")
        h0 = smoother.smooth(eps1).value
    return _report(n, eps, eps1, eps2, h0, nontight_yield(source, eps))


def rate_lower_bound(source, eps: float, split="optimized") -> BoundReport:
    return yield_lower_bound(source, eps, split)


def single_pair_threshold(f_in: float, f_out: float, n_max: int = 1000) -> int | None:
    """Smallest ``n`` whose optimized bound guarantees one output pair."""
    if n_max > 100_000:
        raise ValueError("n_max is capped at 1e5")
    eps = epsilon_for_output_fidelity(f_out)
    if f_in == 1.0:
        return 1
    # Any eps1-smoothing keeps at least (1 - eps1**2) / F**n strings, so for
    # F <= 1/2 and eps**2 < 1/2 the bound stays below one pair for every n.
    if f_in <= 0.5 and eps * eps < 0.5:
        return None
    prev = None
    for n in range(1, n_max + 1):
        m = yield_lower_bound(IIDWernerSpec(f_in, n), eps).m
        if m >= 1:
            if prev is not None and prev >= 1:
                raise AssertionError("scan skipped a positive n")
            return n
        prev = m
    return None


@dataclass(frozen=True)
class CurveRow:
    f_in: float
    n: int
    eps1: float
    eps2: float
    h0_eps1: float
    m: int
    rate: float


def rate_curve(f_ins: Iterable[float], f_out: float, ns: Sequence[int]) -> list[CurveRow]:
    """Optimized bound on a ``(F_in, n)`` grid, F_in major and n minor."""
    eps = epsilon_for_output_fidelity(f_out)
    rows = []
    for f in f_ins:
        for n in ns:
            rep = yield_lower_bound(IIDWernerSpec(f, n), eps)
            rows.append(CurveRow(f, n, rep.eps1, rep.eps2, rep.h0_eps1, rep.m, rep.rate))
    return rows


def asymptotic_rate(f_in: float) -> float:
    return shannon_and_asymptotic_rate(f_in)[1]
