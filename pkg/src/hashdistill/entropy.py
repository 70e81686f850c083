"""Hartley, smooth Hartley and Shannon entropies of error distributions.

The smooth Hartley entropy of a normalized distribution is ``log2 k`` for the
smallest ``k`` whose ``k`` heaviest outcomes carry mass at least ``1 - eps**2``.
For IID Werner inputs all strings with the same number of nonzero labels
share one weight, so the sorted weights come in ``n + 1`` classes and the
minimal ``k`` follows from class sums alone, in log domain for large ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .belldiag import ZERO_WEIGHT, BellDiagonalDistribution, IIDWernerSpec

# Slack when comparing retained mass against 1 - eps**2, shared by both solvers
# so that mathematically exact ties resolve the same way.
THRESHOLD_SLACK = 1e-12
LN2 = math.log(2.0)
EXACT_K_LIMIT = 2**63


@dataclass(frozen=True)
class SmoothHartleyResult:
    value: float  # bits
    k: int | None  # exact count when representable
    log2_k: float
    retained_mass: float
    boundary_class: int | None = None
    boundary_fraction: float | None = None


def hartley(p: BellDiagonalDistribution) -> float:
    """``log2`` of the support size."""
    if p.is_dense:
        count = int(np.count_nonzero(p.dense > ZERO_WEIGHT))
    else:
        count = sum(1 for _, v in p.items() if v > ZERO_WEIGHT)
    if count == 0:
        raise ValueError("distribution has no mass")
    return math.log2(count)


def _check_eps(eps: float) -> float:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return 1.0 - eps * eps


class SortedWeights:
    """Weights sorted descending with prefix sums, for repeated smoothing queries."""

    def __init__(self, p: BellDiagonalDistribution | np.ndarray):
        if isinstance(p, BellDiagonalDistribution):
            if p.is_dense:
                w = np.asarray(p.dense)
            else:
                w = np.array([v for _, v in p.items()])
        else:
            w = np.asarray(p, dtype=np.float64)
        if w.size == 0 or w.sum() <= 0:
            raise ValueError("distribution has no mass")
        # stable sort keeps lower indices first among equal weights
        order = np.argsort(-w, kind="stable")
        self.weights = w[order]
        self.order = order
        self.cumulative = np.cumsum(self.weights)

    def smooth(self, eps: float) -> SmoothHartleyResult:
        target = _check_eps(eps)
        idx = int(np.searchsorted(self.cumulative, target - THRESHOLD_SLACK, side="left"))
        k = min(idx + 1, len(self.cumulative))
        return SmoothHartleyResult(
            value=math.log2(k), k=k, log2_k=math.log2(k), retained_mass=float(self.cumulative[k - 1])
        )


def smooth_hartley_generic(p: BellDiagonalDistribution | np.ndarray, eps: float) -> SmoothHartleyResult:
    return SortedWeights(p).smooth(eps)


@dataclass(frozen=True)
class WeightClassProfile:
    """Per-class log weights of IID Werner strings, classes in decreasing weight order.

    Class ``i`` holds the strings with ``weight[i]`` nonzero labels. For
    fidelity above 1/4 that is simply ``weight[i] = i``; below it the order
    reverses.
    """

    n: int
    fidelity: float
    weight: np.ndarray  # nonzero-label count of each class, heaviest class first
    log_p: np.ndarray  # ln of one string's probability, per class
    log_count: np.ndarray  # ln(C(n, w) 3**w)
    class_mass: np.ndarray
    cumulative: np.ndarray  # compensated prefix sums of class_mass
    log_count_before: np.ndarray  # ln of the number of strings in earlier classes

    @classmethod
    def build(cls, spec: IIDWernerSpec, any_fidelity: bool = False) -> "WeightClassProfile":
        f, n = spec.fidelity, spec.n
        if f <= 0.25 and not any_fidelity:
            raise ValueError(
                "weight classes are only sorted for fidelity > 1/4; use smooth_hartley_generic"
            )
        w = np.arange(n + 1, dtype=np.float64)
        q = (1.0 - f) / 3.0
        log_q = math.log(q) if q > 0 else -np.inf
        tail = np.multiply(w, log_q, out=np.zeros_like(w), where=w > 0)
        log_p = (n - w) * math.log(f) + tail
        order = np.argsort(-log_p, kind="stable")
        w, log_p = w[order], log_p[order]
        log_count = gammaln(n + 1) - gammaln(w + 1) - gammaln(n - w + 1) + w * math.log(3.0)
        with np.errstate(under="ignore"):
            mass = np.exp(log_p + log_count)
        before = np.concatenate(([-np.inf], np.logaddexp.accumulate(log_count)[:-1]))
        return cls(n, f, w.astype(np.int64), log_p, log_count, mass, _neumaier_cumsum(mass), before)

    @property
    def total_mass(self) -> float:
        return float(self.cumulative[-1])

    def count(self, i: int) -> int:
        """Number of strings in class ``i``."""
        w = int(self.weight[i])
        return math.comb(self.n, w) * 3**w

    def count_before(self, i: int) -> int:
        return sum(self.count(v) for v in range(i))

    def smooth(self, eps: float) -> SmoothHartleyResult:
        target = _check_eps(eps) - THRESHOLD_SLACK
        b = min(int(np.searchsorted(self.cumulative, target, side="left")), self.n)
        before = float(self.cumulative[b - 1]) if b else 0.0
        missing = target - before
        log_p_b = float(self.log_p[b])
        # real-valued number of boundary-class strings still needed
        log_need = math.log(missing) - log_p_b
        need = None
        if log_need < math.log(EXACT_K_LIMIT):
            p_b = math.exp(log_p_b)
            need = max(1, math.ceil(missing / p_b - 1e-9))
            # fix ceil rounding near integer ratios; a few steps suffice
            for _ in range(3):
                if need > 1 and before + (need - 1) * p_b >= target:
                    need -= 1
                elif before + need * p_b < target and need < self.count(b):
                    need += 1
                else:
                    break
            log_need = math.log(need)
        log_k = float(np.logaddexp(self.log_count_before[b], log_need))
        log2_k = log_k / LN2
        k = None
        if need is not None and log2_k < 62:
            k = self.count_before(b) + need
            log2_k = math.log2(k)
        return SmoothHartleyResult(
            value=log2_k,
            k=k,
            log2_k=log2_k,
            retained_mass=before + math.exp(log_p_b + log_need),
            boundary_class=int(self.weight[b]),
            boundary_fraction=min(1.0, math.exp(log_need - float(self.log_count[b]))),
        )


def _neumaier_cumsum(values: np.ndarray) -> np.ndarray:
    out = np.empty_like(values)
    s = 0.0
    c = 0.0
    for i, v in enumerate(values.tolist()):
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out[i] = s + c
    return out


def smooth_hartley_werner(spec: IIDWernerSpec, eps: float) -> SmoothHartleyResult:
    return WeightClassProfile.build(spec).smooth(eps)


def shannon_and_asymptotic_rate(fidelity: float) -> tuple[float, float]:
    """Shannon entropy (bits) of one Werner pair's label distribution and ``1 - H``."""
    if not 0.0 < fidelity <= 1.0:
        raise ValueError("fidelity must lie in (0, 1]")
    h = -fidelity * math.log2(fidelity)
    if fidelity < 1.0:
        h -= (1.0 - fidelity) * math.log2((1.0 - fidelity) / 3.0)
    return h, 1.0 - h
