"""Bell-diagonal states as classical distributions over Pauli error strings.

A pair in Bell state ``(Z^a X^b (x) 1)|phi+>`` carries the label ``(a, b)``:
``a`` is the phase bit and ``b`` the amplitude bit. An error string over ``n``
pairs packs pair ``j`` into bits ``(2j, 2j+1) = (phase, amplitude)`` of an
integer, pair 0 least significant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

DENSE_MAX_PAIRS = 13
MASS_TOL = 1e-12
ZERO_WEIGHT = 1e-300


class PauliLabel(enum.IntEnum):
    PHI_PLUS = 0  # 00
    PHI_MINUS = 1  # 10
    PSI_PLUS = 2  # 01
    PSI_MINUS = 3  # 11

    @classmethod
    def from_bits(cls, phase: int, amplitude: int) -> "PauliLabel":
        return cls((phase & 1) | ((amplitude & 1) << 1))

    @classmethod
    def parse(cls, text: str) -> "PauliLabel":
        """Parse the two-character ``"ab"`` notation, e.g. ``"01"`` is psi+."""
        if len(text) != 2 or any(c not in "01" for c in text):
            raise ValueError(f"bad Pauli label {text!r}")
        return cls.from_bits(int(text[0]), int(text[1]))

    @property
    def phase(self) -> int:
        return int(self) & 1

    @property
    def amplitude(self) -> int:
        return (int(self) >> 1) & 1

    @property
    def bits(self) -> str:
        return f"{self.phase}{self.amplitude}"


def encode(labels: Sequence[int]) -> int:
    """Pack per-pair labels (pair 0 first) into an error-string integer."""
    x = 0
    for j, lab in enumerate(labels):
        if not 0 <= int(lab) < 4:
            raise ValueError(f"label out of range: {lab}")
        x |= int(lab) << (2 * j)
    return x


def decode(x: int, n: int) -> tuple[PauliLabel, ...]:
    if not 0 <= x < 4**n:
        raise ValueError(f"error string {x} does not fit {n} pairs")
    return tuple(PauliLabel((x >> (2 * j)) & 3) for j in range(n))


def format_string(x: int, n: int) -> str:
    """Render as space-separated ``ab`` symbols, pair 0 first."""
    return " ".join(lab.bits for lab in decode(x, n))


def parse_string(text: str) -> tuple[int, int]:
    """Inverse of :func:`format_string`; returns ``(x, n)``."""
    symbols = text.split()
    return encode([PauliLabel.parse(s) for s in symbols]), len(symbols)


def label_weight(x: int) -> int:
    """Number of pairs carrying a nonzero label."""
    w = 0
    while x:
        if x & 3:
            w += 1
        x >>= 2
    return w


@dataclass(frozen=True)
class IIDWernerSpec:
    """``n`` copies of a Werner pair with per-pair fidelity ``fidelity``."""

    fidelity: float
    n: int

    def __post_init__(self) -> None:
        if not 0.0 < self.fidelity <= 1.0:
            raise ValueError(f"fidelity must lie in (0, 1], got {self.fidelity}")
        if self.n < 1:
            raise ValueError(f"need at least one pair, got n={self.n}")

    @classmethod
    def from_werner(cls, w: float, n: int) -> "IIDWernerSpec":
        if not -1.0 / 3.0 < w <= 1.0:
            raise ValueError(f"Werner parameter must lie in (-1/3, 1], got {w}")
        return cls((1.0 + 3.0 * w) / 4.0, n)

    @property
    def werner(self) -> float:
        return (4.0 * self.fidelity - 1.0) / 3.0

    @property
    def pair_weights(self) -> np.ndarray:
        q = (1.0 - self.fidelity) / 3.0
        return np.array([self.fidelity, q, q, q])


class BellDiagonalDistribution:
    """Weights over the ``4**n`` error strings of ``n`` pairs.

    Dense (a float64 array indexed by the packed error string) up to
    ``DENSE_MAX_PAIRS`` pairs, otherwise a sparse ``{string: weight}`` map.
    Treated as immutable once built.
    """

    __slots__ = ("n", "_dense", "_sparse")

    def __init__(self, n: int, weights: np.ndarray | Mapping[int, float]):
        if n < 0:
            raise ValueError("pair count must be non-negative")
        self.n = n
        self._dense: np.ndarray | None = None
        self._sparse: dict[int, float] | None = None
        if isinstance(weights, Mapping):
            items = {int(k): float(v) for k, v in weights.items()}
            for k, v in items.items():
                if not 0 <= k < 4**n:
                    raise ValueError(f"error string {k} does not fit {n} pairs")
                if v < 0:
                    raise ValueError("negative weight")
            self._sparse = {k: v for k, v in items.items() if v > 0}
            total = math.fsum(self._sparse.values())
        else:
            arr = np.array(weights, dtype=np.float64)
            if arr.shape != (4**n,):
                raise ValueError(f"dense weights need shape ({4**n},), got {arr.shape}")
            if np.any(arr < 0):
                raise ValueError("negative weight")
            arr.setflags(write=False)
            self._dense = arr
            total = math.fsum(arr)
        if total > 1.0 + MASS_TOL:
            raise ValueError(f"total mass {total} exceeds 1")

    @classmethod
    def point_mass(cls, n: int, x: int = 0) -> "BellDiagonalDistribution":
        w = np.zeros(4**n)
        w[x] = 1.0
        return cls(n, w)

    @classmethod
    def uniform(cls, n: int) -> "BellDiagonalDistribution":
        return cls(n, np.full(4**n, 4.0**-n))

    @property
    def is_dense(self) -> bool:
        return self._dense is not None

    @property
    def dense(self) -> np.ndarray:
        if self._dense is None:
            if self.n > DENSE_MAX_PAIRS:
                raise ValueError(f"n={self.n} exceeds dense capacity of {DENSE_MAX_PAIRS} pairs")
            arr = np.zeros(4**self.n)
            for k, v in self._sparse.items():
                arr[k] = v
            arr.setflags(write=False)
            self._dense = arr
        return self._dense

    def items(self) -> Iterable[tuple[int, float]]:
        if self._sparse is not None:
            return iter(sorted(self._sparse.items()))
        nz = np.flatnonzero(self._dense)
        return ((int(i), float(self._dense[i])) for i in nz)

    def __getitem__(self, x: int) -> float:
        if self._dense is not None:
            return float(self._dense[x])
        return self._sparse.get(x, 0.0)

    @property
    def total_mass(self) -> float:
        if self._dense is not None:
            return math.fsum(self._dense)
        return math.fsum(self._sparse.values())

    def __repr__(self) -> str:
        kind = "dense" if self.is_dense else "sparse"
        return f"BellDiagonalDistribution(n={self.n}, {kind}, mass={self.total_mass:.12g})"


def werner_distribution(spec: IIDWernerSpec, dense: bool = True) -> BellDiagonalDistribution:
    """Product distribution of ``spec.n`` Werner pairs.

    The weight of string ``x`` is ``F**(n - w) * ((1 - F)/3)**w`` with ``w`` the
    count of nonzero labels. Only the dense form is built here; larger ``n``
    goes through the weight-class profile in :mod:`hashdistill.entropy`.
    """
    if not dense or spec.n > DENSE_MAX_PAIRS:
        raise ValueError(
            f"n={spec.n} needs the weight-class form (dense capacity is {DENSE_MAX_PAIRS} pairs)"
        )
    w = np.ones(1)
    pair = spec.pair_weights
    for _ in range(spec.n):
        # new pair becomes the most significant one
        w = np.outer(pair, w).ravel()
    return BellDiagonalDistribution(spec.n, w)


def fidelity_to_target(p: BellDiagonalDistribution) -> float:
    """Fidelity with ``|phi+>^n``: the weight of the all-zero string."""
    return p[0]


def _as_weight_vector(p: BellDiagonalDistribution | np.ndarray | Sequence[float]) -> np.ndarray:
    if isinstance(p, BellDiagonalDistribution):
        return p.dense
    arr = np.asarray(p, dtype=np.float64)
    if np.any(arr < 0):
        raise ValueError("negative weight")
    return arr


def classical_fidelity_and_purified_distance(p, q) -> tuple[float, float]:
    """Generalized fidelity and purified distance of two sub-normalized distributions."""
    pw = _as_weight_vector(p)
    qw = _as_weight_vector(q)
    if pw.shape != qw.shape:
        raise ValueError("distributions live on different index sets")
    tp = min(math.fsum(pw), 1.0)
    tq = min(math.fsum(qw), 1.0)
    overlap = math.fsum(np.sqrt(pw * qw)) + math.sqrt((1.0 - tp) * (1.0 - tq))
    f = min(overlap * overlap, 1.0)
    return f, math.sqrt(max(0.0, 1.0 - f))
