"""One hashing round on error strings, for the CNOT and the CZ formulations.

Every round acts on the live pairs as a GF(2)-linear map of the packed error
string: Step-2 local rotations relabel single pairs, Step-3 bilateral gates
mix labels between each control and the target ``j*``, and the measurement
reads the target's amplitude bit and drops the pair.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .belldiag import PauliLabel, decode, encode


class Variant(str, enum.Enum):
    CNOT = "cnot"
    CZ = "cz"


LabelMap = tuple[int, int, int, int]
_IDENTITY: LabelMap = (0, 1, 2, 3)
# (a, b) -> (b, a): swaps phi- and psi+
_SWAP: LabelMap = (0, 2, 1, 3)
# (a, b) -> (a, a ^ b)
_AMP_ADD_PHASE: LabelMap = (0, 3, 2, 1)
# (a, b) -> (a ^ b, b)
_PHASE_ADD_AMP: LabelMap = (0, 1, 3, 2)


def _coerce_variant(variant: Variant | str) -> Variant:
    return variant if isinstance(variant, Variant) else Variant(str(variant).lower())


def step2_label_map(symbol: int, is_target: bool, variant: Variant | str) -> LabelMap:
    """Label permutation of the Step-2 rotation for one pair.

    ``symbol`` uses the packed label convention (``"ab"`` -> ``a | b << 1``).
    """
    variant = _coerce_variant(variant)
    s1, s2 = symbol & 1, (symbol >> 1) & 1
    if (s1, s2) == (0, 0):
        return _IDENTITY
    if variant is Variant.CZ and is_target:
        if (s1, s2) == (0, 1):
            return _SWAP
        if (s1, s2) == (1, 0):
            return _IDENTITY
        return _PHASE_ADD_AMP
    if (s1, s2) == (0, 1):
        return _IDENTITY
    if (s1, s2) == (1, 0):
        return _SWAP
    return _AMP_ADD_PHASE


def entangle_label_map(control: int, target: int, variant: Variant | str) -> tuple[int, int]:
    """Labels of (control, target) after the bilateral two-pair gate."""
    variant = _coerce_variant(variant)
    ac, bc = control & 1, control >> 1
    at, bt = target & 1, target >> 1
    if variant is Variant.CNOT:
        ac ^= at
        bt ^= bc
    else:
        at, ac = at ^ bc, ac ^ bt
    return ac | (bc << 1), at | (bt << 1)


def step4_label_map(variant: Variant | str) -> LabelMap:
    """Label permutation applied to the target right before measurement."""
    return _SWAP if _coerce_variant(variant) is Variant.CZ else _IDENTITY


@dataclass(frozen=True)
class RoundString:
    """The random 2-bit-per-pair string of one round (pair 0 first)."""

    symbols: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(not 0 <= s < 4 for s in self.symbols):
            raise ValueError("round symbols must be 2-bit values")
        if not any(self.symbols):
            raise ValueError("round string must contain a nonzero symbol")

    @classmethod
    def parse(cls, text: str) -> "RoundString":
        return cls(tuple(int(PauliLabel.parse(s)) for s in text.split()))

    @classmethod
    def from_int(cls, mask: int, n: int) -> "RoundString":
        return cls(tuple(int(lab) for lab in decode(mask, n)))

    @property
    def n(self) -> int:
        return len(self.symbols)

    @property
    def j_star(self) -> int:
        return next(j for j, s in enumerate(self.symbols) if s)

    @property
    def mask(self) -> int:
        return encode(self.symbols)

    def __str__(self) -> str:
        return " ".join(PauliLabel(s).bits for s in self.symbols)


def sample_round_string(live_pairs: int, rng: np.random.Generator) -> RoundString:
    """Uniform over nonzero strings; all-zero draws are redrawn."""
    if live_pairs < 1:
        raise ValueError("need at least one live pair")
    while True:
        symbols = rng.integers(0, 4, size=live_pairs)
        if symbols.any():
            return RoundString(tuple(int(s) for s in symbols))


def sample_schedule(n: int, rounds: int, rng: np.random.Generator) -> list[RoundString]:
    if not 0 <= rounds < n:
        raise ValueError(f"need 0 <= rounds < n, got rounds={rounds}, n={n}")
    return [sample_round_string(n - k, rng) for k in range(rounds)]


def boolean_inner_product(s: RoundString, x: int, n: int | None = None) -> int:
    if n is not None and n != s.n:
        raise ValueError(f"round string covers {s.n} pairs, error string {n}")
    if x >> (2 * s.n):
        raise ValueError("error string longer than round string")
    return (s.mask & x).bit_count() & 1


@dataclass(frozen=True)
class RoundOutcome:
    parity: int
    survivor: int
    n: int  # pairs left
    functional: int  # parity == popcount(functional & x) mod 2 on the round's input


def apply_round(x: int, s: RoundString, variant: Variant | str) -> RoundOutcome:
    labels = list(decode(x, s.n))
    t = s.j_star
    for j, sym in enumerate(s.symbols):
        labels[j] = step2_label_map(sym, j == t, variant)[labels[j]]
    for j, sym in enumerate(s.symbols):
        if j != t and sym:
            labels[j], labels[t] = entangle_label_map(labels[j], labels[t], variant)
    labels[t] = step4_label_map(variant)[labels[t]]
    parity = labels[t] >> 1
    del labels[t]
    return RoundOutcome(parity, encode(labels), s.n - 1, s.mask)


# --- linearization ---------------------------------------------------------
# A GF(2) matrix on 2m bits is stored as a list of 2m column images (ints).


def _mat_apply(cols: Sequence[int], x: int) -> int:
    y = 0
    i = 0
    while x:
        if x & 1:
            y ^= cols[i]
        x >>= 1
        i += 1
    return y


def _mat_mul(a: Sequence[int], b: Sequence[int]) -> list[int]:
    """Columns of ``a @ b``."""
    return [_mat_apply(a, c) for c in b]


def _identity(dim: int) -> list[int]:
    return [1 << i for i in range(dim)]


def _pair_matrix(m: int, j: int, lmap: LabelMap) -> list[int]:
    cols = _identity(2 * m)
    for bit in (0, 1):
        img = lmap[1 << bit]
        cols[2 * j + bit] = img << (2 * j)
    return cols


def _two_pair_matrix(m: int, c: int, t: int, variant: Variant) -> list[int]:
    cols = _identity(2 * m)
    for pair in (c, t):
        for bit in (0, 1):
            lab = 1 << bit
            if pair == c:
                nc, nt = entangle_label_map(lab, 0, variant)
            else:
                nc, nt = entangle_label_map(0, lab, variant)
            cols[2 * pair + bit] = (nc << (2 * c)) | (nt << (2 * t))
    return cols


@dataclass(frozen=True)
class RoundMaps:
    """Linear description of a round on ``m`` live pairs."""

    m: int
    j_star: int
    transform: tuple[int, ...]  # columns of T over GF(2)^{2m}
    functional: int  # parity = <functional, x>

    def apply(self, x: int) -> int:
        return _mat_apply(self.transform, x)

    def project(self, y: int) -> int:
        """Drop the target pair's two bits from a transformed string."""
        lo = y & ((1 << (2 * self.j_star)) - 1)
        hi = y >> (2 * self.j_star + 2)
        return lo | (hi << (2 * self.j_star))

    def parity_of_transformed(self, y: int) -> int:
        return (y >> (2 * self.j_star + 1)) & 1


def round_linear_maps(s: RoundString, variant: Variant | str) -> RoundMaps:
    variant = _coerce_variant(variant)
    m, t = s.n, s.j_star
    mat = _identity(2 * m)
    for j, sym in enumerate(s.symbols):
        mat = _mat_mul(_pair_matrix(m, j, step2_label_map(sym, j == t, variant)), mat)
    for j, sym in enumerate(s.symbols):
        if j != t and sym:
            mat = _mat_mul(_two_pair_matrix(m, j, t, variant), mat)
    mat = _mat_mul(_pair_matrix(m, t, step4_label_map(variant)), mat)
    # parity row of T, read off column by column
    functional = 0
    for i, col in enumerate(mat):
        if (col >> (2 * t + 1)) & 1:
            functional |= 1 << i
    return RoundMaps(m, t, tuple(mat), functional)


def gf2_rank(cols: Sequence[int]) -> int:
    rows = list(cols)
    rank = 0
    while rows:
        pivot = rows.pop()
        if not pivot:
            continue
        rank += 1
        low = pivot & -pivot
        rows = [r ^ pivot if r & low else r for r in rows]
    return rank


def compose_functionals(schedule: Sequence[RoundString], variant: Variant | str) -> list[int]:
    """Parity functionals of every round expressed on the original string."""
    variant = _coerce_variant(variant)
    if not schedule:
        return []
    n = schedule[0].n
    # frame: columns mapping original bits to current-frame bits
    frame = _identity(2 * n)
    out = []
    for k, s in enumerate(schedule):
        if s.n != n - k:
            raise ValueError("round string length does not match live pairs")
        maps = round_linear_maps(s, variant)
        # functional on original = functional_current composed with frame
        f = 0
        for i, col in enumerate(frame):
            if (maps.functional & col).bit_count() & 1:
                f |= 1 << i
        out.append(f)
        frame = [maps.project(maps.apply(c)) for c in frame]
    return out


# --- gate schedules ----------------------------------------------------------

@dataclass(frozen=True)
class GateScheduleItem:
    round: int
    step: int
    party: str  # "alice", "bob" or "both"
    gate: str  # "rx", "ry", "rz", "cnot", "cz", "measure"
    angle: float | None
    pairs: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "round": self.round,
            "step": self.step,
            "party": self.party,
            "gate": self.gate,
            "angle": self.angle,
            "pairs": list(self.pairs),
        }


_HALF_PI = "pi/2"
_THREE_HALF_PI = "3pi/2"
ANGLES = {_HALF_PI: np.pi / 2, _THREE_HALF_PI: 3 * np.pi / 2}


def step2_rotations(symbol: int, is_target: bool, variant: Variant | str) -> list[tuple[str, str, str]]:
    """Physical Step-2 rotations as ``(party, axis, angle)`` triples."""
    variant = _coerce_variant(variant)
    s1, s2 = symbol & 1, (symbol >> 1) & 1
    if (s1, s2) == (0, 0):
        return []
    if variant is Variant.CZ and is_target:
        if (s1, s2) == (0, 1):
            return [("both", "y", _HALF_PI)]
        if (s1, s2) == (1, 0):
            return []
        return [("alice", "z", _THREE_HALF_PI), ("bob", "z", _HALF_PI)]
    if (s1, s2) == (0, 1):
        return []
    if (s1, s2) == (1, 0):
        return [("both", "y", _HALF_PI)]
    return [("alice", "x", _THREE_HALF_PI), ("bob", "x", _HALF_PI)]


def compile_round(s: RoundString, variant: Variant | str, round_index: int = 0) -> list[GateScheduleItem]:
    variant = _coerce_variant(variant)
    t = s.j_star
    items: list[GateScheduleItem] = []
    for j, sym in enumerate(s.symbols):
        for party, axis, angle in step2_rotations(sym, j == t, variant):
            items.append(GateScheduleItem(round_index, 2, party, "r" + axis, ANGLES[angle], (j,)))
    gate = "cnot" if variant is Variant.CNOT else "cz"
    for j, sym in enumerate(s.symbols):
        if j != t and sym:
            items.append(GateScheduleItem(round_index, 3, "both", gate, None, (j, t)))
    if variant is Variant.CZ:
        items.append(GateScheduleItem(round_index, 4, "both", "ry", ANGLES[_HALF_PI], (t,)))
    items.append(GateScheduleItem(round_index, 4, "both", "measure", None, (t,)))
    return items


def compile_schedule(schedule: Sequence[RoundString], variant: Variant | str) -> list[GateScheduleItem]:
    out: list[GateScheduleItem] = []
    for k, s in enumerate(schedule):
        out.extend(compile_round(s, variant, k))
    return out

