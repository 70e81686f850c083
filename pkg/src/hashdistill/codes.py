"""Fixed round strings that act as small error-correcting and error-detecting codes.

A fixed schedule is a sequence of round strings chosen in advance instead of
at random. Pushing an error string through the rounds' linear maps yields a
syndrome (one parity bit per round) and a residual error on the surviving
pairs; the schedule corrects a set of errors when MAP decoding of the
syndrome undoes every residual, and detects it when every nontrivial error
gives a nonzero syndrome.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .belldiag import IIDWernerSpec, format_string, werner_distribution
from .protocol import RoundString, Variant, round_linear_maps
from .simulator import evolve_branches

BUILTIN_STRINGS = {
    "n5-correct": ("correct", ("01 01 01 01 00", "10 10 10 00", "01 11 01", "01 10")),
    "n4-detect": ("detect", ("11 11 11 11", "11 11 11")),
}
# per-pair fidelity of the Werner prior used to pick the MAP residual per syndrome
DECODER_FIDELITY = 0.99


@dataclass(frozen=True)
class FixedSchedule:
    name: str
    rounds: tuple[RoundString, ...]
    mode: str = "correct"  # "correct" | "detect"

    def __post_init__(self) -> None:
        if self.mode not in ("correct", "detect"):
            raise ValueError(f"mode must be correct or detect, got {self.mode!r}")
        if not self.rounds:
            raise ValueError("a fixed schedule needs at least one round")
        n = self.rounds[0].n
        for k, s in enumerate(self.rounds):
            if s.n != n - k:
                raise ValueError(f"round {k + 1} covers {s.n} pairs, expected {n - k}")
        if len(self.rounds) >= n:
            raise ValueError("a fixed schedule must leave at least one pair")

    @property
    def n(self) -> int:
        return self.rounds[0].n

    @property
    def survivors(self) -> int:
        return self.n - len(self.rounds)

    @classmethod
    def from_strings(cls, name: str, strings: Iterable[str], mode: str = "correct") -> "FixedSchedule":
        return cls(name, tuple(RoundString.parse(s) for s in strings), mode)

    @classmethod
    def from_file(cls, path: str | Path, mode: str = "correct") -> "FixedSchedule":
        """One round string per line; blank lines and ``#`` comments are skipped."""
        lines = []
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                lines.append(line)
        return cls.from_strings(Path(path).stem, lines, mode)


def builtin(name: str) -> FixedSchedule:
    try:
        mode, strings = BUILTIN_STRINGS[name]
    except KeyError:
        raise ValueError(f"unknown code {name!r}; choose from {sorted(BUILTIN_STRINGS)}") from None
    return FixedSchedule.from_strings(name, strings, mode)


def first_order_errors(n: int) -> list[int]:
    """The identity followed by the ``3n`` single-pair errors, pair-major."""
    return [0] + [lab << (2 * j) for j in range(n) for lab in (1, 2, 3)]


@dataclass(frozen=True)
class SyndromeEntry:
    syndrome: tuple[int, ...]
    residual: int


def push_error(schedule: FixedSchedule, x: int, variant: Variant | str) -> SyndromeEntry:
    """Syndrome bits and surviving-frame residual of one error string."""
    bits = []
    for s in schedule.rounds:
        maps = round_linear_maps(s, variant)
        y = maps.apply(x)
        bits.append(maps.parity_of_transformed(y))
        x = maps.project(y)
    return SyndromeEntry(tuple(bits), x)


def effective_syndrome_table(
    schedule: FixedSchedule,
    variant: Variant | str = Variant.CNOT,
    error_set: Sequence[int] | None = None,
) -> dict[int, SyndromeEntry]:
    errors = first_order_errors(schedule.n) if error_set is None else list(error_set)
    return {x: push_error(schedule, x, variant) for x in errors}


def syndrome_index(bits: Sequence[int]) -> int:
    """Branch row of a parity history, first round most significant."""
    idx = 0
    for b in bits:
        idx = (idx << 1) | b
    return idx


def map_residuals(
    schedule: FixedSchedule, variant: Variant | str, fidelity: float = DECODER_FIDELITY
) -> np.ndarray:
    """Most likely residual per syndrome under an IID Werner prior."""
    p = werner_distribution(IIDWernerSpec(fidelity, schedule.n))
    leaves = evolve_branches(p, schedule.rounds, variant)
    return np.argmax(leaves, axis=1)  # first maximum wins ties


def _collisions(table: dict[int, SyndromeEntry], n: int, mask: Sequence[bool] | None = None) -> list[dict]:
    groups: dict[tuple, list[int]] = defaultdict(list)
    for x, entry in table.items():
        key = entry.syndrome if mask is None else tuple(b for b, keep in zip(entry.syndrome, mask) if keep)
        groups[key].append(x)
    return [
        {"syndrome": "".join(map(str, key)), "errors": [format_string(x, n) for x in xs]}
        for key, xs in sorted(groups.items())
        if len(xs) > 1
    ]


@dataclass
class CodeReport:
    code: str
    variant: str
    n: int
    errors: int
    distinct_syndromes: int
    detected: int  # nontrivial errors with a nonzero syndrome
    corrected: int  # errors whose MAP-corrected residual is all-zero
    collisions: list = field(default_factory=list)
    table: dict = field(default_factory=dict, repr=False)

    @property
    def detects_all(self) -> bool:
        return self.detected == self.errors - 1

    @property
    def corrects_all(self) -> bool:
        return self.corrected == self.errors

    def to_json(self) -> dict:
        return {
            "code": self.code,
            "variant": self.variant,
            "distinct_syndromes": self.distinct_syndromes,
            "detected": self.detected,
            "corrected": self.corrected,
            "collisions": self.collisions,
        }


def verify(schedule: FixedSchedule, variant: Variant | str = Variant.CNOT) -> CodeReport:
    """Check detection and MAP correction over the identity and all first-order errors."""
    variant = Variant(variant)
    table = effective_syndrome_table(schedule, variant)
    best = map_residuals(schedule, variant)
    detected = sum(1 for x, e in table.items() if x and any(e.syndrome))
    corrected = sum(
        1 for e in table.values() if e.residual ^ int(best[syndrome_index(e.syndrome)]) == 0
    )
    m = schedule.survivors
    return CodeReport(
        code=schedule.name,
        variant=variant.value,
        n=schedule.n,
        errors=len(table),
        distinct_syndromes=len({e.syndrome for e in table.values()}),
        detected=detected,
        corrected=corrected,
        collisions=_collisions(table, schedule.n),
        table={
            format_string(x, schedule.n): {
                "syndrome": "".join(map(str, e.syndrome)),
                "residual": format_string(e.residual, m),
            }
            for x, e in table.items()
        },
    )


def collisions_without_round(schedule: FixedSchedule, k: int, variant: Variant | str = Variant.CNOT) -> list[dict]:
    """Syndrome collisions left when round ``k``'s parity bit is not read out."""
    if not 0 <= k < len(schedule.rounds):
        raise IndexError(f"round {k} out of range")
    table = effective_syndrome_table(schedule, variant)
    mask = [i != k for i in range(len(schedule.rounds))]
    return _collisions(table, schedule.n, mask)


def postselected_fidelity(
    schedule: FixedSchedule, fidelity: float, variant: Variant | str = Variant.CNOT
) -> tuple[float, float]:
    """MAP fidelity of the survivors given an all-zero syndrome, and that branch's probability."""
    if not 0.25 < fidelity <= 1.0:
        raise ValueError("fidelity must lie in (1/4, 1]")
    p = werner_distribution(IIDWernerSpec(fidelity, schedule.n))
    row = evolve_branches(p, schedule.rounds, variant)[0]
    accept = float(row.sum())
    return float(row.max()) / accept, accept


def infidelity_slope(
    schedule: FixedSchedule,
    werner_params: Sequence[float],
    variant: Variant | str = Variant.CNOT,
) -> float:
    """Least-squares slope of ``log(1 - F_cond)`` against ``log(1 - W)``."""
    w = np.asarray(werner_params, dtype=float)
    infid = []
    for wi in w:
        f = IIDWernerSpec.from_werner(float(wi), schedule.n).fidelity
        infid.append(1.0 - postselected_fidelity(schedule, f, variant)[0])
    return float(np.polyfit(np.log(1.0 - w), np.log(infid), 1)[0])
