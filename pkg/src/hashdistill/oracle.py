"""Density-matrix simulation of the literal protocol gates for up to 3 pairs.

Qubits are ordered pair by pair, Alice's half first: ``(A0, B0, A1, B1, ...)``,
with the first qubit most significant in the Kronecker product. Rotations
follow ``R_axis(theta) = exp(-i theta sigma_axis / 2)``.

This module shares nothing with :mod:`hashdistill.protocol` except the
round-string data type; it exists to check the label-map algebra there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .belldiag import BellDiagonalDistribution
from .protocol import (
    RoundString,
    Variant,
    entangle_label_map,
    step2_label_map,
    step4_label_map,
)

MAX_PAIRS = 3
BELL_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": X, "y": Y, "z": Z}
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def rotation(axis: str, theta: float) -> np.ndarray:
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * PAULI[axis]


def bell_vector(label: int) -> np.ndarray:
    """``(Z^a X^b (x) 1)|phi+>`` for ``label = a | b << 1``."""
    a, b = label & 1, label >> 1
    op = np.linalg.matrix_power(Z, a) @ np.linalg.matrix_power(X, b)
    return np.kron(op, I2) @ PHI_PLUS


@lru_cache(maxsize=None)
def bell_basis(n: int) -> np.ndarray:
    """Columns are Bell product states, column index = packed error string."""
    basis = np.empty((4**n, 4**n), dtype=complex)
    singles = [bell_vector(lab) for lab in range(4)]
    for x in range(4**n):
        v = np.ones(1, dtype=complex)
        # pair 0 is the most significant tensor factor
        for j in range(n):
            v = np.kron(v, singles[(x >> (2 * j)) & 3])
        basis[:, x] = v
    basis.setflags(write=False)
    return basis


def _embed_single(gate: np.ndarray, qubit: int, nq: int) -> np.ndarray:
    op = np.ones((1, 1), dtype=complex)
    for q in range(nq):
        op = np.kron(op, gate if q == qubit else I2)
    return op


def _embed_controlled(kind: str, control: int, target: int, nq: int) -> np.ndarray:
    dim = 2**nq
    op = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        cbit = (i >> (nq - 1 - control)) & 1
        tbit = (i >> (nq - 1 - target)) & 1
        if kind == "cnot":
            j = i ^ (cbit << (nq - 1 - target))
            op[j, i] = 1.0
        else:
            op[i, i] = -1.0 if cbit and tbit else 1.0
    return op


def _qubit(pair: int, party: str) -> int:
    return 2 * pair + (0 if party == "alice" else 1)


def _apply(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    return u @ rho @ u.conj().T


def bell_diagonal(rho: np.ndarray, n: int) -> np.ndarray:
    b = bell_basis(n)
    return np.real(np.einsum("ix,ij,jx->x", b.conj(), rho, b))


def bell_offdiagonal_mass(rho: np.ndarray, n: int) -> float:
    b = bell_basis(n)
    m = b.conj().T @ rho @ b
    return float(np.max(np.abs(m - np.diag(np.diag(m)))))


def density_from_distribution(p: BellDiagonalDistribution) -> np.ndarray:
    if p.n > MAX_PAIRS:
        raise ValueError(f"oracle handles at most {MAX_PAIRS} pairs")
    b = bell_basis(p.n)
    return (b * p.dense) @ b.conj().T


def _step2_ops(symbol: int, is_target: bool, variant: Variant) -> list[tuple[str, str, float]]:
    """Rotations named by the protocol boxes, as (party, axis, angle)."""
    s1, s2 = symbol & 1, symbol >> 1
    half, three_half = np.pi / 2, 3 * np.pi / 2
    if variant is Variant.CZ and is_target:
        if (s1, s2) == (0, 1):
            return [("alice", "y", half), ("bob", "y", half)]
        if (s1, s2) == (1, 1):
            return [("alice", "z", three_half), ("bob", "z", half)]
        return []
    if (s1, s2) == (1, 0):
        return [("alice", "y", half), ("bob", "y", half)]
    if (s1, s2) == (1, 1):
        return [("alice", "x", three_half), ("bob", "x", half)]
    return []


def _check_bell(rho: np.ndarray, n: int, where: str) -> None:
    off = bell_offdiagonal_mass(rho, n)
    if off > BELL_TOL:
        raise AssertionError(f"state left the Bell-diagonal set after {where} (off={off:.3g})")


def _measure_and_discard(rho: np.ndarray, n: int, pair: int) -> list[tuple[int, int, np.ndarray]]:
    """Project the pair's two qubits on computational outcomes and trace them out.

    Returns ``(alice_bit, bob_bit, unnormalized_state)`` per outcome.
    """
    nq = 2 * n
    t = rho.reshape([2] * (2 * nq))
    qa, qb = _qubit(pair, "alice"), _qubit(pair, "bob")
    out = []
    keep = [q for q in range(nq) if q not in (qa, qb)]
    for ya in (0, 1):
        for yb in (0, 1):
            idx: list = [slice(None)] * (2 * nq)
            idx[qa] = ya
            idx[qb] = yb
            idx[nq + qa] = ya
            idx[nq + qb] = yb
            sub = t[tuple(idx)]
            dim = 2 ** len(keep)
            out.append((ya, yb, sub.reshape(dim, dim)))
    return out


@dataclass
class OracleResult:
    fidelity: float
    leaves: list[dict] = field(default_factory=list)


def dm_simulate(
    p: BellDiagonalDistribution,
    schedule: Sequence[RoundString],
    variant: Variant | str,
    check_bell: bool = True,
) -> OracleResult:
    """Run the rounds on the density matrix, MAP-correct every leaf, return the mean fidelity."""
    variant = Variant(variant)
    n = p.n
    if n > MAX_PAIRS:
        raise ValueError(f"oracle handles at most {MAX_PAIRS} pairs")
    branches = [((), density_from_distribution(p))]
    m = n
    for k, s in enumerate(schedule):
        if s.n != m:
            raise ValueError(f"round {k} string covers {s.n} pairs, {m} are live")
        t = s.j_star
        nq = 2 * m
        u = np.eye(2**nq, dtype=complex)
        for j, sym in enumerate(s.symbols):
            for party, axis, angle in _step2_ops(sym, j == t, variant):
                u = _embed_single(rotation(axis, angle), _qubit(j, party), nq) @ u
        step2 = u
        kind = "cnot" if variant is Variant.CNOT else "cz"
        u3 = np.eye(2**nq, dtype=complex)
        for j, sym in enumerate(s.symbols):
            if j != t and sym:
                for party in ("alice", "bob"):
                    u3 = _embed_controlled(kind, _qubit(j, party), _qubit(t, party), nq) @ u3
        u4 = np.eye(2**nq, dtype=complex)
        if variant is Variant.CZ:
            for party in ("alice", "bob"):
                u4 = _embed_single(rotation("y", np.pi / 2), _qubit(t, party), nq) @ u4
        nxt = []
        for outcomes, rho in branches:
            if np.real(np.trace(rho)) < 1e-15:
                continue
            rho = _apply(rho, step2)
            if check_bell:
                _check_bell(rho, m, f"round {k} step 2")
            rho = _apply(rho, u3)
            if check_bell:
                _check_bell(rho, m, f"round {k} step 3")
            rho = _apply(rho, u4)
            if check_bell:
                _check_bell(rho, m, f"round {k} step 4")
            for ya, yb, sub in _measure_and_discard(rho, m, t):
                nxt.append((outcomes + ((ya, yb),), sub))
        branches = nxt
        m -= 1
    total = 0.0
    leaves = []
    phi = bell_basis(m)[:, 0]
    for outcomes, rho in branches:
        prob = float(np.real(np.trace(rho)))
        if prob < 1e-15:
            continue
        diag = bell_diagonal(rho, m)
        best = int(np.argmax(diag))  # first maximum: lowest index wins ties
        corr = np.ones((1, 1), dtype=complex)
        for j in range(m):
            lab = (best >> (2 * j)) & 3
            a, b = lab & 1, lab >> 1
            bob = np.linalg.matrix_power(Z, a) @ np.linalg.matrix_power(X, b)
            corr = np.kron(corr, np.kron(I2, bob))
        rho_c = _apply(rho, corr)
        fid = float(np.real(phi.conj() @ rho_c @ phi))
        total += fid
        leaves.append({"outcomes": outcomes, "probability": prob, "fidelity": fid / prob})
    return OracleResult(total, leaves)


def _bell_label_of(state: np.ndarray) -> int:
    overlaps = np.abs(bell_basis(1).conj().T @ state) ** 2
    lab = int(np.argmax(overlaps))
    if abs(overlaps[lab] - 1.0) > BELL_TOL:
        raise AssertionError("result is not a Bell state")
    return lab


def _bell_labels_of_pair(state: np.ndarray) -> tuple[int, int]:
    overlaps = np.abs(bell_basis(2).conj().T @ state) ** 2
    x = int(np.argmax(overlaps))
    if abs(overlaps[x] - 1.0) > BELL_TOL:
        raise AssertionError("result is not a Bell product state")
    return x & 3, x >> 2


def validate_label_maps(variant: Variant | str) -> dict:
    """Compare the declared label maps with the physical gates, label by label."""
    variant = Variant(variant)
    report = {"variant": variant.value, "checked": 0, "mismatches": []}

    def record(kind, inputs, expected, got):
        report["checked"] += 1
        if expected != got:
            report["mismatches"].append(
                {"map": kind, "input": inputs, "declared": expected, "physical": got}
            )

    for symbol in range(4):
        for is_target in (False, True):
            declared = step2_label_map(symbol, is_target, variant)
            u = np.eye(4, dtype=complex)
            for party, axis, angle in _step2_ops(symbol, is_target, variant):
                u = _embed_single(rotation(axis, angle), 0 if party == "alice" else 1, 2) @ u
            for lab in range(4):
                got = _bell_label_of(u @ bell_vector(lab))
                record(f"step2[s={symbol},target={is_target}]", lab, declared[lab], got)

    kind = "cnot" if variant is Variant.CNOT else "cz"
    # two pairs: pair 0 control, pair 1 target
    u = _embed_controlled(kind, 0, 2, 4) @ _embed_controlled(kind, 1, 3, 4)
    basis2 = bell_basis(2)
    for c in range(4):
        for t in range(4):
            got = _bell_labels_of_pair(u @ basis2[:, c | (t << 2)])
            record("entangle", (c, t), entangle_label_map(c, t, variant), got)

    u4 = np.eye(4, dtype=complex)
    if variant is Variant.CZ:
        u4 = np.kron(rotation("y", np.pi / 2), rotation("y", np.pi / 2))
    declared4 = step4_label_map(variant)
    for lab in range(4):
        record("step4", lab, declared4[lab], _bell_label_of(u4 @ bell_vector(lab)))

    # equal outcomes iff amplitude bit is 0
    for lab in range(4):
        probs = np.abs(bell_vector(lab)) ** 2  # index = 2*alice + bob
        equal = probs[0] + probs[3]
        record("measurement", lab, 1 - (lab >> 1), int(round(equal)))
    report["ok"] = not report["mismatches"]
    return report
