"""Bell-label algebra: local Pauli action, entanglement swapping, Eve's correction rule.

Both rule tables are computed once at import time by running the statevector
engine over every case, then frozen. :func:`verify_tables` re-derives every
entry by a second route (overlap with the claimed Bell state rather than a
branch search) so a corrupted table is caught.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from itertools import product
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .qstate import (
    BELL_LABELS,
    BellLabel,
    Pauli,
    PureState,
    apply_pauli,
    bell_branches,
    equal_up_to_phase,
    make_bell,
    tensor,
)


class Side(str, Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class SignedPauli:
    """Element of the 8-element group {+-I, +-X, +-Y, +-Z} (real Y)."""

    sign: int
    op: Pauli

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    @property
    def matrix(self) -> np.ndarray:
        return self.sign * self.op.matrix

    def __str__(self) -> str:
        return ("+" if self.sign > 0 else "-") + self.op.value


SIGNED_PAULIS = tuple(SignedPauli(s, p) for s in (1, -1) for p in Pauli)


def compose_pauli(a: SignedPauli, b: SignedPauli) -> SignedPauli:
    """Matrix product ``a @ b``, returned as a signed Pauli."""
    m = a.matrix @ b.matrix
    for cand in SIGNED_PAULIS:
        if np.array_equal(m, cand.matrix):
            return cand
    raise ArithmeticError(f"product {a} * {b} left the Pauli group")


def inverse_pauli(a: SignedPauli) -> SignedPauli:
    identity = SignedPauli(1, Pauli.I)
    for cand in SIGNED_PAULIS:
        if compose_pauli(a, cand) == identity:
            return cand
    raise ArithmeticError(f"{a} has no inverse")


# Physical qubits used when deriving the tables; any distinct ids would do.
_A, _B, _C, _D = 1, 2, 3, 4


def _certain_label(state: PureState, i: int, j: int) -> BellLabel:
    certain = [o.label for o in bell_branches(state, i, j) if o.probability > 1 - 1e-9]
    if len(certain) != 1:
        raise ArithmeticError(f"qubits ({i}, {j}) are not in a definite Bell state")
    return certain[0]


def _pauli_oracle(label: BellLabel, op: Pauli, side: Side) -> PureState:
    q = _A if side is Side.FIRST else _B
    return apply_pauli(make_bell(label, _A, _B), op, q)


def _swap_oracle(pair1: BellLabel, pair2: BellLabel, measured: BellLabel):
    """Post-measurement outcome for pairs (a,b),(c,d) measured on (a,c)."""
    joint = tensor(make_bell(pair1, _A, _B), make_bell(pair2, _C, _D))
    return bell_branches(joint, _A, _C)[BELL_LABELS.index(measured)]


@dataclass(frozen=True)
class RuleTables:
    """Frozen lookup tables; keys are tuples of labels/ops, values Bell labels."""

    pauli_action: Mapping[tuple[Pauli, Side, BellLabel], BellLabel]
    swap: Mapping[tuple[BellLabel, BellLabel, BellLabel], BellLabel]

    def to_json(self) -> str:
        """Deterministic dump of all 32 + 64 entries."""
        doc = {
            "pauli_action": [
                {"op": op.value, "side": side.value, "label": str(lab), "result": str(self.pauli_action[op, side, lab])}
                for op, side, lab in sorted(self.pauli_action, key=_pauli_key)
            ],
            "swap": [
                {"pair1": str(p1), "pair2": str(p2), "measured": str(m), "result": str(self.swap[p1, p2, m])}
                for p1, p2, m in sorted(self.swap)
            ],
        }
        return json.dumps(doc, indent=2) + "\n"


def _pauli_key(k):
    op, side, lab = k
    return (list(Pauli).index(op), list(Side).index(side), lab)


def build_tables() -> RuleTables:
    pauli = {}
    for op, side, label in product(Pauli, Side, BELL_LABELS):
        pauli[op, side, label] = _certain_label(_pauli_oracle(label, op, side), _A, _B)
    swap = {}
    for p1, p2, m in product(BELL_LABELS, repeat=3):
        outcome = _swap_oracle(p1, p2, m)
        swap[p1, p2, m] = _certain_label(outcome.post_state, _B, _D)
    return RuleTables(MappingProxyType(pauli), MappingProxyType(swap))


TABLES = build_tables()


def verify_tables(tables: RuleTables | None = None) -> list[str]:
    """Cross-check every table entry against the statevector engine.

    Returns human-readable mismatch descriptions; empty means all 96 entries
    agree (including equiprobable swap outcomes).
    """
    tables = TABLES if tables is None else tables
    problems = []
    for op, side, label in product(Pauli, Side, BELL_LABELS):
        got = tables.pauli_action.get((op, side, label))
        state = _pauli_oracle(label, op, side)
        if got is None or not equal_up_to_phase(state, make_bell(got, _A, _B)):
            problems.append(f"pauli-action table mismatch at ({op}, {side.value}, {label}): table says {got}")
    for p1, p2, m in product(BELL_LABELS, repeat=3):
        got = tables.swap.get((p1, p2, m))
        outcome = _swap_oracle(p1, p2, m)
        if abs(outcome.probability - 0.25) > 1e-9:
            problems.append(f"swap outcome ({p1}, {p2}, {m}) has probability {outcome.probability}, expected 1/4")
            continue
        expected = tensor(make_bell(m, _A, _C), make_bell(got, _B, _D)) if got is not None else None
        if expected is None or not equal_up_to_phase(outcome.post_state, expected):
            problems.append(f"swap table mismatch at ({p1}, {p2}, {m}): table says {got}")
    return problems


def pauli_action(label: BellLabel, op: Pauli, side: Side | str = Side.FIRST) -> BellLabel:
    """Label of the Bell state after ``op`` acts on one of its qubits (phase discarded)."""
    return TABLES.pauli_action[op, Side(side), label]


def swap_label(pair1: BellLabel, pair2: BellLabel, measured: BellLabel) -> BellLabel:
    """Label left on (b, d) after measuring (a, c) of pairs (a, b), (c, d) with result ``measured``."""
    return TABLES.swap[pair1, pair2, measured]


_SIGMA_FOR = MappingProxyType({
    BellLabel(1, 0): Pauli.I,
    BellLabel(0, 0): Pauli.X,
    BellLabel(0, 1): Pauli.Y,
    BellLabel(1, 1): Pauli.Z,
})


def sigma_for(result: BellLabel) -> Pauli:
    """Correction Eve applies after observing ``result`` on her (6, 8) measurement."""
    return _SIGMA_FOR[result]
