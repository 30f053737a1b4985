"""Dense statevector engine for small registers of labeled qubits.

Qubits are addressed by their particle number (1..8), never by register
position. The position of a qubit inside ``PureState.amplitudes`` is the
order in which it entered through :func:`tensor`; the first qubit is the most
significant bit of the basis index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

MAX_QUBITS = 8
NORM_TOL = 1e-12
ZERO_PROB = 1e-12
PHASE_TOL = 1e-9

_S = 1 / math.sqrt(2)


@dataclass(frozen=True, order=True)
class BellLabel:
    """Two-bit name of a Bell state.

    ``flip`` is 0 when the two kets agree (|00>, |11>) and 1 when they differ;
    ``phase`` is 0 for the '+' combination and 1 for '-'.
    """

    flip: int
    phase: int

    def __post_init__(self):
        if self.flip not in (0, 1) or self.phase not in (0, 1):
            raise ValueError(f"Bell label bits must be 0 or 1, got ({self.flip}, {self.phase})")

    def __str__(self) -> str:
        return f"{self.flip}{self.phase}"

    @classmethod
    def parse(cls, text: str) -> BellLabel:
        text = text.strip().strip("|>")
        if len(text) != 2 or any(c not in "01" for c in text):
            raise ValueError(f"not a Bell label: {text!r}")
        return cls(int(text[0]), int(text[1]))


BELL_LABELS: tuple[BellLabel, ...] = tuple(BellLabel(f, p) for f in (0, 1) for p in (0, 1))

# Amplitudes over |00>, |01>, |10>, |11> of the ordered pair (i, j).
_BELL_VECTORS = {
    BellLabel(0, 0): np.array([_S, 0, 0, _S]),
    BellLabel(0, 1): np.array([_S, 0, 0, -_S]),
    BellLabel(1, 0): np.array([0, _S, _S, 0]),
    BellLabel(1, 1): np.array([0, _S, -_S, 0]),
}


_BELL_MATRIX = np.array([_BELL_VECTORS[label] for label in BELL_LABELS])


def bell_vector(label: BellLabel) -> np.ndarray:
    """Return the 4-amplitude vector of ``label`` (copy, real dtype)."""
    return _BELL_VECTORS[label].copy()


class Pauli(Enum):
    """Single-qubit operators I, X, Y, Z with the real Y = [[0, -1], [1, 0]]."""

    I = "I"  # noqa: E741
    X = "X"
    Y = "Y"
    Z = "Z"

    @property
    def matrix(self) -> np.ndarray:
        return _PAULI_MATRICES[self].copy()

    def __str__(self) -> str:
        return self.value


_PAULI_MATRICES = {
    Pauli.I: np.array([[1, 0], [0, 1]], dtype=float),
    Pauli.X: np.array([[0, 1], [1, 0]], dtype=float),
    Pauli.Y: np.array([[0, -1], [1, 0]], dtype=float),
    Pauli.Z: np.array([[1, 0], [0, -1]], dtype=float),
}


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector over an ordered tuple of qubit ids."""

    qubits: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        qubits = tuple(int(q) for q in self.qubits)
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"duplicate qubit ids in {qubits}")
        if len(qubits) > MAX_QUBITS:
            raise ValueError(f"at most {MAX_QUBITS} qubits supported, got {len(qubits)}")
        for q in qubits:
            if not 1 <= q <= MAX_QUBITS:
                raise ValueError(f"qubit id {q} outside 1..{MAX_QUBITS}")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2 ** len(qubits):
            raise ValueError(f"{len(qubits)} qubits need {2 ** len(qubits)} amplitudes, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1) > NORM_TOL:
            raise ValueError(f"state not normalized: squared norm {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def _trusted(cls, qubits: tuple[int, ...], amplitudes: np.ndarray) -> PureState:
        # internal results are normalized by construction; skip re-validation
        self = object.__new__(cls)
        amplitudes = np.asarray(amplitudes, dtype=complex)
        amplitudes.setflags(write=False)
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "amplitudes", amplitudes)
        return self

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    def axis(self, q: int) -> int:
        try:
            return self.qubits.index(q)
        except ValueError:
            raise KeyError(f"qubit {q} not in state {self.qubits}") from None

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def amplitude(self, bits: Mapping[int, int]) -> complex:
        """Amplitude of the basis ket assigning ``bits[q]`` to each qubit ``q``."""
        if set(bits) != set(self.qubits):
            raise KeyError(f"assignment must cover exactly {self.qubits}")
        return complex(self.tensor_view()[tuple(bits[q] for q in self.qubits)])

    def reordered(self, qubits: Sequence[int]) -> PureState:
        """Same state with the register positions permuted to ``qubits``."""
        qubits = tuple(qubits)
        if sorted(qubits) != sorted(self.qubits):
            raise KeyError(f"{qubits} is not a permutation of {self.qubits}")
        perm = [self.axis(q) for q in qubits]
        return PureState(qubits, np.transpose(self.tensor_view(), perm).reshape(-1))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class MeasurementOutcome:
    """One branch of a Bell measurement. ``post_state`` is None when impossible."""

    label: BellLabel
    probability: float
    post_state: PureState | None

    @property
    def possible(self) -> bool:
        return self.post_state is not None


@dataclass(frozen=True)
class BitOutcome:
    """One branch of a computational-basis measurement of a single qubit."""

    bit: int
    probability: float
    post_state: PureState | None

    @property
    def possible(self) -> bool:
        return self.post_state is not None


def basis_state(q: int, bit: int) -> PureState:
    amps = np.zeros(2, dtype=complex)
    amps[bit] = 1
    return PureState((q,), amps)


def make_bell(label: BellLabel, i: int, j: int) -> PureState:
    """Two-qubit Bell state ``label`` on the ordered pair (i, j)."""
    if i == j:
        raise ValueError(f"Bell pair needs two distinct qubits, got ({i}, {j})")
    return PureState((i, j), _BELL_VECTORS[label])


def tensor(a: PureState, b: PureState) -> PureState:
    overlap = set(a.qubits) & set(b.qubits)
    if overlap:
        raise ValueError(f"qubit ids {sorted(overlap)} appear in both states")
    if len(a.qubits) + len(b.qubits) > MAX_QUBITS:
        raise ValueError(f"at most {MAX_QUBITS} qubits supported")
    return PureState._trusted(a.qubits + b.qubits, np.outer(a.amplitudes, b.amplitudes).reshape(-1))


def tensor_all(states: Sequence[PureState]) -> PureState:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def apply_pauli(state: PureState, op: Pauli, q: int) -> PureState:
    ax = state.axis(q)
    psi = np.tensordot(_PAULI_MATRICES[op], state.tensor_view(), axes=([1], [ax]))
    psi = np.moveaxis(psi, 0, ax)
    return PureState._trusted(state.qubits, psi.reshape(-1))


def _check_pair(state: PureState, i: int, j: int) -> tuple[int, int]:
    if i == j:
        raise ValueError(f"Bell measurement needs two distinct qubits, got ({i}, {j})")
    return state.axis(i), state.axis(j)


def _bell_projections(state: PureState, i: int, j: int):
    """Coefficients <b|_ij psi for all four labels, plus their squared norms."""
    ai, aj = _check_pair(state, i, j)
    moved = np.moveaxis(state.tensor_view(), (ai, aj), (0, 1))
    coeffs = _BELL_MATRIX @ moved.reshape(4, -1)  # real Bell vectors, no conjugation needed
    probs = np.einsum("ij,ij->i", coeffs.conj(), coeffs).real
    if abs(probs.sum() - 1) > 1e-9:
        raise ArithmeticError(f"Bell projector probabilities sum to {probs.sum()}")
    return (ai, aj), moved.shape[2:], coeffs, probs


def _bell_outcome(state, axes, rest_shape, coeffs, probs, k) -> MeasurementOutcome:
    label = BELL_LABELS[k]
    prob = float(probs[k])
    if prob < ZERO_PROB:
        return MeasurementOutcome(label, 0.0, None)
    post = np.outer(_BELL_MATRIX[k], coeffs[k] / math.sqrt(prob)).reshape((2, 2) + rest_shape)
    post = np.moveaxis(post, (0, 1), axes).reshape(-1)
    return MeasurementOutcome(label, prob, PureState._trusted(state.qubits, post))


def bell_branches(state: PureState, i: int, j: int) -> list[MeasurementOutcome]:
    """All four outcomes of a Bell measurement on (i, j), in label order 00, 01, 10, 11.

    Measured qubits stay in the register, projected onto the observed Bell
    state, so repeating the measurement reproduces the label with certainty.
    """
    axes, rest_shape, coeffs, probs = _bell_projections(state, i, j)
    return [_bell_outcome(state, axes, rest_shape, coeffs, probs, k) for k in range(4)]


def z_branches(state: PureState, q: int) -> list[BitOutcome]:
    """Both outcomes of measuring qubit ``q`` in the {|0>, |1>} basis."""
    ax = state.axis(q)
    psi = state.tensor_view()
    outcomes = []
    for bit in (0, 1):
        kept = np.zeros_like(psi)
        index = [slice(None)] * state.num_qubits
        index[ax] = bit
        kept[tuple(index)] = psi[tuple(index)]
        prob = float(np.vdot(kept, kept).real)
        if prob < ZERO_PROB:
            outcomes.append(BitOutcome(bit, 0.0, None))
        else:
            outcomes.append(BitOutcome(bit, prob, PureState(state.qubits, kept.reshape(-1) / math.sqrt(prob))))
    return outcomes


def _draw_index(probs, rng: np.random.Generator) -> int:
    u = rng.random()
    acc = 0.0
    last = None
    for k, p in enumerate(probs):
        if p < ZERO_PROB:
            continue
        acc += p
        last = k
        if u < acc:
            return k
    return last


def sample_bell(state: PureState, i: int, j: int, rng: np.random.Generator) -> MeasurementOutcome:
    """Draw one Bell-measurement outcome; consumes exactly one ``rng.random()``."""
    axes, rest_shape, coeffs, probs = _bell_projections(state, i, j)
    k = _draw_index(probs, rng)
    return _bell_outcome(state, axes, rest_shape, coeffs, probs, k)


def sample_z(state: PureState, q: int, rng: np.random.Generator) -> BitOutcome:
    outcomes = z_branches(state, q)
    return outcomes[_draw_index([o.probability for o in outcomes], rng)]


def overlap(a: PureState, b: PureState) -> float:
    """|<a|b>| for two states over the same qubit set (any register order)."""
    b = b.reordered(a.qubits)
    return abs(complex(np.vdot(a.amplitudes, b.amplitudes)))


def equal_up_to_phase(a: PureState, b: PureState, tol: float = PHASE_TOL) -> bool:
    return overlap(a, b) >= 1 - tol
