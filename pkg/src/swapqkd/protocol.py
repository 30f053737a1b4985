"""Parties, channels and adversaries for the entanglement-swapping key exchange.

One run of the protocol, with particles numbered as in the attack figure:

* Alice holds pairs (1, 2) and (3, 5); Bob holds (4, 6); Eve may hold (7, 8).
* Alice sends 2 to Bob and Bell-measures (1, 3). Her result is the key.
* Bob Bell-measures what arrived together with 4, then sends 6 to Alice.
* Alice Bell-measures 5 with what arrived and announces the result.

The adversary sits on both quantum channels through ``on_forward`` (Alice to
Bob) and ``on_return`` (Bob to Alice). Parties address delivered particles by
their nominal role; the transcript records the true particle ids.

Runs are executed against a *chooser* that resolves each measurement: either
a seeded sampler or a replay of a fixed branch path. Exhaustive enumeration
re-executes the run once per path, which is cheap at eight qubits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from . import qstate
from .bellalg import Side, pauli_action, sigma_for, swap_label
from .qstate import BELL_LABELS, BellLabel, Pauli, PureState


class ProtocolError(RuntimeError):
    """A party or channel was driven out of order or violated particle bookkeeping."""


class InconsistentRunError(ValueError):
    """No (or more than one) private result explains a public announcement."""


class Strategy(str, Enum):
    NONE = "none"
    SWAP_ATTACK = "swap-attack"
    MEASURE_RESEND = "measure-resend"


class Party(str, Enum):
    ALICE = "Alice"
    BOB = "Bob"
    EVE = "Eve"
    PUBLIC = "Public"


PARTIES = (Party.ALICE, Party.BOB, Party.EVE)


def knowledge(*parties: Party | str) -> frozenset[Party]:
    """Knowledge tag; ``Public`` implies every party."""
    tag = frozenset(Party(p) for p in parties)
    if Party.PUBLIC in tag:
        tag = tag | set(PARTIES)
    return tag


PUBLIC = knowledge(Party.PUBLIC)


class EventKind(str, Enum):
    PREPARE = "Prepare"
    SEND_QUANTUM = "SendQuantum"
    INTERCEPT = "Intercept"
    SUBSTITUTE = "Substitute"
    BELL_MEASURE = "BellMeasure"
    MEASURE = "Measure"  # single-qubit computational basis
    PAULI_CORRECT = "PauliCorrect"
    ANNOUNCE = "Announce"


@dataclass(frozen=True)
class TranscriptEvent:
    index: int
    kind: EventKind
    actor: Party
    particles: tuple[int, ...]
    payload: str | None
    knowledge: frozenset[Party]

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "kind": self.kind.value,
            "actor": self.actor.value,
            "particles": list(self.particles),
            "payload": self.payload,
            "knowledge": sorted(p.value for p in self.knowledge),
        }


def transcript_to_json(events: Iterable[TranscriptEvent]) -> str:
    return json.dumps([e.to_dict() for e in events], indent=2) + "\n"


@dataclass(frozen=True)
class ProtocolConfig:
    """Initial Bell labels of every pair plus the adversary in play.

    Defaults are the publicly known preparation of the attack scenario; only
    ``eve_pair`` is private to Eve.
    """

    alice_pair_a: BellLabel = BellLabel(1, 1)  # particles (1, 2)
    alice_pair_b: BellLabel = BellLabel(1, 0)  # particles (3, 5)
    bob_pair: BellLabel = BellLabel(1, 0)  # particles (4, 6)
    eve_pair: BellLabel | None = BellLabel(1, 0)  # particles (7, 8)
    strategy: Strategy = Strategy.NONE

    def __post_init__(self):
        for name in ("alice_pair_a", "alice_pair_b", "bob_pair"):
            if not isinstance(getattr(self, name), BellLabel):
                raise ValueError(f"{name} must be a BellLabel")
        object.__setattr__(self, "strategy", Strategy(self.strategy))

    def with_strategy(self, strategy: Strategy | str) -> ProtocolConfig:
        return replace(self, strategy=Strategy(strategy))

    def phi(self, alice_result: BellLabel) -> BellLabel:
        """Label of (2, 5) once Alice has seen ``alice_result`` on (1, 3)."""
        return swap_label(self.alice_pair_a, self.alice_pair_b, alice_result)


# -- choosers -----------------------------------------------------------------


class _Sampler:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def bell(self, state, i, j):
        return qstate.sample_bell(state, i, j, self.rng)

    def z(self, state, q):
        return qstate.sample_z(state, q, self.rng)


def exact_probability(p: float) -> Fraction:
    """Snap a branch probability to the nearby small-denominator rational."""
    f = Fraction(p).limit_denominator(1 << 20)
    if abs(float(f) - p) > 1e-12:
        raise ArithmeticError(f"branch probability {p!r} is not a small rational")
    return f


class _Replay:
    """Follows ``path`` (indices into the possible outcomes), then takes the first."""

    def __init__(self, path: Sequence[int]):
        self.path = tuple(path)
        self.taken: list[int] = []
        self.widths: list[int] = []
        self.probability = Fraction(1)

    def _pick(self, outcomes):
        possible = [o for o in outcomes if o.possible]
        depth = len(self.taken)
        k = self.path[depth] if depth < len(self.path) else 0
        self.taken.append(k)
        self.widths.append(len(possible))
        self.probability *= exact_probability(possible[k].probability)
        return possible[k]

    def bell(self, state, i, j):
        return self._pick(qstate.bell_branches(state, i, j))

    def z(self, state, q):
        return self._pick(qstate.z_branches(state, q))


# -- the lab: ground truth shared by everyone ---------------------------------

IN_TRANSIT = "transit"


class Lab:
    """Joint quantum state, particle whereabouts and the event log of one run."""

    def __init__(self, chooser):
        self.chooser = chooser
        self.state: PureState | None = None
        self.location: dict[int, str] = {}
        self.measured: set[int] = set()
        self.events: list[TranscriptEvent] = []

    def log(self, kind, actor, particles, payload=None, tag=PUBLIC):
        self.events.append(TranscriptEvent(len(self.events), kind, Party(actor), tuple(particles), payload, tag))

    def _require(self, actor: Party, *particles: int):
        for p in particles:
            where = self.location.get(p)
            if where != actor.value:
                raise ProtocolError(f"{actor.value} does not hold particle {p} (it is with {where})")

    def prepare(self, actor: Party, label: BellLabel, i: int, j: int, tag=PUBLIC):
        pair = qstate.make_bell(label, i, j)
        self.state = pair if self.state is None else qstate.tensor(self.state, pair)
        self.location[i] = self.location[j] = actor.value
        self.log(EventKind.PREPARE, actor, (i, j), str(label), tag)

    def move(self, particle: int, holder: str):
        self.location[particle] = holder

    def bell_measure(self, actor: Party, i: int, j: int, tag=None) -> BellLabel:
        self._require(actor, i, j)
        outcome = self.chooser.bell(self.state, i, j)
        self.state = outcome.post_state
        self.measured.update((i, j))
        self.log(EventKind.BELL_MEASURE, actor, (i, j), str(outcome.label), tag or knowledge(actor))
        return outcome.label

    def z_measure(self, actor: Party, q: int) -> int:
        self._require(actor, q)
        outcome = self.chooser.z(self.state, q)
        self.state = outcome.post_state
        self.log(EventKind.MEASURE, actor, (q,), str(outcome.bit), knowledge(actor))
        return outcome.bit

    def apply(self, actor: Party, op: Pauli, q: int):
        self._require(actor, q)
        if q in self.measured:
            raise ProtocolError(f"particle {q} was already measured")
        self.state = qstate.apply_pauli(self.state, op, q)
        self.log(EventKind.PAULI_CORRECT, actor, (q,), op.value, knowledge(actor))


class QuantumChannel:
    """Point-to-point channel; ``hook`` is the adversary's interception point."""

    def __init__(self, lab: Lab, sender: Party, receiver: Party, hook: Callable[[Lab, int], int]):
        self.lab, self.sender, self.receiver, self.hook = lab, sender, receiver, hook

    def transmit(self, particle: int) -> int:
        lab = self.lab
        lab._require(self.sender, particle)
        if particle in lab.measured:
            raise ProtocolError(f"particle {particle} was measured and cannot be sent")
        lab.log(EventKind.SEND_QUANTUM, self.sender, (particle,), self.receiver.value)
        lab.move(particle, IN_TRANSIT)
        delivered = self.hook(lab, particle)
        lab.move(delivered, self.receiver.value)
        return delivered


# -- adversaries ----------------------------------------------------------------


class Adversary:
    """Passive channel: particles pass untouched."""

    tag = Strategy.NONE
    needs_pair = False

    def __init__(self):
        self.result: BellLabel | None = None

    def prepare(self, lab: Lab, config: ProtocolConfig):
        if self.needs_pair:
            if config.eve_pair is None:
                raise ValueError(f"{self.tag.value} requires eve_pair")
            lab.prepare(Party.EVE, config.eve_pair, 7, 8, knowledge(Party.EVE))

    def on_forward(self, lab: Lab, particle: int) -> int:
        return particle

    def on_return(self, lab: Lab, particle: int) -> int:
        return particle


class SwapAttack(Adversary):
    """Keep Alice's particle, feed Bob half of Eve's pair, then repair particle 2.

    After Bob's measurement Eve Bell-measures the returning particle with her
    remaining half; her result equals Bob's. She applies ``sigma_for`` of it to
    the kept particle and forwards that in place of Bob's.
    """

    tag = Strategy.SWAP_ATTACK
    needs_pair = True

    def __init__(self):
        super().__init__()
        self.kept: int | None = None

    def on_forward(self, lab, particle):
        lab.move(particle, Party.EVE.value)
        lab.log(EventKind.INTERCEPT, Party.EVE, (particle,), None, knowledge(Party.EVE))
        self.kept = particle
        lab.log(EventKind.SUBSTITUTE, Party.EVE, (7, particle), None, knowledge(Party.EVE))
        return 7

    def on_return(self, lab, particle):
        lab.move(particle, Party.EVE.value)
        lab.log(EventKind.INTERCEPT, Party.EVE, (particle,), None, knowledge(Party.EVE))
        self.result = lab.bell_measure(Party.EVE, particle, 8)
        lab.apply(Party.EVE, sigma_for(self.result), self.kept)
        lab.log(EventKind.SUBSTITUTE, Party.EVE, (self.kept, particle), None, knowledge(Party.EVE))
        return self.kept


class MeasureResend(Adversary):
    """Measure the Alice-to-Bob particle in the computational basis and forward it."""

    tag = Strategy.MEASURE_RESEND

    def on_forward(self, lab, particle):
        lab.move(particle, Party.EVE.value)
        lab.log(EventKind.INTERCEPT, Party.EVE, (particle,), None, knowledge(Party.EVE))
        lab.z_measure(Party.EVE, particle)
        lab.log(EventKind.SEND_QUANTUM, Party.EVE, (particle,), Party.BOB.value, knowledge(Party.EVE))
        return particle


ADVERSARIES: dict[Strategy, type[Adversary]] = {
    Strategy.NONE: Adversary,
    Strategy.SWAP_ATTACK: SwapAttack,
    Strategy.MEASURE_RESEND: MeasureResend,
}


# -- honest parties -------------------------------------------------------------


class Alice:
    phases = ("idle", "prepared", "sent", "measured", "announced")

    def __init__(self, lab: Lab, config: ProtocolConfig):
        self.lab, self.config = lab, config
        self.phase = "idle"
        self.result: BellLabel | None = None
        self.announcement: BellLabel | None = None

    def _advance(self, expected: str, to: str):
        if self.phase != expected:
            raise ProtocolError(f"Alice cannot go {self.phase} -> {to}")
        self.phase = to

    def prepare(self):
        self._advance("idle", "prepared")
        self.lab.prepare(Party.ALICE, self.config.alice_pair_a, 1, 2)
        self.lab.prepare(Party.ALICE, self.config.alice_pair_b, 3, 5)

    def send(self, channel: QuantumChannel) -> int:
        self._advance("prepared", "sent")
        return channel.transmit(2)

    def measure_key(self):
        self._advance("sent", "measured")
        self.result = self.lab.bell_measure(Party.ALICE, 1, 3)

    def receive_and_announce(self, particle: int):
        self._advance("measured", "announced")
        self.announcement = self.lab.bell_measure(Party.ALICE, 5, particle)
        self.lab.log(EventKind.ANNOUNCE, Party.ALICE, (5, particle), str(self.announcement), PUBLIC)


class Bob:
    def __init__(self, lab: Lab, config: ProtocolConfig):
        self.lab, self.config = lab, config
        self.phase = "idle"
        self.result: BellLabel | None = None

    def _advance(self, expected: str, to: str):
        if self.phase != expected:
            raise ProtocolError(f"Bob cannot go {self.phase} -> {to}")
        self.phase = to

    def prepare(self):
        self._advance("idle", "prepared")
        self.lab.prepare(Party.BOB, self.config.bob_pair, 4, 6)

    def receive_and_measure(self, particle: int):
        self._advance("prepared", "measured")
        self.result = self.lab.bell_measure(Party.BOB, particle, 4)

    def send(self, channel: QuantumChannel) -> int:
        self._advance("measured", "sent")
        return channel.transmit(6)


# -- results and runs -------------------------------------------------------------


@dataclass(frozen=True)
class RunResult:
    strategy: Strategy
    alice_result: BellLabel
    bob_result: BellLabel
    eve_result: BellLabel | None
    announcement: BellLabel
    flagged: bool
    transcript: tuple[TranscriptEvent, ...] = field(repr=False)

    @property
    def key(self) -> BellLabel:
        return self.alice_result

    def summary(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "alice_result": str(self.alice_result),
            "bob_result": str(self.bob_result),
            "eve_result": None if self.eve_result is None else str(self.eve_result),
            "announcement": str(self.announcement),
            "key": str(self.key),
            "flagged": self.flagged,
        }

    def to_dict(self) -> dict:
        return {**self.summary(), "transcript": [e.to_dict() for e in self.transcript]}


@dataclass(frozen=True)
class Branch:
    result: RunResult
    probability: Fraction
    path: tuple[int, ...]


def expected_announcement(config: ProtocolConfig, alice_result: BellLabel, bob_result: BellLabel) -> BellLabel:
    """What Alice must announce in an undisturbed run."""
    return pauli_action(config.phi(alice_result), sigma_for(bob_result), Side.FIRST)


def is_flagged(config: ProtocolConfig, alice_result, bob_result, announcement) -> bool:
    """Detection test on the publicly compared triple."""
    return announcement != expected_announcement(config, alice_result, bob_result)


def _execute(config: ProtocolConfig, chooser) -> RunResult:
    lab = Lab(chooser)
    alice, bob = Alice(lab, config), Bob(lab, config)
    eve = ADVERSARIES[config.strategy]()

    alice.prepare()
    bob.prepare()
    eve.prepare(lab, config)
    forward = QuantumChannel(lab, Party.ALICE, Party.BOB, eve.on_forward)
    back = QuantumChannel(lab, Party.BOB, Party.ALICE, eve.on_return)

    arrived_at_bob = alice.send(forward)
    alice.measure_key()
    bob.receive_and_measure(arrived_at_bob)
    arrived_at_alice = bob.send(back)
    alice.receive_and_announce(arrived_at_alice)

    return RunResult(
        strategy=config.strategy,
        alice_result=alice.result,
        bob_result=bob.result,
        eve_result=eve.result,
        announcement=alice.announcement,
        flagged=is_flagged(config, alice.result, bob.result, alice.announcement),
        transcript=tuple(lab.events),
    )


def branches(config: ProtocolConfig) -> list[Branch]:
    """Every possible run with its exact probability, ordered by branch path."""
    leaves = []
    stack: list[tuple[int, ...]] = [()]
    while stack:
        prefix = stack.pop()
        replay = _Replay(prefix)
        result = _execute(config, replay)
        for depth in range(len(prefix), len(replay.taken)):
            for alt in range(1, replay.widths[depth]):
                stack.append(tuple(replay.taken[:depth]) + (alt,))
        leaves.append(Branch(result, replay.probability, tuple(replay.taken)))
    leaves.sort(key=lambda b: b.path)
    return leaves


def run(config: ProtocolConfig, rng: np.random.Generator | None = None):
    """Sampled run if ``rng`` is given, otherwise the full list of branches."""
    if rng is None:
        return branches(config)
    return _execute(config, _Sampler(rng))


def run_honest(config: ProtocolConfig | None = None, rng: np.random.Generator | None = None):
    config = config or ProtocolConfig()
    if config.strategy is not Strategy.NONE:
        raise ValueError(f"run_honest needs strategy 'none', got {config.strategy.value!r}")
    return run(config, rng)


def run_attack(config: ProtocolConfig | None = None, rng: np.random.Generator | None = None):
    config = config or ProtocolConfig(strategy=Strategy.SWAP_ATTACK)
    if config.strategy is not Strategy.SWAP_ATTACK:
        raise ValueError(f"run_attack needs strategy 'swap-attack', got {config.strategy.value!r}")
    if config.eve_pair is None:
        raise ValueError("run_attack requires eve_pair")
    return run(config, rng)


# -- inference from each party's view -------------------------------------------


def _unique(candidates: list[BellLabel], what: str) -> BellLabel:
    if len(candidates) != 1:
        raise InconsistentRunError(f"{len(candidates)} candidates for {what}")
    return candidates[0]


def infer_bob(alice_result: BellLabel, announcement: BellLabel, config: ProtocolConfig) -> BellLabel:
    """Alice's deduction of Bob's result from her own result and the announcement."""
    phi = config.phi(alice_result)
    return _unique(
        [b for b in BELL_LABELS if pauli_action(phi, sigma_for(b), Side.FIRST) == announcement],
        "Bob's result",
    )


def infer_alice(bob_result: BellLabel, announcement: BellLabel, config: ProtocolConfig) -> BellLabel:
    """Bob's deduction of Alice's key result from his result and the announcement."""
    sigma = sigma_for(bob_result)
    phi = _unique([f for f in BELL_LABELS if pauli_action(f, sigma, Side.FIRST) == announcement], "the (2, 5) label")
    return _unique([a for a in BELL_LABELS if config.phi(a) == phi], "Alice's result")


def eve_infer_key(eve_result: BellLabel, announcement: BellLabel, config: ProtocolConfig) -> BellLabel:
    """Eve's key deduction: Bob's inference with her mirrored result in place of his."""
    return infer_alice(eve_result, announcement, config)


def probability_sum(leaves: Iterable[Branch]) -> Fraction:
    return sum((b.probability for b in leaves), Fraction(0))
