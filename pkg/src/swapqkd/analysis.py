"""Branch enumeration, strategy statistics, the honest correspondence table, and
knowledge auditing of transcripts.

Exhaustive statistics are exact :class:`~fractions.Fraction` values; sampled
statistics are ``Fraction(count, trials)`` so both modes share one report type.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .bellalg import Side, pauli_action, swap_label
from .protocol import (
    PARTIES,
    Branch,
    EventKind,
    InconsistentRunError,
    Party,
    ProtocolConfig,
    RunResult,
    Strategy,
    TranscriptEvent,
    branches,
    eve_infer_key,
    infer_alice,
    knowledge,
    run,
)
from .qstate import BELL_LABELS, BellLabel, Pauli


class VerificationError(AssertionError):
    """An internal consistency check failed (should be impossible)."""


def _csv(rows: Sequence[Sequence], header: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# -- branch trees -----------------------------------------------------------------


@dataclass(frozen=True)
class BranchTree:
    strategy: Strategy
    leaves: tuple[Branch, ...]

    @property
    def total_probability(self) -> Fraction:
        return sum((b.probability for b in self.leaves), Fraction(0))

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "leaf_count": len(self.leaves),
            "total_probability": str(self.total_probability),
            "leaves": [
                {
                    "path": list(b.path),
                    "probability": str(b.probability),
                    "probability_float": float(b.probability),
                    **b.result.summary(),
                }
                for b in self.leaves
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        header = ["path", "probability", "alice_result", "bob_result", "eve_result", "announcement", "key", "flagged"]
        rows = []
        for b in self.leaves:
            s = b.result.summary()
            rows.append([
                ".".join(map(str, b.path)), str(b.probability), s["alice_result"], s["bob_result"],
                s["eve_result"] or "", s["announcement"], s["key"], int(s["flagged"]),
            ])
        return _csv(rows, header)

    def to_text(self) -> str:
        lines = [f"strategy {self.strategy.value}: {len(self.leaves)} leaves, total probability {self.total_probability}"]
        lines.append("  p       alice  bob  eve  announce  flagged")
        for b in self.leaves:
            r = b.result
            eve = str(r.eve_result) if r.eve_result is not None else "--"
            lines.append(
                f"  {str(b.probability):<7} {r.alice_result!s:<6} {r.bob_result!s:<4} {eve:<4} {r.announcement!s:<9} {r.flagged}"
            )
        return "\n".join(lines) + "\n"


def enumerate_branches(config: ProtocolConfig | None = None, strategy: Strategy | str | None = None) -> BranchTree:
    """Expand every measurement of a run; zero-probability branches are pruned."""
    config = config or ProtocolConfig()
    if strategy is not None:
        config = config.with_strategy(strategy)
    tree = BranchTree(config.strategy, tuple(branches(config)))
    if tree.total_probability != 1:
        raise VerificationError(f"branch probabilities sum to {tree.total_probability}")
    return tree


# -- correspondence table -----------------------------------------------------------


@dataclass(frozen=True)
class CorrespondenceTable:
    """(Alice's result, Bob's result) -> Alice's announcement, for honest runs."""

    entries: Mapping[tuple[BellLabel, BellLabel], BellLabel]

    def __getitem__(self, key: tuple[BellLabel, BellLabel]) -> BellLabel:
        return self.entries[key]

    def __len__(self) -> int:
        return len(self.entries)

    def is_bijective(self) -> bool:
        for fixed in BELL_LABELS:
            by_bob = {self.entries[fixed, b] for b in BELL_LABELS}
            by_alice = {self.entries[a, fixed] for a in BELL_LABELS}
            if len(by_bob) != 4 or len(by_alice) != 4:
                return False
        return True

    def explains(self, result: RunResult) -> bool:
        return self.entries.get((result.alice_result, result.bob_result)) == result.announcement

    def rows(self) -> list[tuple[str, str, str]]:
        return [(str(a), str(b), str(self.entries[a, b])) for a, b in product(BELL_LABELS, repeat=2)]

    def to_dict(self) -> dict:
        return {"entries": [{"alice_result": a, "bob_result": b, "announcement": c} for a, b, c in self.rows()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        return _csv(self.rows(), ["alice_result", "bob_result", "announcement"])

    def to_text(self) -> str:
        head = "alice\\bob " + " ".join(f"{str(b):>4}" for b in BELL_LABELS)
        lines = [head]
        for a in BELL_LABELS:
            lines.append(f"{str(a):>9} " + " ".join(f"{str(self.entries[a, b]):>4}" for b in BELL_LABELS))
        return "\n".join(lines) + "\n"


def reconstruct_table(config: ProtocolConfig | None = None) -> CorrespondenceTable:
    """Read the honest announcement map off the exhaustive branch tree."""
    config = config or ProtocolConfig()
    if config.strategy is not Strategy.NONE:
        raise ValueError("the correspondence table is defined by honest runs")
    entries: dict[tuple[BellLabel, BellLabel], BellLabel] = {}
    for leaf in enumerate_branches(config).leaves:
        r = leaf.result
        key = (r.alice_result, r.bob_result)
        if entries.setdefault(key, r.announcement) != r.announcement:
            raise VerificationError(f"honest leaves disagree on the announcement for {key}")
    if len(entries) != 16:
        raise VerificationError(f"table has {len(entries)} entries, expected 16")
    return CorrespondenceTable(MappingProxyType(dict(sorted(entries.items()))))


# -- strategy reports ---------------------------------------------------------------


@dataclass(frozen=True)
class StrategyReport:
    strategy: Strategy
    mode: str  # "exhaustive" or "sampled"
    count: int  # leaves or trials
    flagged: int
    detection_probability: Fraction
    eve_key_rate: Fraction | None
    alice_bob_agreement: Fraction
    alice_distribution: Mapping[str, Fraction] = field(default_factory=dict)
    bob_distribution: Mapping[str, Fraction] = field(default_factory=dict)
    seed: int | None = None

    def to_dict(self) -> dict:
        def rate(f):
            return None if f is None else {"exact": str(f), "value": float(f)}

        return {
            "strategy": self.strategy.value,
            "mode": self.mode,
            "count": self.count,
            "seed": self.seed,
            "flagged": self.flagged,
            "detection_probability": rate(self.detection_probability),
            "eve_key_rate": rate(self.eve_key_rate),
            "alice_bob_agreement": rate(self.alice_bob_agreement),
            "alice_distribution": {k: str(v) for k, v in self.alice_distribution.items()},
            "bob_distribution": {k: str(v) for k, v in self.bob_distribution.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def _flat_rows(self) -> list[tuple[str, str]]:
        rows = [
            ("strategy", self.strategy.value),
            ("mode", self.mode),
            ("count", str(self.count)),
            ("seed", "" if self.seed is None else str(self.seed)),
            ("flagged", str(self.flagged)),
            ("detection_probability", str(self.detection_probability)),
            ("eve_key_rate", "" if self.eve_key_rate is None else str(self.eve_key_rate)),
            ("alice_bob_agreement", str(self.alice_bob_agreement)),
        ]
        rows += [(f"alice_distribution.{k}", str(v)) for k, v in self.alice_distribution.items()]
        rows += [(f"bob_distribution.{k}", str(v)) for k, v in self.bob_distribution.items()]
        return rows

    def to_csv(self) -> str:
        return _csv(self._flat_rows(), ["field", "value"])

    def to_text(self) -> str:
        eve = "n/a" if self.eve_key_rate is None else f"{float(self.eve_key_rate):.6f} ({self.eve_key_rate})"
        return (
            f"strategy {self.strategy.value} [{self.mode}, n={self.count}]\n"
            f"  detection probability  {float(self.detection_probability):.6f} ({self.detection_probability})\n"
            f"  eve key rate           {eve}\n"
            f"  alice/bob agreement    {float(self.alice_bob_agreement):.6f} ({self.alice_bob_agreement})\n"
        )


def _bob_agrees(r: RunResult, config: ProtocolConfig) -> bool:
    try:
        return infer_alice(r.bob_result, r.announcement, config) == r.key
    except InconsistentRunError:
        return False


def _eve_wins(r: RunResult, config: ProtocolConfig) -> bool:
    try:
        return eve_infer_key(r.eve_result, r.announcement, config) == r.key
    except InconsistentRunError:
        return False


def _report(config, mode, weighted: list[tuple[RunResult, Fraction]], count, seed=None) -> StrategyReport:
    results = [r for r, _ in weighted]
    has_eve = bool(results) and all(r.eve_result is not None for r in results)
    alice_dist = {str(lab): Fraction(0) for lab in BELL_LABELS}
    bob_dist = dict(alice_dist)
    for r, w in weighted:
        alice_dist[str(r.alice_result)] += w
        bob_dist[str(r.bob_result)] += w
    return StrategyReport(
        strategy=config.strategy,
        mode=mode,
        count=count,
        flagged=sum(r.flagged for r in results),
        detection_probability=sum((w for r, w in weighted if r.flagged), Fraction(0)),
        eve_key_rate=sum((w for r, w in weighted if _eve_wins(r, config)), Fraction(0)) if has_eve else None,
        alice_bob_agreement=sum((w for r, w in weighted if _bob_agrees(r, config)), Fraction(0)),
        alice_distribution=alice_dist,
        bob_distribution=bob_dist,
        seed=seed,
    )


def trial_rngs(seed: int, trials: int) -> list[np.random.Generator]:
    """Independent per-trial streams split from one master seed.

    Trial ``k`` always gets the ``k``-th child of ``SeedSequence(seed)``, so
    trials can be farmed out to workers in any order with identical results.
    """
    return [np.random.Generator(np.random.PCG64(child)) for child in np.random.SeedSequence(seed).spawn(trials)]


def sample_runs(config: ProtocolConfig, trials: int, seed: int) -> list[RunResult]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    return [run(config, rng) for rng in trial_rngs(seed, trials)]


def evaluate(
    strategy: Strategy | str,
    config: ProtocolConfig | None = None,
    trials: int | None = None,
    seed: int = 0,
) -> StrategyReport:
    """Exhaustive report when ``trials`` is None, else a seeded Monte Carlo report."""
    config = (config or ProtocolConfig()).with_strategy(strategy)
    if trials is None:
        tree = enumerate_branches(config)
        return _report(config, "exhaustive", [(b.result, b.probability) for b in tree.leaves], len(tree.leaves))
    return report_from_runs(config, sample_runs(config, trials, seed), seed)


def report_from_runs(config: ProtocolConfig, results: Sequence[RunResult], seed: int | None = None) -> StrategyReport:
    w = Fraction(1, len(results))
    return _report(config, "sampled", [(r, w) for r in results], len(results), seed)


# -- knowledge audit ----------------------------------------------------------------


@dataclass(frozen=True)
class Checkpoint:
    """After event ``index``, the parties able to deduce ``pair``'s Bell label."""

    index: int
    pair: tuple[int, ...]
    label: BellLabel
    knowledge: frozenset[Party]
    note: str

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "pair": list(self.pair),
            "label": str(self.label),
            "knowledge": sorted(p.value for p in self.knowledge),
            "note": self.note,
        }


_OBSERVERS = (*PARTIES, Party.PUBLIC)


class _Var:
    __slots__ = ("pair", "value", "knowers", "note")

    def __init__(self, pair, value, knowers, note):
        self.pair, self.value, self.knowers, self.note = pair, value, set(knowers), note


class _Ledger:
    """Who-can-deduce-what bookkeeping.

    Every relation here (entanglement swap, Pauli correction, re-measuring a
    pair) is a bijection in each argument, so a party that knows the relation
    and all but one of its variables learns the last. A party knows a relation
    only if it knows the true identity of every particle involved.
    """

    def __init__(self):
        self.vars: list[_Var] = []
        self.relations: list[tuple[tuple[_Var, ...], frozenset[Party]]] = []
        self.partner: dict[int, tuple[int, _Var] | None] = {}
        self.identity: dict[int, frozenset[Party]] = {}

    def new(self, pair, value, knowers, note) -> _Var:
        v = _Var(pair, value, knowers, note)
        self.vars.append(v)
        return v

    def relate(self, variables, particles):
        who = frozenset(_OBSERVERS)
        for p in particles:
            who &= self.identity.get(p, frozenset())
        self.relations.append((tuple(variables), who))

    def propagate(self):
        changed = True
        while changed:
            changed = False
            for variables, who in self.relations:
                for party in who:
                    unknown = [v for v in variables if party not in v.knowers]
                    if len(unknown) == 1:
                        unknown[0].knowers.add(party)
                        changed = True
        for v in self.vars:
            if Party.PUBLIC in v.knowers:
                v.knowers.update(PARTIES)

    def pair_var(self, a: int, b: int) -> _Var | None:
        link = self.partner.get(a)
        return link[1] if link is not None and link[0] == b else None

    def link(self, a: int, b: int, v: _Var):
        self.partner[a] = (b, v)
        self.partner[b] = (a, v)

    def unlink(self, q: int):
        link = self.partner.get(q)
        if link is not None:
            self.partner[link[0]] = None
        self.partner[q] = None


def _config_from_transcript(events: Sequence[TranscriptEvent]) -> ProtocolConfig:
    labels = {e.particles: BellLabel.parse(e.payload) for e in events if e.kind is EventKind.PREPARE}
    return ProtocolConfig(
        alice_pair_a=labels[1, 2],
        alice_pair_b=labels[3, 5],
        bob_pair=labels[4, 6],
        eve_pair=labels.get((7, 8)),
    )


def _key_view(events: Sequence[TranscriptEvent], index: int, config: ProtocolConfig) -> Checkpoint:
    """Key checkpoint: each party applies its own inference to its own view."""
    seen = {}
    for e in events[:index]:
        if e.kind is EventKind.BELL_MEASURE:
            seen.setdefault(e.actor, BellLabel.parse(e.payload))
    announcement = BellLabel.parse(events[index].payload)
    key = seen[Party.ALICE]
    knowers = {Party.ALICE}
    guesses = {Party.BOB: (infer_alice, seen.get(Party.BOB)), Party.EVE: (eve_infer_key, seen.get(Party.EVE))}
    for party, (infer, own) in guesses.items():
        if own is None:
            continue
        try:
            if infer(own, announcement, config) == key:
                knowers.add(party)
        except InconsistentRunError:
            pass
    return Checkpoint(index, (1, 3), key, knowledge(*knowers), "key")


def knowledge_audit(transcript: Iterable[TranscriptEvent]) -> list[Checkpoint]:
    """Replay a transcript, recording who can deduce each Bell label and when.

    A checkpoint is emitted whenever a pair label comes into existence or the
    set of parties able to deduce it changes. The final ``note="key"``
    checkpoint lists the parties whose own inference from their own results
    and the announcement yields Alice's (1, 3) result.
    """
    events = list(transcript)
    config = _config_from_transcript(events)
    ledger = _Ledger()
    reported: dict[int, frozenset[Party]] = {}
    checkpoints: list[Checkpoint] = []
    last_alice_measure: _Var | None = None

    for e in events:
        if e.kind is EventKind.PREPARE:
            i, j = e.particles
            ledger.identity[i] = ledger.identity[j] = e.knowledge
            ledger.link(i, j, ledger.new((i, j), BellLabel.parse(e.payload), e.knowledge, "prepared"))
        elif e.kind is EventKind.SUBSTITUTE:
            delivered, _nominal = e.particles
            ledger.identity[delivered] = e.knowledge
        elif e.kind is EventKind.BELL_MEASURE:
            a, c = e.particles
            m = ledger.new((a, c), BellLabel.parse(e.payload), e.knowledge, "measured")
            same = ledger.pair_var(a, c)
            if same is not None:
                ledger.relate((same, m), (a, c))
            else:
                la, lc = ledger.partner.get(a), ledger.partner.get(c)
                if la is not None and lc is not None:
                    (b, vab), (d, vcd) = la, lc
                    induced = ledger.new((b, d), swap_label(vab.value, vcd.value, m.value), (), "induced")
                    ledger.relate((vab, vcd, m, induced), (a, b, c, d))
                    ledger.link(b, d, induced)
                else:
                    ledger.unlink(a)
                    ledger.unlink(c)
            ledger.link(a, c, m)
            if e.actor is Party.ALICE:
                last_alice_measure = m
        elif e.kind is EventKind.MEASURE:
            ledger.unlink(e.particles[0])
        elif e.kind is EventKind.PAULI_CORRECT:
            (q,) = e.particles
            op = ledger.new((q,), Pauli(e.payload), e.knowledge, "operator")
            link = ledger.partner.get(q)
            if link is not None:
                p, old = link
                side = Side.FIRST if old.pair[0] == q else Side.SECOND
                new = ledger.new(old.pair, pauli_action(old.value, op.value, side), (), "corrected")
                ledger.relate((old, op, new), (q, p))
                ledger.link(q, p, new)
        elif e.kind is EventKind.ANNOUNCE:
            if last_alice_measure is None:
                raise VerificationError("announcement without a preceding measurement by Alice")
            last_alice_measure.knowers.update(e.knowledge)

        ledger.propagate()
        for n, v in enumerate(ledger.vars):
            if not isinstance(v.value, BellLabel):
                continue
            tag = frozenset(v.knowers)
            if reported.get(n) != tag:
                reported[n] = tag
                checkpoints.append(Checkpoint(e.index, v.pair, v.value, tag, v.note))
        if e.kind is EventKind.ANNOUNCE:
            checkpoints.append(_key_view(events, e.index, config))
    return checkpoints

