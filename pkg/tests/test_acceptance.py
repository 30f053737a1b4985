"""Exit criteria. Each test records a PASS/FAIL line printed in the terminal summary."""

import json
import math
import subprocess
import sys
from collections import Counter
from fractions import Fraction
from pathlib import Path

from swapqkd.analysis import enumerate_branches, evaluate, sample_runs
from swapqkd.bellalg import TABLES, verify_tables
from swapqkd.protocol import (
    EventKind,
    ProtocolConfig,
    Strategy,
    eve_infer_key,
    expected_announcement,
    infer_alice,
    infer_bob,
)
from swapqkd.qstate import BELL_LABELS, BellLabel

L = BellLabel.parse
GOLDEN = json.loads((Path(__file__).parent / "data" / "golden.json").read_text())
RESULTS: list[str] = []

ATTACK = ProtocolConfig(strategy=Strategy.SWAP_ATTACK)
HONEST = ProtocolConfig()


def record(number, name, ok, detail):
    RESULTS.append(f"[{'PASS' if ok else 'FAIL'}] {number}. {name}: {detail}")
    assert ok, detail


def test_1_attack_transparency():
    report = evaluate(Strategy.SWAP_ATTACK)
    p = report.detection_probability
    record(1, "attack transparency", isinstance(p, Fraction) and p == 0,
           f"exact detection_probability = {p} over {report.count} branches")


def test_2_key_leakage():
    leaves = enumerate_branches(ATTACK).leaves
    hits = sum(eve_infer_key(b.result.eve_result, b.result.announcement, ATTACK) == b.result.alice_result for b in leaves)
    rate = evaluate(Strategy.SWAP_ATTACK).eve_key_rate
    record(2, "key leakage", len(leaves) == 16 and hits == 16 and rate == 1,
           f"Eve recovers the key on {hits}/{len(leaves)} branches, eve_key_rate = {rate}")


def test_3_eve_mirroring():
    leaves = enumerate_branches(ATTACK).leaves
    same = sum(b.result.eve_result == b.result.bob_result for b in leaves)
    record(3, "Eve mirroring", len(leaves) == 16 and same == 16, f"eve_result = bob_result on {same}/{len(leaves)} branches")


def test_4_worked_example():
    (leaf,) = [b for b in enumerate_branches(ATTACK).leaves
               if (str(b.result.alice_result), str(b.result.bob_result)) == ("11", "00")]
    r = leaf.result
    (correction,) = [e.payload for e in r.transcript if e.kind is EventKind.PAULI_CORRECT]
    tokens = {
        "eve": str(r.eve_result),
        "op": correction,
        "announce": str(r.announcement),
        "infer_bob": str(infer_bob(r.alice_result, r.announcement, ATTACK)),
        "infer_alice": str(infer_alice(r.bob_result, r.announcement, ATTACK)),
        "eve_infer_key": str(eve_infer_key(r.eve_result, r.announcement, ATTACK)),
    }
    want = {"eve": "00", "op": "X", "announce": "00", "infer_bob": "00", "infer_alice": "11", "eve_infer_key": "11"}
    record(4, "worked example", tokens == want, " ".join(f"{k}={v}" for k, v in tokens.items()))


def test_5_honest_consistency():
    leaves = enumerate_branches(HONEST).leaves
    ok = len(leaves) == 16
    for b in leaves:
        r = b.result
        ok &= b.probability == Fraction(1, 16)
        ok &= r.announcement == expected_announcement(HONEST, r.alice_result, r.bob_result)
        ok &= infer_bob(r.alice_result, r.announcement, HONEST) == r.bob_result
        ok &= infer_alice(r.bob_result, r.announcement, HONEST) == r.alice_result
    # cross-check the formula against the independently measured table
    ok &= all(str(expected_announcement(HONEST, L(k[:2]), L(k[3:]))) == v for k, v in GOLDEN["honest_table"].items())
    record(5, "honest-protocol consistency", bool(ok), f"{len(leaves)} branches at 1/16, formula and round-trips hold")


def test_6_oracle_equivalence():
    problems = verify_tables()
    record(6, "oracle equivalence", not problems and len(TABLES.pauli_action) == 32 and len(TABLES.swap) == 64,
           f"{32 + 64 - len(problems)}/96 table entries agree with the statevector oracle (tol 1e-9)")


def test_7_contrast_baseline():
    golden = Fraction(GOLDEN["measure_resend"]["detection_probability"])
    got = evaluate(Strategy.MEASURE_RESEND).detection_probability
    record(7, "contrast baseline", got > 0 and got == golden, f"measure-resend detection_probability = {got} (golden {golden})")


def test_8_statistical_consistency():
    n, seed = 10_000, 20_240_601
    attack = sample_runs(ATTACK, n, seed)
    flagged = sum(r.flagged for r in attack)
    recovered = sum(eve_infer_key(r.eve_result, r.announcement, ATTACK) == r.key for r in attack)
    honest = sample_runs(HONEST, n, seed)
    sigma = math.sqrt(n * 0.25 * 0.75)
    worst = 0.0
    for attr in ("alice_result", "bob_result"):
        counts = Counter(getattr(r, attr) for r in honest)
        worst = max(worst, max(abs(counts[lab] - n / 4) / sigma for lab in BELL_LABELS))
    record(8, "statistical consistency", flagged == 0 and recovered == n and worst <= 5,
           f"{flagged} flagged, {recovered}/{n} keys recovered, worst honest label deviation {worst:.2f} sigma")


CLI_CASES = [
    ["verify"],
    ["verify", "--format", "json"],
    ["run", "--strategy", "swap-attack", "--trials", "1", "--seed", "7", "--format", "json"],
    ["run", "--strategy", "none", "--trials", "200", "--seed", "1", "--format", "csv"],
    ["run", "--strategy", "measure-resend", "--trials", "20", "--seed", "3", "--format", "text"],
    ["branches", "--strategy", "swap-attack", "--format", "json"],
    ["branches", "--strategy", "measure-resend", "--format", "csv"],
    ["branches", "--strategy", "none", "--format", "text"],
    ["table", "--format", "json"],
    ["table", "--format", "csv"],
    ["table", "--format", "text"],
]


def test_9_cli_determinism():
    def call(argv):
        return subprocess.run([sys.executable, "-m", "swapqkd", *argv], capture_output=True, check=True).stdout

    differing = [" ".join(argv) for argv in CLI_CASES if call(argv) != call(argv)]
    record(9, "CLI determinism", not differing,
           f"{len(CLI_CASES) - len(differing)}/{len(CLI_CASES)} invocations byte-identical" + (f"; differ: {differing}" if differing else ""))
