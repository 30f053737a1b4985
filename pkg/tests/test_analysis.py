import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path

import pytest

from swapqkd.analysis import (
    BranchTree,
    VerificationError,
    enumerate_branches,
    evaluate,
    knowledge_audit,
    reconstruct_table,
    sample_runs,
    trial_rngs,
)
from swapqkd.protocol import Party, ProtocolConfig, Strategy, run
from swapqkd.qstate import BELL_LABELS, BellLabel

L = BellLabel.parse
GOLDEN = json.loads((Path(__file__).parent / "data" / "golden.json").read_text())
ALICE, BOB, EVE, PUBLIC = Party.ALICE, Party.BOB, Party.EVE, Party.PUBLIC


# -- enumeration ----------------------------------------------------------------------


@pytest.mark.parametrize("strategy,leaves", [("none", 16), ("swap-attack", 16), ("measure-resend", 64)])
def test_enumerate_leaf_counts(strategy, leaves):
    tree = enumerate_branches(strategy=strategy)
    assert len(tree.leaves) == leaves
    assert tree.total_probability == 1
    n_measurements = max(len(b.path) for b in tree.leaves)
    assert len(tree.leaves) <= 4**n_measurements
    assert all(b.probability > 0 for b in tree.leaves)


def test_enumerate_paths_sorted_and_unique():
    tree = enumerate_branches(strategy="swap-attack")
    paths = [b.path for b in tree.leaves]
    assert paths == sorted(paths) and len(set(paths)) == len(paths)


def test_branch_tree_serialization():
    tree = enumerate_branches(strategy="swap-attack")
    doc = json.loads(tree.to_json())
    assert doc["leaf_count"] == 16
    assert {leaf["probability_float"] for leaf in doc["leaves"]} == {0.0625}
    rows = list(csv.DictReader(io.StringIO(tree.to_csv())))
    assert len(rows) == 16 and all(r["probability"] == "1/16" for r in rows)
    assert tree.to_text().startswith("strategy swap-attack: 16 leaves")


# -- correspondence table ------------------------------------------------------------------


def test_table_worked_example_entry():
    assert reconstruct_table()[L("11"), L("00")] == L("00")


@pytest.mark.parametrize("r", BELL_LABELS)
def test_table_identity_row(r):
    from swapqkd.bellalg import swap_label

    assert reconstruct_table()[r, L("10")] == swap_label(L("11"), L("10"), r)


def test_table_full_and_bijective():
    table = reconstruct_table()
    assert len(table) == 16 and table.is_bijective()
    got = {f"{a},{b}": c for a, b, c in table.rows()}
    assert got == GOLDEN["honest_table"]


def test_table_explains_honest_and_attacked_leaves():
    table = reconstruct_table()
    for strategy in ("none", "swap-attack"):
        assert all(table.explains(b.result) for b in enumerate_branches(strategy=strategy).leaves)
    mr = enumerate_branches(strategy="measure-resend").leaves
    assert not all(table.explains(b.result) for b in mr)


def test_table_requires_honest_config():
    with pytest.raises(ValueError):
        reconstruct_table(ProtocolConfig(strategy=Strategy.SWAP_ATTACK))


def test_table_serializations_stable():
    table = reconstruct_table()
    assert table.to_json() == reconstruct_table().to_json()
    assert {"alice_result": "11", "bob_result": "00", "announcement": "00"} in json.loads(table.to_json())["entries"]
    assert "11,00,00" in table.to_csv().splitlines()
    assert table.to_text().splitlines()[0].split()[1:] == ["00", "01", "10", "11"]


def test_inconsistent_leaves_raise(monkeypatch):
    import swapqkd.analysis as analysis

    real = analysis.enumerate_branches

    def doubled(config):
        tree = real(config)
        first = tree.leaves[0]
        other = run(config.with_strategy("measure-resend"))
        fake = next(b for b in other if (b.result.alice_result, b.result.bob_result) == (first.result.alice_result, first.result.bob_result) and b.result.announcement != first.result.announcement)
        return BranchTree(tree.strategy, tree.leaves + (fake,))

    monkeypatch.setattr(analysis, "enumerate_branches", doubled)
    with pytest.raises(VerificationError):
        analysis.reconstruct_table()


# -- reports -----------------------------------------------------------------------------


def test_evaluate_swap_attack_exhaustive():
    report = evaluate("swap-attack")
    assert report.detection_probability == 0
    assert report.eve_key_rate == 1
    assert report.alice_bob_agreement == 1
    assert report.count == 16 and report.flagged == 0


def test_evaluate_honest_exhaustive():
    report = evaluate("none")
    assert report.detection_probability == 0 and report.alice_bob_agreement == 1
    assert report.eve_key_rate is None
    assert set(report.alice_distribution.values()) == {Fraction(1, 4)}


def test_evaluate_measure_resend_matches_golden():
    report = evaluate("measure-resend")
    golden = GOLDEN["measure_resend"]
    assert report.count == golden["leaves"]
    assert report.detection_probability == Fraction(golden["detection_probability"])
    assert report.alice_bob_agreement == Fraction(golden["alice_bob_agreement"])
    assert report.detection_probability > 0


def test_report_serializations():
    report = evaluate("swap-attack")
    doc = json.loads(report.to_json())
    assert doc["detection_probability"] == {"exact": "0", "value": 0.0}
    rows = dict(csv.reader(io.StringIO(report.to_csv())))
    assert rows["eve_key_rate"] == "1"
    assert "detection probability  0.000000" in report.to_text()


def test_evaluate_exhaustive_deterministic():
    assert evaluate("measure-resend").to_json() == evaluate("measure-resend").to_json()


def test_trial_rngs_split_rule():
    a = [g.random() for g in trial_rngs(5, 4)]
    b = [g.random() for g in trial_rngs(5, 6)][:4]
    assert a == b  # trial k's stream does not depend on the trial count


def test_sampled_deterministic_given_seed():
    assert evaluate("measure-resend", trials=200, seed=3).to_json() == evaluate("measure-resend", trials=200, seed=3).to_json()
    assert evaluate("measure-resend", trials=200, seed=3).to_json() != evaluate("measure-resend", trials=200, seed=4).to_json()


def test_sampled_converges_to_exhaustive():
    n = 2000
    exact = evaluate("measure-resend").detection_probability
    sampled = evaluate("measure-resend", trials=n, seed=11).detection_probability
    sigma = math.sqrt(float(exact) * (1 - float(exact)) / n)
    assert abs(float(sampled) - float(exact)) <= 5 * sigma


def test_sample_runs_rejects_zero_trials():
    with pytest.raises(ValueError):
        sample_runs(ProtocolConfig(), 0, 1)


# -- knowledge audit ---------------------------------------------------------------------


def _example_transcript(strategy):
    for b in run(ProtocolConfig(strategy=strategy)):
        if (b.result.alice_result, b.result.bob_result) == (L("11"), L("00")):
            return b.result.transcript
    raise AssertionError


def _tags(checkpoints, pair, note=None):
    return [(cp.index, cp.knowledge) for cp in checkpoints if set(cp.pair) == set(pair) and (note is None or cp.note == note)]


def test_audit_initial_pairs_public():
    cps = knowledge_audit(_example_transcript(Strategy.SWAP_ATTACK))
    for pair in [(1, 2), (3, 5), (4, 6)]:
        (idx, tag), *_ = _tags(cps, pair, "prepared")
        assert PUBLIC in tag


def test_audit_eve_pair_private():
    cps = knowledge_audit(_example_transcript(Strategy.SWAP_ATTACK))
    assert _tags(cps, (7, 8), "prepared") == [(3, frozenset({EVE}))]


def test_audit_attack_labels_and_timing():
    transcript = _example_transcript(Strategy.SWAP_ATTACK)
    cps = knowledge_audit(transcript)
    announce = next(e.index for e in transcript if e.kind.value == "Announce")
    # (2,5) after Alice's swap: Alice only until the announcement
    induced = _tags(cps, (2, 5), "induced")
    assert all(tag == {ALICE} for idx, tag in induced if idx < announce)
    assert induced[-1] == (announce, frozenset({ALICE, EVE}))
    # Bob's swap leaves (8,6) unknown to everyone until Eve measures it
    assert _tags(cps, (8, 6), "induced")[0][1] == frozenset()
    eve_measure = [cp for cp in cps if set(cp.pair) == {6, 8} and cp.note == "measured"]
    assert [cp.knowledge for cp in eve_measure] == [frozenset({EVE})]
    # Eve learns Bob's private result from her own measurement
    bob = _tags(cps, (7, 4), "measured")
    assert bob[0][1] == {BOB} and bob[-1][1] == {BOB, EVE}


def test_audit_key_after_announcement():
    honest = knowledge_audit(_example_transcript(Strategy.NONE))
    attacked = knowledge_audit(_example_transcript(Strategy.SWAP_ATTACK))
    (h,) = [cp for cp in honest if cp.note == "key"]
    (a,) = [cp for cp in attacked if cp.note == "key"]
    assert h.label == a.label == L("11")
    assert h.knowledge == {ALICE, BOB}
    assert a.knowledge == {ALICE, BOB, EVE}
    # the propagation itself also hands Eve the (1,3) result under attack
    assert _tags(attacked, (1, 3), "measured")[-1][1] == {ALICE, EVE}


def test_audit_all_attack_branches_leak_key():
    for b in run(ProtocolConfig(strategy=Strategy.SWAP_ATTACK)):
        (key,) = [cp for cp in knowledge_audit(b.result.transcript) if cp.note == "key"]
        assert key.label == b.result.key and EVE in key.knowledge and BOB in key.knowledge


def test_audit_measure_resend_runs():
    for b in run(ProtocolConfig(strategy=Strategy.MEASURE_RESEND))[:8]:
        (key,) = [cp for cp in knowledge_audit(b.result.transcript) if cp.note == "key"]
        assert EVE not in key.knowledge
        assert (BOB in key.knowledge) == (not b.result.flagged)
