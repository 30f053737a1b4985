"""Command-line entry point: ``swapqkd {verify,run,branches,table}``.

Exit status is 0 on success, 1 when a verification check fails and 2 on a
usage error. The default seed for ``run`` comes from ``$SWAPQKD_SEED`` when
set, else 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter
from fractions import Fraction
from typing import Callable

from . import bellalg
from .analysis import enumerate_branches, evaluate, reconstruct_table, report_from_runs, sample_runs
from .bellalg import Side, pauli_action, sigma_for
from .protocol import (
    ProtocolConfig,
    Strategy,
    eve_infer_key,
    expected_announcement,
    infer_alice,
    infer_bob,
)
from .qstate import BELL_LABELS, BellLabel, Pauli

SEED_ENV = "SWAPQKD_SEED"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
FORMATS = {
    "verify": ("text", "json"),
    "run": ("json", "csv", "text"),
    "branches": ("json", "csv", "text"),
    "table": ("json", "csv", "text"),
}


# -- verification suite -------------------------------------------------------------


def _check_tables():
    problems = bellalg.verify_tables(bellalg.TABLES)
    return not problems, "; ".join(problems[:3]) or "32 Pauli-action and 64 swap entries match the statevector oracle"


def _check_sigma():
    bad = [r for r in BELL_LABELS if pauli_action(BellLabel(1, 0), sigma_for(r), Side.FIRST) != r]
    return not bad, f"correction rule fails for {list(map(str, bad))}" if bad else "sigma_for steers |10> to every result"


def _check_honest():
    cfg = ProtocolConfig()
    leaves = enumerate_branches(cfg).leaves
    for b in leaves:
        r = b.result
        if b.probability != Fraction(1, 16):
            return False, f"branch {b.path} has probability {b.probability}"
        if r.announcement != expected_announcement(cfg, r.alice_result, r.bob_result):
            return False, f"announcement {r.announcement} off-formula for ({r.alice_result}, {r.bob_result})"
        if infer_bob(r.alice_result, r.announcement, cfg) != r.bob_result:
            return False, f"infer_bob fails on ({r.alice_result}, {r.bob_result})"
        if infer_alice(r.bob_result, r.announcement, cfg) != r.alice_result:
            return False, f"infer_alice fails on ({r.alice_result}, {r.bob_result})"
    return len(leaves) == 16, f"{len(leaves)} honest branches, each 1/16, all consistent"


def _check_table():
    table = reconstruct_table()
    if not table.is_bijective():
        return False, "correspondence table is not bijective in each argument"
    got = table[BellLabel(1, 1), BellLabel(0, 0)]
    return got == BellLabel(0, 0), f"entry (11, 00) -> {got}"


def _attack_leaves():
    return enumerate_branches(ProtocolConfig(strategy=Strategy.SWAP_ATTACK)).leaves


def _check_transparency():
    report = evaluate(Strategy.SWAP_ATTACK)
    honest = Counter((b.result.alice_result, b.result.bob_result, b.result.announcement, b.probability)
                     for b in enumerate_branches(ProtocolConfig()).leaves)
    attacked = Counter((b.result.alice_result, b.result.bob_result, b.result.announcement, b.probability)
                       for b in _attack_leaves())
    ok = report.detection_probability == 0 and honest == attacked
    return ok, f"swap-attack detection_probability={report.detection_probability}; leaf triples match honest: {honest == attacked}"


def _check_mirroring():
    bad = [b.path for b in _attack_leaves() if b.result.eve_result != b.result.bob_result]
    return not bad, f"Eve's result differs from Bob's on branches {bad}" if bad else "eve_result = bob_result on all 16 branches"


def _check_leakage():
    cfg = ProtocolConfig(strategy=Strategy.SWAP_ATTACK)
    bad = [b.path for b in _attack_leaves()
           if eve_infer_key(b.result.eve_result, b.result.announcement, cfg) != b.result.key]
    return not bad, f"Eve misses the key on {bad}" if bad else "Eve recovers the key on all 16 branches"


def _check_example():
    cfg = ProtocolConfig(strategy=Strategy.SWAP_ATTACK)
    alice, bob = BellLabel(1, 1), BellLabel(0, 0)
    for b in _attack_leaves():
        r = b.result
        if (r.alice_result, r.bob_result) != (alice, bob):
            continue
        ops = [e.payload for e in r.transcript if e.kind.value == "PauliCorrect"]
        ok = (
            r.eve_result == bob and ops == [Pauli.X.value] and r.announcement == BellLabel(0, 0)
            and infer_bob(alice, r.announcement, cfg) == bob
            and infer_alice(bob, r.announcement, cfg) == alice
            and eve_infer_key(r.eve_result, r.announcement, cfg) == alice
        )
        return ok, f"Eve {r.eve_result}, applies {ops}, Alice announces {r.announcement}"
    return False, "no branch with Alice 11 and Bob 00"


def _check_contrast():
    report = evaluate(Strategy.MEASURE_RESEND)
    return report.detection_probability > 0, f"measure-resend detection_probability={report.detection_probability}"


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("rule-tables", _check_tables),
    ("sigma-correction", _check_sigma),
    ("honest-consistency", _check_honest),
    ("correspondence-table", _check_table),
    ("attack-transparency", _check_transparency),
    ("eve-mirroring", _check_mirroring),
    ("key-leakage", _check_leakage),
    ("worked-example", _check_example),
    ("measure-resend-contrast", _check_contrast),
]


def verification_suite() -> list[dict]:
    results = []
    for name, check in CHECKS:
        try:
            ok, detail = check()
        except Exception as exc:  # a corrupted table can break later checks outright
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append({"check": name, "passed": bool(ok), "detail": detail})
    return results


# -- commands -------------------------------------------------------------------------


def cmd_verify(args) -> tuple[int, str]:
    results = verification_suite()
    failed = [r for r in results if not r["passed"]]
    reports = {s.value: evaluate(s).to_dict() for s in Strategy} if not failed else {}
    if failed:
        print(f"verification FAILED at {failed[0]['check']}: {failed[0]['detail']}", file=sys.stderr)
    if args.format == "json":
        doc = {"passed": not failed, "checks": results, "reports": reports}
        if failed:
            doc["first_failure"] = failed[0]["check"]
        text = json.dumps(doc, indent=2) + "\n"
    else:
        lines = [f"[{'PASS' if r['passed'] else 'FAIL'}] {r['check']}: {r['detail']}" for r in results]
        if failed:
            lines.append(f"verification FAILED at {failed[0]['check']}")
        else:
            swap = reports[Strategy.SWAP_ATTACK.value]
            lines.append(f"swap-attack detection_probability={swap['detection_probability']['exact']}")
            lines.append("verification passed")
        text = "\n".join(lines) + "\n"
    return (EXIT_FAIL if failed else EXIT_OK), text


def cmd_run(args) -> tuple[int, str]:
    config = ProtocolConfig(strategy=Strategy(args.strategy))
    results = sample_runs(config, args.trials, args.seed)
    report = report_from_runs(config, results, args.seed)
    if args.format == "json":
        runs = []
        for k, r in enumerate(results):
            entry = {"trial": k, **(r.to_dict() if k < args.transcripts else r.summary())}
            runs.append(entry)
        return EXIT_OK, json.dumps({"report": report.to_dict(), "runs": runs}, indent=2) + "\n"
    if args.format == "csv":
        lines = ["trial,alice_result,bob_result,eve_result,announcement,key,flagged"]
        for k, r in enumerate(results):
            s = r.summary()
            lines.append(",".join([str(k), s["alice_result"], s["bob_result"], s["eve_result"] or "",
                                   s["announcement"], s["key"], str(int(s["flagged"]))]))
        return EXIT_OK, "\n".join(lines) + "\n"
    out = [report.to_text().rstrip("\n"), f"  seed {args.seed}"]
    for k, r in enumerate(results[: args.transcripts]):
        out.append(f"trial {k}:")
        for e in r.transcript:
            who = ",".join(sorted(p.value for p in e.knowledge))
            payload = "" if e.payload is None else f" {e.payload}"
            out.append(f"  {e.index:>2} {e.actor.value:<5} {e.kind.value:<12} {e.particles}{payload}  [{who}]")
    return EXIT_OK, "\n".join(out) + "\n"


def cmd_branches(args) -> tuple[int, str]:
    tree = enumerate_branches(ProtocolConfig(strategy=Strategy(args.strategy)))
    return EXIT_OK, {"json": tree.to_json, "csv": tree.to_csv, "text": tree.to_text}[args.format]()


def cmd_table(args) -> tuple[int, str]:
    table = reconstruct_table()
    return EXIT_OK, {"json": table.to_json, "csv": table.to_csv, "text": table.to_text}[args.format]()


COMMANDS = {"verify": cmd_verify, "run": cmd_run, "branches": cmd_branches, "table": cmd_table}


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swapqkd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    strategies = [s.value for s in Strategy]

    def common(p, command):
        p.add_argument("--format", default=FORMATS[command][0], help=f"one of {', '.join(FORMATS[command])}")
        p.add_argument("--output", "-o", help="write to this file instead of standard output")

    p = sub.add_parser("verify", help="run the full invariant suite")
    common(p, "verify")

    p = sub.add_parser("run", help="seeded Monte Carlo runs with report and transcripts")
    p.add_argument("--strategy", choices=strategies, default=Strategy.NONE.value)
    p.add_argument("--trials", type=_positive, default=1)
    env_seed = os.environ.get(SEED_ENV)
    p.add_argument("--seed", type=_seed, default=None, help=f"default: ${SEED_ENV} or 0")
    p.add_argument("--transcripts", type=int, default=1, help="number of leading runs with full transcripts (json/text)")
    common(p, "run")
    p.set_defaults(_env_seed=env_seed)

    p = sub.add_parser("branches", help="exhaustive branch tree")
    p.add_argument("--strategy", choices=strategies, default=Strategy.NONE.value)
    common(p, "branches")

    p = sub.add_parser("table", help="reconstructed honest correspondence table")
    common(p, "table")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format not in FORMATS[args.command]:
        parser.error(f"--format {args.format} is not valid for '{args.command}' (choose from {', '.join(FORMATS[args.command])})")
    if args.command == "run" and args.seed is None:
        try:
            args.seed = _seed(args._env_seed) if args._env_seed is not None else 0
        except (ValueError, argparse.ArgumentTypeError) as exc:
            parser.error(f"${SEED_ENV}: {exc}")
    status, text = COMMANDS[args.command](args)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
