"""
Eve's swap attack, step by step
===============================

Eve keeps particle 2, sends half of her own pair (7) to Bob instead, catches
particle 6 on the way back, Bell-measures it with 8 and repairs particle 2
with a Pauli chosen from her result before passing it to Alice.
"""

from swapqkd.analysis import knowledge_audit
from swapqkd.bellalg import sigma_for
from swapqkd.protocol import ProtocolConfig, Strategy, eve_infer_key, run_attack
from swapqkd.qstate import BellLabel

config = ProtocolConfig(strategy=Strategy.SWAP_ATTACK)
leaves = run_attack(config)
example = next(b.result for b in leaves if (b.result.alice_result, b.result.bob_result) == (BellLabel(1, 1), BellLabel(0, 0)))

for e in example.transcript:
    who = ",".join(sorted(p.value for p in e.knowledge))
    print(f"{e.index:>2} {e.actor.value:<5} {e.kind.value:<12} {e.particles} {e.payload or ''}  [{who}]")

# %%
# Eve saw the same label as Bob, applied the matching correction and can
# now read the key off the public announcement.

print("Eve's result", example.eve_result, "-> correction", sigma_for(example.eve_result))
print("announcement", example.announcement, "flagged:", example.flagged)
print("Eve's key guess", eve_infer_key(example.eve_result, example.announcement, config), "key", example.key)

# %%
# Who can deduce which Bell label, and when.

for cp in knowledge_audit(example.transcript):
    who = ",".join(sorted(p.value for p in cp.knowledge)) or "nobody"
    print(f"after event {cp.index:>2}: {cp.pair} = {cp.label}  known to {who}  ({cp.note})")
