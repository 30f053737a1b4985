"""
Bell states, Pauli frames and entanglement swapping
===================================================

The four Bell states are named by two bits: ``flip`` (do the two kets
differ?) and ``phase`` (is the superposition a '-'?).
"""

import numpy as np

from swapqkd.bellalg import TABLES, Side, pauli_action, swap_label
from swapqkd.qstate import BELL_LABELS, BellLabel, Pauli, bell_branches, make_bell, tensor

for label in BELL_LABELS:
    print(label, np.round(make_bell(label, 1, 2).amplitudes.real, 3))

# %%
# A single-qubit Pauli on either half of a Bell pair just relabels it.
# X flips the first bit, Z the second, Y both (the real Y = [[0, -1], [1, 0]]).

for op in Pauli:
    row = [str(pauli_action(lab, op, Side.FIRST)) for lab in BELL_LABELS]
    print(op, row)

# %%
# Entanglement swapping: Alice holds |11> on (1, 2) and |10> on (3, 5).
# A Bell measurement on (1, 3) leaves (2, 5) in a Bell state fixed by the result.

joint = tensor(make_bell(BellLabel(1, 1), 1, 2), make_bell(BellLabel(1, 0), 3, 5))
for outcome in bell_branches(joint, 1, 3):
    left = swap_label(BellLabel(1, 1), BellLabel(1, 0), outcome.label)
    print(f"measure {outcome.label} with p={outcome.probability:.2f} -> (2, 5) in {left}")

# %%
# The full rule tables are generated from the statevector engine at import time.

print(len(TABLES.pauli_action), "Pauli-action entries,", len(TABLES.swap), "swap entries")
