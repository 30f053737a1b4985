"""
The undisturbed protocol and its correspondence table
=====================================================

Alice keeps (1, 3), sends 2 to Bob; Bob measures (2, 4) and returns 6; Alice
measures (5, 6) and announces. Her (1, 3) result is the key.
"""

from swapqkd.analysis import enumerate_branches, reconstruct_table
from swapqkd.protocol import ProtocolConfig, infer_alice, infer_bob

config = ProtocolConfig()
tree = enumerate_branches(config)
print(tree.to_text())

# %%
# Every (alice, bob) pair occurs with probability 1/16 and fixes the
# announcement. Collecting the leaves gives the correspondence table.

table = reconstruct_table(config)
print(table.to_text())
print("bijective in each argument:", table.is_bijective())

# %%
# Each side recovers the other's private result from the announcement.

leaf = tree.leaves[-1].result
print("Alice infers Bob:", infer_bob(leaf.alice_result, leaf.announcement, config), "actual", leaf.bob_result)
print("Bob infers key:  ", infer_alice(leaf.bob_result, leaf.announcement, config), "actual", leaf.key)
