"""Run time of the tree-partition search on layered models of fixed width.

Prints a CSV table; pass it to any plotting tool. Takes a few minutes.
"""

# %%
import sys
import time

from treewit import SearchConfig, SearchStats, minimal_witness, subsystem_value
from treewit.gadgets.random_models import layered_random

top = int(sys.argv[1]) if len(sys.argv) > 1 else 40
print("layers,states,size,seconds,candidates,kept")
for layers in range(5, top + 1, 5):
    m, part = layered_random(layers, 4, 2, seed=layers)
    lam = subsystem_value(m, m.states) / 2
    stats = SearchStats()
    started = time.perf_counter()
    w = minimal_witness(m, part, SearchConfig(lam=lam), stats)
    took = time.perf_counter() - started
    print(f"{layers},{m.state_count},{w.size},{took:.2f},{stats.candidates_generated},{stats.candidates_kept}", flush=True)
