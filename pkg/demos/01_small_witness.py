"""Smallest witnessing subsystem of a toy chain, computed three ways."""

# %%
from fractions import Fraction

from treewit import (
    DirectedTreePartition,
    Mdp,
    SearchConfig,
    SearchStats,
    brute_force_minimal_witness,
    heuristic_partition,
    minimal_witness,
    reach_values,
)
from treewit.io import write_model

# s0 picks one of two routes, each of which may leak before the goal (5)
m = Mdp.build(
    6,
    [
        (0, "a", 1, Fraction(1, 2)),
        (0, "a", 2, Fraction(1, 2)),
        (1, "a", 3, Fraction(3, 4)),
        (2, "a", 3, Fraction(1, 2)),
        (2, "a", 4, Fraction(1, 4)),
        (3, "a", 5, Fraction(2, 3)),
        (4, "a", 5, Fraction(1)),
    ],
    {0: 1},
    {5},
)
print(write_model(m))
print("reach values:", reach_values(m))

# %%
# one block per "stage", goal alone at the bottom of the tree
part = DirectedTreePartition.from_blocks(m, [[0], [1, 2], [3, 4], [5]])
print("width", part.width, "path-shaped", part.is_path)

for lam in (Fraction(1, 4), Fraction(7, 24), Fraction(1, 2)):
    stats = SearchStats()
    w = minimal_witness(m, part, SearchConfig(lam=lam), stats)
    o = brute_force_minimal_witness(m, SearchConfig(lam=lam))
    print(f"lambda={lam}: states {sorted(w.states)} value {w.value}  (brute force: size {o.size})")
    print("   ", stats.as_dict())

# %%
# the same search with a partition built automatically
auto = heuristic_partition(m)
print([sorted(b) for b in auto.blocks])
print(minimal_witness(m, auto, SearchConfig(lam=Fraction(1, 2))))

# %%
# min mode: a state that can choose to leak
mdp = Mdp.build(
    3,
    [(0, "safe", 2, Fraction(9, 10)), (0, "risky", 1, 1), (1, "a", 2, Fraction(1, 2))],
    {0: 1},
    {2},
)
mpart = heuristic_partition(mdp)
for mode in ("max", "min"):
    cfg = SearchConfig(mode=mode, lam=Fraction(1, 2))
    print(mode, minimal_witness(mdp, mpart, cfg))
