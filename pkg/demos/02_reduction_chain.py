"""From a partition-problem instance to a Markov chain whose small witnesses
exist exactly when the integers split evenly."""

# %%
import itertools

from treewit import minimal_witness, SearchConfig, subsystem_value
from treewit.gadgets.chains import good_subsystem, mcp_to_chain
from treewit.gadgets.mcp import mcp_brute, mcp_value, partition_answer, pipeline

for ints in ([2, 1, 1], [1, 2]):
    two, lifted, cond = pipeline(ints)
    print(ints, "splits evenly:", partition_answer(ints))
    for name, inst in (("rotations", two), ("lifted", lifted), ("conditioned", cond.instance)):
        ans = mcp_brute(inst)
        print(f"  {name:12s} best sigma {ans.sigma}  yes={ans.yes}")
    print("  eps =", cond.epsilon, " kappa =", cond.kappa)

# %%
ints = [2, 1, 1]
cond = pipeline(ints)[2]
chain = mcp_to_chain(cond, "robust")
print(chain.dtmc.state_count, "states, gamma =", float(chain.gamma))
print("blocks:", [sorted(b) for b in chain.partition.blocks])

# every choice of triples gives exactly the matrix product
for bits in itertools.product("01", repeat=chain.n):
    s = good_subsystem(chain, bits)
    assert subsystem_value(chain.dtmc, s) == mcp_value(cond.instance, bits)
    print("".join(bits), "meets lambda" if mcp_value(cond.instance, bits) >= chain.lam else "below lambda")

# %%
n = len(ints)
cfg = SearchConfig(lam=chain.lam, size_upper_bound=3 * n + 4, enable_value_sum_prune=True, enable_size_bound_prune=True)
w = minimal_witness(chain.dtmc, chain.partition, cfg)
print("witness:", None if w is None else sorted(w.states))
print("good subsystems:", {b: sorted(good_subsystem(chain, b)) for b in ("011", "100")})
