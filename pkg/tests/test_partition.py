import itertools
from fractions import Fraction as F

import pytest

from treewit import RefusalError
from treewit.gadgets.chains import mcp_to_chain
from treewit.gadgets.mcp import pipeline
from treewit.gadgets.random_models import random_mdp
from treewit.mdp import Mdp
from treewit.partition import (
    DirectedTreePartition,
    block_interfaces,
    brute_force_min_width,
    heuristic_partition,
    min_width_search,
    model_min_width,
    quotient,
    validate_partition,
)


def dag(edges, n, init=0, goal=None):
    goal = {n - 1} if goal is None else goal
    return Mdp.build(n, [(u, "a", v, F(1, 2)) for u, v in edges], {init: 1}, goal)


def test_singleton_quotient_is_graph_without_loops():
    g = {0: [0, 1], 1: [2], 2: [0, 2]}
    q = quotient(g, [[0], [1], [2]])
    assert q == {0: {1}, 1: {2}, 2: {0}}


def test_single_block_quotient():
    g = {0: [1], 1: [0, 2], 2: []}
    assert quotient(g, [[0, 1, 2]]) == {0: set()}


def test_two_way_edges_make_a_two_cycle():
    g = {0: [1], 1: [0]}
    q = quotient(g, [[0], [1]])
    assert 1 in q[0] and 0 in q[1]


def test_split_scc_is_rejected():
    m = dag([(0, 1), (1, 0), (1, 2)], 3)
    part = DirectedTreePartition.from_blocks(m, [[0], [1], [2]])
    assert any(p.startswith("tree") or "cycle" in p for p in validate_partition(m, part))


def test_initial_outside_root():
    m = Mdp.build(3, [(0, "a", 1, F(1, 2)), (1, "a", 2, F(1, 2))], {0: F(1, 2), 1: F(1, 2)}, {2})
    part = DirectedTreePartition.from_blocks(m, [[0], [1], [2]])
    assert any(p.startswith("root") for p in validate_partition(m, part))


def test_missing_state_is_a_coverage_error():
    m = dag([(0, 1), (1, 2)], 3)
    part = DirectedTreePartition.from_blocks(m, [[0], [1]])
    assert any(p.startswith("coverage") for p in validate_partition(m, part))


def test_m1_layer_partition():
    _, _, cond = pipeline([1, 2, 1])
    chain = mcp_to_chain(cond, "plain")
    assert validate_partition(chain.dtmc, chain.partition) == []
    assert chain.partition.width == 6
    assert chain.partition.is_path


def test_interfaces_on_block_chain():
    # B0 = {0, 1}, B1 = {2, 3}, B2 = {4, 5}, goal {6}; cross edges 1 -> 2 and 3 -> 4
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)]
    m = dag(edges, 7)
    part = DirectedTreePartition.from_blocks(m, [[0, 1], [2, 3], [4, 5], [6]])
    assert validate_partition(m, part) == []
    itf = block_interfaces(m, part, 1)
    assert itf.inc == {2}
    assert itf.out == {4}
    assert itf.exit == {3}
    root = block_interfaces(m, part, 0)
    assert root.inc == set(m.initial)
    leaf = block_interfaces(m, part, 3)
    assert leaf.out == set() and leaf.cl == {6}


def test_out_tree_gets_singletons():
    m = dag([(0, 1), (0, 2), (1, 3), (1, 4)], 5, goal={3, 4})
    part = heuristic_partition(m)
    assert validate_partition(m, part) == []
    assert part.width == 1


def test_cycle_is_one_block():
    m = Mdp.build(4, [(0, "a", 1, 1), (1, "a", 2, 1), (2, "a", 3, F(1, 2)), (3, "a", 0, 1)], {0: 1}, set())
    part = heuristic_partition(m)
    assert part.width == 4 and len(part.blocks) == 1


def test_diamond():
    m = dag([(0, 1), (0, 2), (1, 3), (2, 3)], 4)
    part = heuristic_partition(m)
    assert validate_partition(m, part) == []
    assert set(part.blocks) == {frozenset({0}), frozenset({1, 2}), frozenset({3})}
    assert part.width == 2


@pytest.mark.parametrize("seed", range(30))
def test_heuristic_is_valid_and_consistent(seed):
    m = random_mdp(9, seed=seed, actions=2, goals=2)
    part = heuristic_partition(m)
    assert validate_partition(m, part) == []
    root = part.root
    assert block_interfaces(m, part, root).inc >= set(m.initial)
    for b in range(len(part.blocks)):
        itf = block_interfaces(m, part, b)
        kids = part.children[b]
        assert itf.out == set().union(*(block_interfaces(m, part, c).inc for c in kids))
        for c1, c2 in itertools.combinations(kids, 2):
            assert not part.closure(c1) & part.closure(c2)


def test_brute_width_small_cases():
    assert brute_force_min_width({0: [1], 1: [2], 2: [0]}) == 3
    assert brute_force_min_width({0: []}) == 1


def test_brute_width_refuses_large_graphs():
    g = {i: [i + 1] for i in range(11)}
    with pytest.raises(RefusalError):
        brute_force_min_width(g, limit=10)


@pytest.mark.parametrize("seed", range(8))
def test_tree_width_at_most_path_width(seed):
    m = random_mdp(6, seed=seed)
    g = m.successors
    assert brute_force_min_width(g, "tree") <= brute_force_min_width(g, "path")
    part = heuristic_partition(m)
    assert part.width >= model_min_width(m, "tree", 10)[0] >= brute_force_min_width(g, "tree")


def test_m1_one_layer_width_six():
    _, _, cond = pipeline([1])
    m = mcp_to_chain(cond, "plain").dtmc
    tree, checked, _ = model_min_width(m, "tree")
    path, _, _ = model_min_width(m, "path")
    assert (tree, path, checked) == (6, 6, 115975)


def test_m1_one_layer_bare_graph_is_narrower():
    # without the root condition a 5/5 split is a tree partition
    _, _, cond = pipeline([1])
    m = mcp_to_chain(cond, "plain").dtmc
    width, _, blocks = min_width_search(m.successors, "tree")
    assert width == 5
