"""Seeded random models: small DTMCs/MDPs for oracle suites, layered benchmarks."""

from __future__ import annotations

import random
from fractions import Fraction

from ..errors import InputError
from ..mdp import Mdp
from ..partition import DirectedTreePartition


def _weights(rng: random.Random, k: int, leak_max: int = 3) -> list[Fraction]:
    w = [rng.randint(1, 9) for _ in range(k)]
    total = sum(w) + rng.randint(0, leak_max)
    return [Fraction(x, total) for x in w]


def random_mdp(
    states: int,
    seed: int,
    actions: int = 1,
    goals: int = 1,
    max_out: int = 3,
) -> Mdp:
    """Random model on ``states`` states, weakly connected, reachable from state 0.

    The last ``goals`` states are goal traps. Every other state gets between
    1 and ``actions`` actions with up to ``max_out`` successors each; the
    first action of a state always includes its spanning-tree edges.
    """
    if states < 2 or not 1 <= goals < states:
        raise InputError("need at least one goal and one non-goal state")
    rng = random.Random(seed)
    goal = set(range(states - goals, states))
    inner = [s for s in range(states) if s not in goal]
    tree: dict[int, set[int]] = {s: set() for s in inner}
    for t in range(1, states):
        src = rng.choice([s for s in inner if s < t])
        tree[src].add(t)
    transitions = []
    for s in inner:
        n_act = rng.randint(1, actions)
        for k in range(n_act):
            targets = set(tree[s]) if k == 0 else set()
            for _ in range(rng.randint(1, max_out)):
                targets.add(rng.randrange(states))
            targets = sorted(targets)
            for t, p in zip(targets, _weights(rng, len(targets))):
                transitions.append((s, f"a{k}", t, p))
    return Mdp.build(states, transitions, {0: Fraction(1)}, goal)


def random_dtmc(states: int, seed: int, goals: int = 1, max_out: int = 3) -> Mdp:
    return random_mdp(states, seed, actions=1, goals=goals, max_out=max_out)


def layered_random(layers: int, width: int, fanout: int, seed: int) -> tuple[Mdp, DirectedTreePartition]:
    """Chain of ``layers`` gadgets of ``width`` states each, then one goal state.

    State ``l * width + i`` is position i of layer l and position 0 is the
    only way into a layer, much like one chunk of a retransmission protocol.
    Inside a layer every state moves on to the next position and to up to
    ``fanout`` further random positions (earlier ones act as retries). The
    last position, and each other one with probability 1/2, also exits to
    the next layer's entry (the goal after the last layer). Some mass leaks.
    The blocks are the layers plus the goal: a path partition of width
    ``width``.
    """
    if layers < 1 or width < 1 or fanout < 1:
        raise InputError("layers, width and fanout must be positive")
    rng = random.Random(seed)
    goal = layers * width
    transitions = []
    for layer in range(layers):
        base = layer * width
        exit_to = base + width if layer + 1 < layers else goal
        for i in range(width):
            s = base + i
            targets = set()
            if i + 1 < width:
                targets.add(s + 1)
            others = [base + j for j in range(width) if j != i]
            targets.update(rng.sample(others, min(fanout, len(others))))
            if i + 1 == width or rng.random() < 0.5:
                targets.add(exit_to)
            targets = sorted(targets)
            for t, p in zip(targets, _weights(rng, len(targets))):
                transitions.append((s, "a", t, p))
    m = Mdp.build(goal + 1, transitions, {0: Fraction(1)}, {goal})
    blocks = [range(layer * width, (layer + 1) * width) for layer in range(layers)] + [[goal]]
    return m, DirectedTreePartition.from_blocks(m, blocks)
