"""Layered Markov chains that encode a conditioned 3-MCP instance.

Layer i (1..n) holds two state triples, left_i and right_i. A triple applies
the matrix of its side (left: M^i_0, right: M^i_1) on its way to both
triples of the next layer, or to the final triple after layer n. The final
triple moves to the single goal state with probabilities ``final``. Picking
exactly one triple per layer (plus the final triple and the goal) yields a
subsystem whose value is the MCP value of the matching bit string.

The robust variant also sends probability gamma around a cycle inside each
triple (x -> y -> z -> x) and shrinks the direct edges so that whole
triples still realize the same matrix, while a triple missing a state loses
almost everything.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Mapping

from ..errors import InputError
from ..mdp import Mdp
from ..partition import DirectedTreePartition
from .mcp import ConditionedMcp, Matrix, McpInstance, _bits, matrix

Variant = Literal["plain", "robust"]


@dataclass(frozen=True)
class GadgetChain:
    dtmc: Mdp
    partition: DirectedTreePartition
    layer_index: Mapping[int, int]
    side: Mapping[int, str]
    n: int
    gamma: Fraction | None
    lam: Fraction

    def triple(self, layer: int, side: str) -> tuple[int, int, int]:
        return _triple(self.n, layer, side)

    @property
    def goal_state(self) -> int:
        return 6 * self.n + 3


def _triple(n: int, layer: int, side: str) -> tuple[int, int, int]:
    if side == "final":
        base = 6 * n
    elif side in ("left", "right") and 1 <= layer <= n:
        base = 6 * (layer - 1) + (3 if side == "right" else 0)
    else:
        raise InputError(f"no {side} triple on layer {layer}")
    return (base, base + 1, base + 2)


def gamma_gap_interval(eps: Fraction, n: int) -> tuple[Fraction, Fraction]:
    """Open interval that 1 - gamma must lie in."""
    return 12 * eps, Fraction(1, 3) * (3 * (Fraction(1, 12) - eps)) ** (n + 2)


def choose_gamma(eps: Fraction, n: int) -> Fraction:
    lo, hi = gamma_gap_interval(eps, n)
    if not lo < hi:
        raise InputError(f"no admissible gamma: need {lo} < 1 - gamma < {hi}")
    return 1 - (lo + hi) / 2


def cycle_matrix(gamma) -> Matrix:
    """Exit distribution of a gamma-cycle: entry (a, b) is the probability of
    leaving the cycle from b after entering it at a, per unit direct mass."""
    g = Fraction(gamma)
    c = (1 - g) / (1 - g**3)
    return matrix([[c, c * g, c * g * g], [c * g * g, c, c * g], [c * g, c * g * g, c]])


def cycle_split(m: Matrix, gamma) -> Matrix:
    """The matrix M' with cycle_matrix(gamma) . M' = M."""
    g = Fraction(gamma)
    return tuple(
        tuple((m[a][b] - g * m[(a + 1) % 3][b]) / (1 - g) for b in range(3)) for a in range(3)
    )


def mcp_to_chain(cond: ConditionedMcp | McpInstance, variant: Variant = "plain", epsilon=None) -> GadgetChain:
    if isinstance(cond, ConditionedMcp):
        inst, eps = cond.instance, cond.epsilon
    else:
        inst, eps = cond, (Fraction(epsilon) if epsilon is not None else None)
    if inst.dim != 3:
        raise InputError("chains encode 3-dimensional instances")
    if variant not in ("plain", "robust"):
        raise InputError(f"unknown variant {variant!r}")
    n = inst.n
    gamma = None
    if variant == "robust":
        if eps is None:
            raise InputError("the robust variant needs epsilon")
        gamma = choose_gamma(eps, n)

    transitions = []

    def emit(src: tuple, rows, targets: list[tuple]):
        for a in range(3):
            if gamma is not None:
                transitions.append((src[a], "a", src[(a + 1) % 3], gamma))
            for tgt in targets:
                for b, t in enumerate(tgt):
                    if gamma is None:
                        p = rows[a][b]
                    else:
                        p = rows[a][b] - gamma * rows[(a + 1) % 3][b]
                    if p < 0:
                        raise InputError("negative probability; entries violate the conditioning bounds")
                    transitions.append((src[a], "a", t, p))

    final = _triple(n, 0, "final")
    goal = 6 * n + 3
    layer_index, side = {}, {}
    for i in range(1, n + 1):
        nxt = [_triple(n, i + 1, "left"), _triple(n, i + 1, "right")] if i < n else [final]
        for bit, name in enumerate(("left", "right")):
            trip = _triple(n, i, name)
            emit(trip, inst.pairs[i - 1][bit], nxt)
            for s in trip:
                layer_index[s], side[s] = i, name
    emit(final, [[x] for x in inst.final], [(goal,)])
    for s in final:
        layer_index[s], side[s] = n + 1, "final"
    layer_index[goal], side[goal] = n + 2, "goal"

    starts = [_triple(n, 1, "left"), _triple(n, 1, "right")] if n else [final]
    initial = {t[a]: inst.iota[a] for t in starts for a in range(3)}
    m = Mdp.build(6 * n + 4, transitions, initial, {goal})

    blocks = [set(_triple(n, i, "left")) | set(_triple(n, i, "right")) for i in range(1, n + 1)]
    blocks += [set(final), {goal}]
    part = DirectedTreePartition.from_blocks(m, blocks)
    return GadgetChain(m, part, layer_index, side, n, gamma, inst.lam)


def good_subsystem(chain: GadgetChain, sigma) -> frozenset[int]:
    """Final triple, goal, and per layer the left (0) or right (1) triple."""
    bits = _bits(sigma, chain.n)
    states = set(chain.triple(0, "final")) | {chain.goal_state}
    for i, b in enumerate(bits, start=1):
        states |= set(chain.triple(i, "right" if b == "1" else "left"))
    return frozenset(states)

