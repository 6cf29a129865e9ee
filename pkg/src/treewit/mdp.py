"""Sub-stochastic DTMCs/MDPs with exact rational probabilities.

States are the integers ``0 .. state_count - 1``. A DTMC is simply an MDP in
which every state has at most one action. Reachability values are computed
exactly: components of the state graph are solved sink-first, by Gaussian
elimination when there is no choice and by policy iteration otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Literal, Mapping

from . import graph
from .errors import InputError
from .linalg import ZERO, _f, _q, solve_linear_q

Mode = Literal["min", "max"]

ASSUME_ACTION = "assume"


def as_fraction(x) -> Fraction:
    if isinstance(x, float):
        raise InputError(f"refusing float probability {x!r}; use an exact rational")
    return Fraction(x)


@dataclass(frozen=True)
class Mdp:
    state_count: int
    actions: tuple[tuple[str, ...], ...]
    trans: Mapping[tuple[int, str], tuple[tuple[int, Fraction], ...]]
    initial: Mapping[int, Fraction]
    goal: frozenset[int]

    @classmethod
    def build(
        cls,
        state_count: int,
        transitions: Iterable[tuple[int, str, int, object]],
        initial: Mapping[int, object],
        goal: Iterable[int],
        actions: Mapping[int, Iterable[str]] | None = None,
    ) -> "Mdp":
        """Assemble a model from ``(source, action, target, probability)`` tuples.

        Actions appear in first-mention order (``actions`` can pre-declare
        labels, including ones whose transitions are all zero). Zero
        probabilities are dropped; a repeated ``(source, action, target)``
        is an input error.
        """
        acts: list[list[str]] = [[] for _ in range(state_count)]
        rows: dict[tuple[int, str], dict[int, Fraction]] = {}
        if actions:
            for s, labels in actions.items():
                _check_state(s, state_count)
                for a in labels:
                    if a not in acts[s]:
                        acts[s].append(a)
                        rows[(s, a)] = {}
        for s, a, t, p in transitions:
            _check_state(s, state_count)
            _check_state(t, state_count)
            p = as_fraction(p)
            if a not in acts[s]:
                acts[s].append(a)
                rows[(s, a)] = {}
            if t in rows[(s, a)]:
                raise InputError(f"duplicate transition {s} {a} {t}")
            rows[(s, a)][t] = p
        trans = {
            key: tuple((t, p) for t, p in sorted(row.items()) if p != 0)
            for key, row in rows.items()
        }
        init = {}
        for s, p in initial.items():
            _check_state(s, state_count)
            p = as_fraction(p)
            if p != 0:
                init[s] = p
        goal = frozenset(goal)
        for g in goal:
            _check_state(g, state_count)
        return cls(state_count, tuple(tuple(a) for a in acts), trans, dict(sorted(init.items())), goal)

    @property
    def states(self) -> range:
        return range(self.state_count)

    @property
    def is_dtmc(self) -> bool:
        return all(len(a) <= 1 for a in self.actions)

    def edges(self, s: int, a: str) -> tuple[tuple[int, Fraction], ...]:
        return self.trans.get((s, a), ())

    @cached_property
    def _edges_q(self) -> dict:
        # same rows with gmpy2 rationals, for the inner solvers
        return {k: tuple((t, _q(p)) for t, p in row) for k, row in self.trans.items()}

    @cached_property
    def successors(self) -> dict[int, tuple[int, ...]]:
        """Underlying graph: ``s -> t`` iff some action moves s to t with p > 0."""
        out = {}
        for s in self.states:
            ts = set()
            for a in self.actions[s]:
                ts.update(t for t, _ in self.edges(s, a))
            out[s] = tuple(sorted(ts))
        return out

    @cached_property
    def predecessors(self) -> dict[int, tuple[int, ...]]:
        pred: dict[int, list[int]] = {s: [] for s in self.states}
        for s, ts in self.successors.items():
            for t in ts:
                pred[t].append(s)
        return {s: tuple(ps) for s, ps in pred.items()}

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.initial)


@dataclass(frozen=True)
class ValueAssumption:
    """A partial map from states to values in [0, 1]."""

    value: Mapping[int, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for s, v in self.value.items():
            v = as_fraction(v)
            if not 0 <= v <= 1:
                raise InputError(f"assumed value {v} for state {s} outside [0, 1]")
            clean[s] = v
        object.__setattr__(self, "value", clean)

    @property
    def domain(self) -> frozenset[int]:
        return frozenset(self.value)


def _check_state(s, n):
    if not isinstance(s, int) or not 0 <= s < n:
        raise InputError(f"unknown state {s!r} (model has {n} states)")


def _as_assumption(f) -> ValueAssumption:
    if f is None:
        return ValueAssumption({})
    return f if isinstance(f, ValueAssumption) else ValueAssumption(f)


def validate_model(m: Mdp) -> list[str]:
    problems = []
    for (s, a), row in sorted(m.trans.items()):
        total = sum((p for _, p in row), Fraction(0))
        for t, p in row:
            if not 0 <= p <= 1:
                problems.append(f"probability: state {s} action {a} -> {t} has {p} outside [0, 1]")
        if total > 1:
            problems.append(f"row-sum: state {s} action {a} sums to {total} > 1")
        if s in m.goal and row:
            problems.append(f"goal-trap: goal state {s} has outgoing transitions under action {a}")
    for s, p in m.initial.items():
        if not 0 <= p <= 1:
            problems.append(f"probability: initial probability {p} of state {s} outside [0, 1]")
    total = sum(m.initial.values(), Fraction(0))
    if total > 1:
        problems.append(f"initial-sum: initial distribution sums to {total} > 1")
    return problems


def _require_valid(m: Mdp) -> None:
    problems = validate_model(m)
    if problems:
        raise InputError("invalid model: " + "; ".join(problems))


def _check_subset(m: Mdp, states: Iterable[int]) -> frozenset[int]:
    states = frozenset(states)
    for s in states:
        _check_state(s, m.state_count)
    return states


def induced_subsystem(m: Mdp, states: Iterable[int]) -> Mdp:
    """Keep transitions with both endpoints in ``states``; everything else becomes 0.

    State ids are preserved. States outside the subset keep no actions and
    are neither initial nor goal.
    """
    keep = _check_subset(m, states)
    actions = tuple(m.actions[s] if s in keep else () for s in m.states)
    trans = {
        (s, a): tuple((t, p) for t, p in row if t in keep)
        for (s, a), row in m.trans.items()
        if s in keep
    }
    initial = {s: p for s, p in m.initial.items() if s in keep}
    return Mdp(m.state_count, actions, trans, initial, m.goal & keep)


def reachable_from(m: Mdp, sources: Iterable[int]) -> set[int]:
    return graph.reachable(m.successors, _check_subset(m, sources))


def apply_assumption(m: Mdp, states: Iterable[int], f) -> Mdp:
    """The induced subsystem on ``states`` where each ``s in dom(f)`` instead
    moves with probability ``f(s)`` to a designated goal state.

    The target is the lowest-id goal state outside ``dom(f)``; if there is
    none, a fresh goal state with id ``state_count`` is appended. States in
    ``dom(f)`` are not goal states of the result.
    """
    keep = _check_subset(m, states)
    f = _as_assumption(f)
    if not f.domain <= keep:
        raise InputError(f"assumption domain {sorted(f.domain - keep)} not inside the subsystem")
    candidates = sorted(m.goal - f.domain)
    if candidates:
        target, n = candidates[0], m.state_count
    else:
        target, n = m.state_count, m.state_count + 1
    base = induced_subsystem(m, keep)
    actions = list(base.actions) + [()] * (n - m.state_count)
    trans = dict(base.trans)
    for s in f.domain:
        for a in m.actions[s]:
            trans.pop((s, a), None)
        actions[s] = (ASSUME_ACTION,)
        p = f.value[s]
        trans[(s, ASSUME_ACTION)] = ((target, p),) if p else ()
    if target < m.state_count and target not in keep:
        actions[target] = ()
    goal = (base.goal - f.domain) | {target}
    return Mdp(n, tuple(actions), trans, dict(base.initial), frozenset(goal))


def local_values(
    m: Mdp,
    free: Iterable[int],
    fixed: Mapping[int, Fraction],
    mode: Mode = "max",
) -> dict[int, Fraction]:
    """Exact optimal reachability values with some states pinned to constants.

    ``fixed`` states behave like traps whose value is given (goal states are
    fixed at 1, assumption states at f(s)). Each ``free`` state keeps all of
    its actions; transitions leaving ``free | fixed`` are dropped. Returns
    values for every free and fixed state.
    """
    if mode not in ("min", "max"):
        raise InputError(f"mode must be 'min' or 'max', not {mode!r}")
    # arithmetic runs on gmpy2 rationals; results go back out as Fractions
    fixed = {s: _q(Fraction(v)) for s, v in fixed.items()}
    free_set = set(free) - fixed.keys()
    order = sorted(free_set)

    # per-state action rows restricted to the subsystem
    rows: dict[int, list[tuple[tuple[int, object], ...]]] = {}
    for s in order:
        rows[s] = [
            tuple((t, p) for t, p in m._edges_q.get((s, a), ()) if t in free_set or t in fixed)
            for a in m.actions[s]
        ]

    positive = _positive_states(order, rows, fixed, mode)
    values = dict(fixed)
    for s in order:
        if s not in positive:
            values[s] = ZERO
    if positive:
        _solve_positive(positive, rows, values, mode)
    return {s: _f(v) for s, v in values.items()}


def _solve_positive(positive, rows, values, mode) -> None:
    succ = {s: [t for row in rows[s] for t, _ in row if t in positive] for s in positive}
    for comp in graph.sccs(sorted(positive), succ):
        comp.sort()
        if all(len(rows[s]) <= 1 for s in comp):
            _solve_chain_component(comp, rows, values)
        else:
            _policy_iteration(comp, rows, values, mode)


def _positive_states(order, rows, fixed, mode) -> set[int]:
    """States whose optimal value is > 0 (graph-based, no arithmetic)."""
    target = {s for s, v in fixed.items() if v > 0}
    if mode == "max":
        pred: dict[int, set[int]] = {}
        for s in order:
            for row in rows[s]:
                for t, _ in row:
                    pred.setdefault(t, set()).add(s)
        return graph.reachable(pred, target) - target - set(fixed)
    # min: every action must move into the set with positive probability
    good = set(target)
    changed = True
    while changed:
        changed = False
        for s in order:
            if s in good or not rows[s]:
                continue
            if all(any(t in good for t, _ in row) for row in rows[s]):
                good.add(s)
                changed = True
    return good - target - set(fixed)


def _solve_chain_component(comp, rows, values) -> None:
    inside = {s: i for i, s in enumerate(comp)}
    if len(comp) == 1:
        s = comp[0]
        row = rows[s][0] if rows[s] else ()
        loop = sum((p for t, p in row if t == s), ZERO)
        const = sum((p * values[t] for t, p in row if t != s), ZERO)
        values[s] = const / (1 - loop)
        return
    a = [[ZERO] * len(comp) for _ in comp]
    b = [ZERO] * len(comp)
    for i, s in enumerate(comp):
        a[i][i] += 1
        row = rows[s][0] if rows[s] else ()
        for t, p in row:
            if t in inside:
                a[i][inside[t]] -= p
            else:
                b[i] += p * values[t]
    for s, v in zip(comp, solve_linear_q(a, b)):
        values[s] = v


def _policy_iteration(comp, rows, values, mode) -> None:
    inside = set(comp)
    # attractor policy: every state moves towards known-positive territory
    policy: dict[int, int] = {}
    while len(policy) < len(comp):
        before = len(policy)
        for s in comp:
            if s in policy:
                continue
            for k, row in enumerate(rows[s]):
                if any((t in policy) if t in inside else values[t] > 0 for t, _ in row):
                    policy[s] = k
                    break
        if len(policy) == before:  # pragma: no cover - excluded by _positive_states
            raise ArithmeticError("no attractor policy for a positive component")
    better = (lambda x, y: x > y) if mode == "max" else (lambda x, y: x < y)
    while True:
        _solve_chain_component(comp, {s: [rows[s][policy[s]]] for s in comp}, values)
        switched = False
        for s in comp:
            q = [sum((p * values[t] for t, p in row), ZERO) for row in rows[s]]
            best = max(q) if mode == "max" else min(q)
            if better(best, q[policy[s]]):
                policy[s] = q.index(best)
                switched = True
        if not switched:
            return


def reach_values(m: Mdp, mode: Mode = "max") -> dict[int, Fraction]:
    """Pr^mode(<>Goal) from every state, as exact rationals."""
    _require_valid(m)
    fixed = {g: Fraction(1) for g in m.goal}
    return local_values(m, [s for s in m.states if s not in m.goal], fixed, mode)


def assumed_values(m: Mdp, states: Iterable[int], f, mode: Mode, query: Iterable[int]) -> dict[int, Fraction]:
    keep = frozenset(states)
    query = frozenset(query)
    if not query <= keep:
        raise InputError("query states must lie inside the subsystem")
    vals = reach_values(apply_assumption(m, keep, f), mode)
    return {q: vals[q] for q in sorted(query)}


def initial_value(m: Mdp, values: Mapping[int, Fraction]) -> Fraction:
    return sum((p * values[s] for s, p in m.initial.items()), Fraction(0))


def subsystem_value(m: Mdp, states: Iterable[int], mode: Mode = "max") -> Fraction:
    """iota-weighted value of the subsystem induced by ``states``.

    Equivalent to ``initial_value(sub, reach_values(sub, mode))`` with
    ``sub = induced_subsystem(m, states)``, but only solves the part that is
    reachable from the initial states inside the subset.
    """
    keep = frozenset(states)
    start = [s for s in m.initial if s in keep]
    if not start:
        return Fraction(0)
    succ = {s: [t for t in m.successors[s] if t in keep] for s in keep if s not in m.goal}
    live = graph.reachable(succ, start)
    fixed = {g: Fraction(1) for g in live if g in m.goal}
    if not fixed:
        return Fraction(0)
    vals = local_values(m, live - fixed.keys(), fixed, mode)
    return sum((p * vals[s] for s, p in m.initial.items() if s in keep), Fraction(0))
