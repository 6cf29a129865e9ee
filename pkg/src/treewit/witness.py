"""Minimal witnessing subsystems along a directed tree partition.

The search walks the partition bottom-up. For every block it combines the
admissible subsets of the block with the partial subsystems already kept
for the child blocks, evaluates each combination at the block's entry
states, and keeps only combinations that are not dominated by smaller or
equal-sized ones. At the root, the smallest stored combination whose
initial-distribution value meets the threshold is the answer.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Literal, Mapping, Sequence

from . import graph
from .errors import InputError, RefusalError
from .hull import DEFAULT_INTERFACE_CAP, ExtremeSet, IPoint, _maximal, dominated_by_projections, project_all
from .mdp import Mdp, Mode, ValueAssumption, local_values, subsystem_value, validate_model
from .partition import DirectedTreePartition, block_interfaces, validate_partition

Domination = Literal["standard", "strong"]

BRUTE_FORCE_CAP = 20
ROOT_BATCH = 64


@dataclass(frozen=True)
class PartialSubsystem:
    block: int
    states: frozenset[int]
    value: IPoint

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def key(self) -> tuple:
        return (len(self.states), tuple(sorted(self.states)))


@dataclass(frozen=True)
class SearchConfig:
    mode: Mode = "max"
    lam: Fraction = Fraction(0)
    domination: Domination | None = None
    size_upper_bound: int | None = None
    enable_value_sum_prune: bool = False
    enable_size_bound_prune: bool = False
    interface_cap: int = DEFAULT_INTERFACE_CAP
    parallelism: int = 1
    use_phi_filter: bool = True
    hull_method: Literal["lp", "hull"] = "lp"
    filter_root: bool = False

    def __post_init__(self):
        if self.mode not in ("min", "max"):
            raise InputError(f"mode must be 'min' or 'max', not {self.mode!r}")
        wanted = "strong" if self.mode == "min" else "standard"
        if self.domination is None:
            object.__setattr__(self, "domination", wanted)
        elif self.domination != wanted:
            raise InputError(f"mode {self.mode} requires {wanted} domination")
        object.__setattr__(self, "lam", Fraction(self.lam))
        if not 0 <= self.lam <= 1:
            raise InputError(f"threshold {self.lam} outside [0, 1]")
        if self.parallelism < 1:
            raise InputError("parallelism must be at least 1")


@dataclass
class SearchStats:
    blocks_processed: int = 0
    candidates_generated: int = 0
    candidates_pruned: int = 0
    candidates_kept: int = 0
    hull_calls: int = 0
    max_stored: int = 0
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class Witness:
    states: frozenset[int]
    size: int
    value: Fraction


@dataclass(frozen=True)
class BlockInfo:
    inc: tuple[int, ...]
    out: tuple[int, ...]
    exit: frozenset[int]
    closure: frozenset[int]
    goal_in_closure: bool
    entry_distance: float


def block_info(m: Mdp, p: DirectedTreePartition, b: int, distances: Mapping[int, int] | None = None) -> BlockInfo:
    itf = block_interfaces(m, p, b)
    out: list[int] = []
    for c in p.children[b]:
        out += sorted(block_interfaces(m, p, c).inc)
    if distances is None:
        distances = graph.bfs_distance(m.successors, m.initial)
    dist = min((distances[s] for s in itf.inc if s in distances), default=float("inf"))
    return BlockInfo(
        inc=tuple(sorted(itf.inc)),
        out=tuple(out),
        exit=itf.exit,
        closure=itf.cl,
        goal_in_closure=m.goal <= itf.cl,
        entry_distance=dist,
    )


def i_point(m: Mdp, p: DirectedTreePartition, b: int, states: Iterable[int], mode: Mode = "max") -> IPoint:
    """Values of the subsystem induced by ``states`` at the entry states of ``b``."""
    states = frozenset(states)
    inc = tuple(sorted(block_interfaces(m, p, b).inc))
    if not states <= graph.reachable(m.successors, inc):
        raise InputError("partial subsystem escapes the states reachable from the block interface")
    fixed = {g: Fraction(1) for g in states & m.goal}
    vals = local_values(m, states - m.goal, fixed, mode)
    return IPoint(inc, tuple(vals[q] if q in states else Fraction(0) for q in inc))


def enumerate_phi_subsets(
    m: Mdp,
    p: DirectedTreePartition,
    b: int,
    use_filter: bool = True,
) -> Iterator[tuple[int, ...]]:
    """Subsets of block ``b`` in (size, lexicographic) order that pass the filter.

    A kept subset gives every non-entry member a predecessor inside the
    subset and every member that neither leaves the block nor is a goal
    state a successor inside the subset.
    """
    block = p.blocks[b]
    itf = block_interfaces(m, p, b)
    members = sorted(block)
    pre = {s: [u for u in m.predecessors[s] if u in block] for s in members}
    post = {s: [t for t in m.successors[s] if t in block] for s in members}
    for k in range(len(members) + 1):
        for combo in itertools.combinations(members, k):
            if not use_filter:
                yield combo
                continue
            chosen = set(combo)
            ok = True
            for s in combo:
                if s not in itf.inc and not any(u in chosen for u in pre[s]):
                    ok = False
                    break
                if s not in itf.exit and s not in m.goal and not any(t in chosen for t in post[s]):
                    ok = False
                    break
            if ok:
                yield combo


def successor_points(
    psubsys: Mapping[int, Sequence[PartialSubsystem]],
    p: DirectedTreePartition,
    b: int,
) -> Iterator[tuple[frozenset[int], tuple[Fraction, ...]]]:
    """Every combination of stored child partial subsystems, with the
    concatenated entry-state values of the children (children in index order)."""
    lists = []
    for c in p.children[b]:
        if c not in psubsys:
            raise InputError(f"child block {c} of block {b} has not been processed")
        lists.append(psubsys[c])
    for combo in itertools.product(*lists):
        states = frozenset().union(*(ps.states for ps in combo))
        vec = tuple(itertools.chain.from_iterable(ps.value.coords for ps in combo))
        yield states, vec


def evaluate_candidate(
    m: Mdp,
    p: DirectedTreePartition,
    b: int,
    block_states: Iterable[int],
    f: ValueAssumption | Mapping[int, Fraction],
    mode: Mode = "max",
    info: BlockInfo | None = None,
) -> IPoint:
    """Entry-state values of ``block_states`` with the children's entry
    states replaced by constants ``f`` (missing entries count as 0)."""
    info = info or block_info(m, p, b)
    values = f.value if isinstance(f, ValueAssumption) else f
    chosen = frozenset(block_states)
    fixed = {q: Fraction(values.get(q, 0)) for q in info.out}
    for g in chosen & m.goal:
        fixed[g] = Fraction(1)
    vals = local_values(m, chosen - m.goal, fixed, mode)
    return IPoint(info.inc, tuple(vals[q] if q in chosen else Fraction(0) for q in info.inc))


def block_response(
    m: Mdp,
    p: DirectedTreePartition,
    b: int,
    block_states: Iterable[int],
    mode: Mode = "max",
    info: BlockInfo | None = None,
) -> tuple[tuple[Fraction, ...], list[tuple[Fraction, ...]]]:
    """Entry values of ``block_states`` as an affine map of the child values.

    Returns ``(base, rows)`` with the I-point for assumption f equal to
    base + sum_j f(out_j) * rows[j]. Exact for DTMCs (the equations are
    linear in f); for MDPs only valid when the block has at most one out
    state and no goal state, where values scale with f.
    """
    info = info or block_info(m, p, b)
    base = evaluate_candidate(m, p, b, block_states, {}, mode, info).coords
    rows = []
    for q in info.out:
        unit = evaluate_candidate(m, p, b, block_states, {q: Fraction(1)}, mode, info).coords
        rows.append(tuple(u - c for u, c in zip(unit, base)))
    return base, rows


def _affine_ok(m: Mdp, p: DirectedTreePartition, b: int, info: BlockInfo) -> bool:
    return m.is_dtmc or (len(info.out) <= 1 and not p.blocks[b] & m.goal)


def combine_response(info: BlockInfo, response, vec: Sequence[Fraction]) -> IPoint:
    base, rows = response
    coords = list(base)
    for f, row in zip(vec, rows):
        if f:
            for i, r in enumerate(row):
                if r:
                    coords[i] += f * r
    return IPoint(info.inc, tuple(coords))


def remove_dominated(
    cands: Sequence[PartialSubsystem],
    domination: Domination = "standard",
    method: Literal["lp", "hull"] = "lp",
    stats: SearchStats | None = None,
) -> list[PartialSubsystem]:
    """Drop candidates dominated by equal-or-smaller ones.

    Standard domination: a candidate goes if its point lies in the convex
    hull of the projections of the other candidates that are not larger.
    Strong domination: it goes if one such candidate is pointwise at least
    as large. Identical points of equal size are settled by state-set order
    (first one stays). Output is sorted by (size, state list).
    """
    if not cands:
        return []
    interface = cands[0].value.interface
    if any(c.value.interface != interface for c in cands):
        raise InputError("candidates belong to different interfaces")
    if domination not in ("standard", "strong"):
        raise InputError(f"unknown domination {domination!r}")
    ordered = sorted(cands, key=lambda c: c.key)
    classes = [list(g) for _, g in itertools.groupby(ordered, key=lambda c: c.size)]
    stats = stats if stats is not None else SearchStats()
    if domination == "standard" and method == "hull":
        return _remove_dominated_hull(classes, stats)

    kept: list[PartialSubsystem] = []
    earlier: list[tuple[Fraction, ...]] = []
    for cls in classes:
        points = [c.value.coords for c in cls]
        if domination == "strong":
            for i, c in enumerate(cls):
                p = points[i]
                others = earlier + [q for j, q in enumerate(points) if j != i and not (q == p and j > i)]
                if not any(all(x <= y for x, y in zip(p, q)) for q in others):
                    kept.append(c)
        else:
            seen = set(earlier)
            top = set(_maximal(earlier + points))
            for i, c in enumerate(cls):
                p = points[i]
                if p in seen or p not in top:
                    # an equal point came first, or p lies below another point
                    seen.add(p)
                    continue
                seen.add(p)
                stats.hull_calls += 1
                if not dominated_by_projections(p, [q for q in top if q != p], maximal=True):
                    kept.append(c)
        earlier += [c.value.coords for c in kept if c.size == cls[0].size]
    return kept


def _remove_dominated_hull(classes, stats: SearchStats) -> list[PartialSubsystem]:
    # Literal incremental-hull version; agrees with the LP route.
    hull = ExtremeSet()
    kept: list[PartialSubsystem] = []
    seen: list[tuple[Fraction, ...]] = []
    for cls in classes:
        batch = []
        for c in cls:
            batch += project_all(c.value.coords, cap=len(c.value.coords))
        hull.add_points(batch)
        stats.hull_calls = hull.lp_calls
        vertices = set(hull.vertices())
        points = [c.value.coords for c in cls]
        for i, c in enumerate(cls):
            p = points[i]
            if p not in vertices:
                continue
            pool = seen + [q for j, q in enumerate(points) if j != i and not (q == p and j > i)]
            if any(p in project_all(q, cap=len(q)) for q in pool):
                continue
            kept.append(c)
        seen += points
    return kept


def prune_candidate(cand: PartialSubsystem, cfg: SearchConfig, info: BlockInfo) -> bool:
    """Cheap exclusion tests that never discard part of a minimal witness."""
    if cfg.enable_value_sum_prune and info.goal_in_closure and cand.value.total() < cfg.lam:
        return True
    if (
        cfg.enable_size_bound_prune
        and cfg.size_upper_bound is not None
        and cand.states
        and info.entry_distance + cand.size > cfg.size_upper_bound
    ):
        return True
    return False


def check_inputs(m: Mdp, p: DirectedTreePartition, cfg: SearchConfig) -> None:
    problems = validate_model(m) + validate_partition(m, p)
    if problems:
        raise InputError("; ".join(problems))
    for b in range(len(p.blocks)):
        k = len(block_interfaces(m, p, b).inc)
        if k > cfg.interface_cap:
            raise RefusalError(f"block {b} has {k} entry states, above the interface cap {cfg.interface_cap}")


def minimal_witness(
    m: Mdp,
    p: DirectedTreePartition,
    cfg: SearchConfig,
    stats: SearchStats | None = None,
    keep_tables: dict | None = None,
) -> Witness | None:
    """Smallest state set whose induced subsystem reaches Goal with
    probability at least ``cfg.lam`` from the initial distribution.

    Returns None when even the full model falls short. ``stats`` (if
    given) is filled in; ``keep_tables`` (if given) receives the stored
    partial subsystems per block.
    """
    started = time.perf_counter()
    stats = stats if stats is not None else SearchStats()
    check_inputs(m, p, cfg)
    distances = graph.bfs_distance(m.successors, m.initial)
    psubsys: dict[int, list[PartialSubsystem]] = {}

    pool = ThreadPoolExecutor(cfg.parallelism) if cfg.parallelism > 1 else None
    answer = None
    try:
        for b in reversed(p.topo_order):
            info = block_info(m, p, b, distances)
            succ = list(successor_points(psubsys, p, b))
            subsets = [frozenset(x) for x in enumerate_phi_subsets(m, p, b, cfg.use_phi_filter)]
            jobs = [(block_states, states, vec) for block_states in subsets for states, vec in succ]
            responses: dict = {}
            if len(succ) > len(info.out) + 1 and _affine_ok(m, p, b, info):
                # solve each subset once per child coordinate, then combine
                found = _map(pool, lambda x, b=b, info=info: block_response(m, p, b, x, cfg.mode, info), subsets)
                responses = dict(zip(subsets, found))

            def one(job, b=b, info=info, responses=responses):
                block_states, states, vec = job
                if responses:
                    point = combine_response(info, responses[block_states], vec)
                else:
                    point = evaluate_candidate(m, p, b, block_states, dict(zip(info.out, vec)), cfg.mode, info)
                return PartialSubsystem(b, block_states | states, point)

            def run(batch):
                return _map(pool, one, batch)

            def admit(cand, info=info):
                stats.candidates_generated += 1
                if prune_candidate(cand, cfg, info):
                    stats.candidates_pruned += 1
                    return False
                return True

            stats.blocks_processed += 1
            if b == p.root and not cfg.filter_root:
                # Candidate sizes are known before evaluation, so walk them in
                # (size, states) order and stop at the first one meeting lam.
                jobs.sort(key=lambda j: (len(j[0]) + len(j[1]), tuple(sorted(j[0] | j[1]))))
                for start in range(0, len(jobs), ROOT_BATCH):
                    for cand in run(jobs[start:start + ROOT_BATCH]):
                        if admit(cand) and _initial_value(m, cand) >= cfg.lam:
                            answer = Witness(cand.states, cand.size, _initial_value(m, cand))
                            break
                    if answer is not None:
                        break
                break
            cands = [c for c in run(jobs) if admit(c)]
            psubsys[b] = remove_dominated(cands, cfg.domination, cfg.hull_method, stats)
            stats.candidates_kept += len(psubsys[b])
            stats.max_stored = max(stats.max_stored, len(psubsys[b]))
            if keep_tables is None:
                for c in p.children[b]:
                    del psubsys[c]
    finally:
        if pool:
            pool.shutdown()

    if keep_tables is not None:
        keep_tables.update(psubsys)
    if cfg.filter_root:
        for cand in psubsys[p.root]:
            value = _initial_value(m, cand)
            if value >= cfg.lam:
                answer = Witness(cand.states, cand.size, value)
                break
    stats.wall_time = time.perf_counter() - started
    return answer


def _map(pool, fn, items) -> list:
    return list(pool.map(fn, items)) if pool else [fn(x) for x in items]


def _initial_value(m: Mdp, cand: PartialSubsystem) -> Fraction:
    return sum((w * cand.value.value_at(s) for s, w in m.initial.items()), Fraction(0))


def brute_force_minimal_witness(
    m: Mdp, cfg: SearchConfig, cap: int = BRUTE_FORCE_CAP, time_limit: float | None = None
) -> Witness | None:
    """Try all state subsets by increasing size (lexicographic within a size).

    With ``time_limit`` (seconds) a RefusalError is raised once it is used up.
    """
    if m.state_count > cap:
        raise RefusalError(f"{m.state_count} states exceeds the brute-force cap of {cap}")
    stop = None if time_limit is None else time.monotonic() + time_limit
    for k in range(m.state_count + 1):
        for combo in itertools.combinations(range(m.state_count), k):
            if stop is not None and time.monotonic() > stop:
                raise RefusalError(f"brute force gave up after {time_limit} s (at size {k})")
            chosen = frozenset(combo)
            if cfg.lam > 0 and (not chosen & m.goal or not chosen & m.support):
                continue
            value = subsystem_value(m, chosen, cfg.mode)
            if value >= cfg.lam:
                return Witness(chosen, k, value)
    return None


def exhaustive_witness_within(m: Mdp, k: int, lam: Fraction, mode: Mode = "max") -> Witness | None:
    """Some subsystem with at most ``k`` states and value >= ``lam``, or None.

    Depth-first over include/exclude decisions in state order. A branch is
    abandoned when even adding every undecided state cannot reach ``lam``,
    which is exact because removing states never increases the value.
    """
    lam = Fraction(lam)
    order = list(range(m.state_count))
    found: list[Witness] = []

    def rec(i: int, chosen: list[int], check: bool = True) -> bool:
        # including a state leaves the optimistic set as it was
        if check and subsystem_value(m, set(chosen) | set(order[i:]), mode) < lam:
            return False
        if len(chosen) == k or i == len(order):
            value = subsystem_value(m, chosen, mode)
            if value >= lam:
                found.append(Witness(frozenset(chosen), len(chosen), value))
                return True
            return False
        chosen.append(order[i])
        if rec(i + 1, chosen, check=False):
            return True
        chosen.pop()
        return rec(i + 1, chosen)

    rec(0, [])
    return found[0] if found else None


def greedy_upper_bound(m: Mdp, lam: Fraction, mode: Mode = "max") -> int | None:
    """Size of some witness found by greedy state removal (None if none exists)."""
    lam = Fraction(lam)
    current = set(m.states)
    if subsystem_value(m, current, mode) < lam:
        return None
    for s in sorted(m.states, reverse=True):
        trial = current - {s}
        if subsystem_value(m, trial, mode) >= lam:
            current = trial
    return len(current)
