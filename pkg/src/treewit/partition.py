"""Directed tree and path partitions of a model's underlying graph."""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Literal, Mapping, Sequence

from . import graph
from .errors import InputError, RefusalError
from .mdp import Mdp

Interfaces = namedtuple("Interfaces", "inc out exit cl")


def quotient(g: Mapping[Hashable, Iterable[Hashable]], blocks: Sequence[Iterable[Hashable]]) -> dict[int, set[int]]:
    """Quotient graph over block indices. Edges inside a block are dropped."""
    block_of = _block_map(blocks)
    vertices = set(g)
    for ws in g.values():
        vertices.update(ws)
    missing = vertices - block_of.keys()
    if missing:
        raise InputError(f"blocks do not cover vertices {sorted(missing, key=repr)}")
    q: dict[int, set[int]] = {i: set() for i in range(len(blocks))}
    for v, ws in g.items():
        i = block_of[v]
        for w in ws:
            j = block_of[w]
            if i != j:
                q[i].add(j)
    return q


def _block_map(blocks) -> dict:
    block_of = {}
    for i, block in enumerate(blocks):
        for v in block:
            if v in block_of:
                raise InputError(f"vertex {v!r} appears in blocks {block_of[v]} and {i}")
            block_of[v] = i
    return block_of


def _tree_problems(q: Mapping[int, set[int]]) -> list[str]:
    k = len(q)
    problems = []
    indeg = {i: 0 for i in q}
    n_edges = 0
    for i, js in q.items():
        for j in js:
            indeg[j] += 1
            n_edges += 1
    for i in sorted(q):
        if indeg[i] > 1:
            problems.append(f"quotient: block {i} has {indeg[i]} incoming blocks")
    if k and not graph.weakly_connected(sorted(q), q):
        problems.append("quotient: not connected")
    elif n_edges != k - 1:
        problems.append("quotient: contains a cycle")
    return problems


@dataclass(frozen=True)
class DirectedTreePartition:
    blocks: tuple[frozenset[int], ...]
    parent: tuple[int | None, ...]
    topo_order: tuple[int, ...]
    block_of: Mapping[int, int]
    edges: Mapping[int, frozenset[int]]

    @classmethod
    def from_blocks(cls, m: Mdp | Mapping[int, Iterable[int]], blocks: Iterable[Iterable[int]]) -> "DirectedTreePartition":
        """Derive parent links and a parents-first order from the quotient.

        Blocks keep their given order. A block with exactly one quotient
        predecessor gets it as parent; anything else has parent None.
        Overlapping or empty blocks raise; missing states and non-tree
        quotients are reported by :func:`validate_partition`.
        """
        succ = m.successors if isinstance(m, Mdp) else m
        blocks = tuple(frozenset(b) for b in blocks)
        for i, b in enumerate(blocks):
            if not b:
                raise InputError(f"block {i} is empty")
        block_of = _block_map(blocks)
        q: dict[int, set[int]] = {i: set() for i in range(len(blocks))}
        for v, ws in succ.items():
            if v not in block_of:
                continue
            for w in ws:
                if w in block_of and block_of[w] != block_of[v]:
                    q[block_of[v]].add(block_of[w])
        preds: dict[int, list[int]] = {i: [] for i in q}
        for i, js in q.items():
            for j in js:
                preds[j].append(i)
        parent = tuple(preds[i][0] if len(preds[i]) == 1 else None for i in range(len(blocks)))
        children: dict[int, list[int]] = {i: [] for i in q}
        for i, p in enumerate(parent):
            if p is not None:
                children[p].append(i)
        order: list[int] = []
        seen: set[int] = set()
        for r in (i for i in range(len(blocks)) if parent[i] is None):
            stack = [r]
            while stack:
                i = stack.pop(0)
                if i in seen:
                    continue
                seen.add(i)
                order.append(i)
                stack.extend(sorted(children[i]))
        return cls(blocks, parent, tuple(order), block_of, {i: frozenset(js) for i, js in q.items()})

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in self.blocks]
        for i, p in enumerate(self.parent):
            if p is not None:
                kids[p].append(i)
        return tuple(tuple(sorted(k)) for k in kids)

    @property
    def root(self) -> int | None:
        roots = [i for i, p in enumerate(self.parent) if p is None]
        return roots[0] if len(roots) == 1 else None

    @property
    def width(self) -> int:
        return max((len(b) for b in self.blocks), default=0)

    @property
    def is_path(self) -> bool:
        return all(len(c) <= 1 for c in self.children)

    def closure(self, b: int) -> frozenset[int]:
        """States of the subtree rooted at block ``b`` (including ``b``)."""
        out: set[int] = set()
        stack = [b]
        while stack:
            i = stack.pop()
            out |= self.blocks[i]
            stack.extend(self.children[i])
        return frozenset(out)


def validate_partition(m: Mdp, p: DirectedTreePartition) -> list[str]:
    problems = []
    missing = set(m.states) - p.block_of.keys()
    if missing:
        problems.append(f"coverage: states {sorted(missing)} are in no block")
    extra = p.block_of.keys() - set(m.states)
    if extra:
        problems.append(f"coverage: unknown states {sorted(extra)}")
    q = {i: set(js) for i, js in p.edges.items()}
    problems += _tree_problems(q)
    for i, b in enumerate(p.blocks):
        if b & m.goal and b - m.goal:
            problems.append(f"goal-purity: block {i} mixes goal and non-goal states")
    root = p.root
    for s in m.initial:
        i = p.block_of.get(s)
        if i is not None and (root is None or i != root):
            problems.append(f"root: initial state {s} lies in block {i}, not in the root block")
    return problems


def block_interfaces(m: Mdp, p: DirectedTreePartition, b: int) -> Interfaces:
    if not isinstance(b, int) or not 0 <= b < len(p.blocks):
        raise InputError(f"no block {b!r}")
    block = p.blocks[b]
    inc = interfaces_inc(m, p, b)
    out = frozenset().union(*(interfaces_inc(m, p, c) for c in p.children[b]))
    exit_ = frozenset(s for s in block if any(t not in block for t in m.successors[s]))
    return Interfaces(inc, out, exit_, p.closure(b))


def interfaces_inc(m: Mdp, p: DirectedTreePartition, b: int) -> frozenset[int]:
    block = p.blocks[b]
    par = p.parent[b]
    parent_states = p.blocks[par] if par is not None else frozenset()
    return frozenset(
        s for s in block
        if s in m.initial or any(u in parent_states for u in m.predecessors[s])
    )


def heuristic_partition(m: Mdp, strategy: str = "scc-chain") -> DirectedTreePartition:
    """Build a valid tree partition by merging strongly connected components.

    Starting from the SCC condensation, repeatedly merge the parents of any
    block with two or more quotient predecessors (plus every block lying on
    a quotient path between them), then pull all initial states into the
    root the same way.
    """
    if strategy != "scc-chain":
        raise InputError(f"unknown partition strategy {strategy!r}")
    succ = m.successors
    if not graph.weakly_connected(m.states, succ):
        raise InputError("underlying graph is not weakly connected; no tree partition exists")
    blocks = [frozenset(c) for c in graph.sccs(m.states, succ)]

    while True:
        blocks.sort(key=min)
        block_of = _block_map(blocks)
        q = {i: set() for i in range(len(blocks))}
        for v, ws in succ.items():
            for w in ws:
                if block_of[v] != block_of[w]:
                    q[block_of[v]].add(block_of[w])
        preds: dict[int, set[int]] = {i: set() for i in q}
        for i, js in q.items():
            for j in js:
                preds[j].add(i)

        crowded = next((i for i in sorted(q) if len(preds[i]) >= 2), None)
        if crowded is not None:
            group = _convex_closure(q, preds, preds[crowded])
        else:
            roots = [i for i in q if not preds[i]]
            init_blocks = {block_of[s] for s in m.initial}
            if init_blocks <= set(roots[:1]) or not init_blocks:
                break
            group = _convex_closure(q, preds, init_blocks | set(roots))
        merged = frozenset().union(*(blocks[i] for i in group))
        blocks = [b for i, b in enumerate(blocks) if i not in group] + [merged]

    part = DirectedTreePartition.from_blocks(m, blocks)
    problems = validate_partition(m, part)
    if problems:
        raise InputError("heuristic partition failed: " + "; ".join(problems))
    return part


def _convex_closure(q, preds, group) -> set[int]:
    down = graph.reachable(q, group)
    up = graph.reachable(preds, group)
    return (down & up) | set(group)


def min_width_search(
    g: Mapping[Hashable, Iterable[Hashable]],
    kind: Literal["tree", "path"] = "tree",
    limit: int = 10,
    root: Iterable[Hashable] = (),
    pure: Iterable[Hashable] = (),
) -> tuple[int, int, list[list]]:
    """Exhaustive dtpw/dppw: try every set partition of the vertices.

    Optional side conditions: all ``root`` vertices share a block with no
    quotient predecessor, and no block mixes ``pure`` with other vertices.
    Returns ``(width, partitions_checked, best_blocks)``.
    """
    if kind not in ("tree", "path"):
        raise InputError(f"kind must be 'tree' or 'path', not {kind!r}")
    vertices = set(g)
    for ws in g.values():
        vertices.update(ws)
    order = sorted(vertices, key=repr) if not all(isinstance(v, int) for v in vertices) else sorted(vertices)
    n = len(order)
    if n > limit:
        raise RefusalError(f"{n} vertices exceeds the brute-force limit of {limit}")
    if n == 0:
        return 0, 1, []
    idx = {v: i for i, v in enumerate(order)}
    edges = sorted({(idx[v], idx[w]) for v, ws in g.items() for w in ws if v != w})
    path = kind == "path"
    root_ix = sorted(idx[v] for v in set(root) if v in idx)
    pure_ix = {idx[v] for v in pure if v in idx}

    best = n + 1
    best_assign: list[int] = []
    checked = 0
    assign = [0] * n
    sizes = [0] * n

    def ok(k: int) -> bool:
        qe = {(assign[u], assign[v]) for u, v in edges if assign[u] != assign[v]}
        if len(qe) != k - 1:
            return False
        indeg = [0] * k
        outdeg = [0] * k
        parent = list(range(k))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in qe:
            indeg[b] += 1
            outdeg[a] += 1
            if indeg[b] > 1 or (path and outdeg[a] > 1):
                return False
            ra, rb = find(a), find(b)
            if ra == rb:
                return False
            parent[ra] = rb
        if root_ix:
            r = assign[root_ix[0]]
            if indeg[r] or any(assign[i] != r for i in root_ix):
                return False
        if pure_ix:
            mixed = {}
            for i in range(n):
                if mixed.setdefault(assign[i], i in pure_ix) != (i in pure_ix):
                    return False
        return True

    def rec(i: int, k: int) -> None:
        nonlocal best, best_assign, checked
        if i == n:
            checked += 1
            w = max(sizes[:k])
            if w < best and ok(k):
                best = w
                best_assign = assign[:]
            return
        for b in range(k + 1):
            assign[i] = b
            sizes[b] += 1
            rec(i + 1, max(k, b + 1))
            sizes[b] -= 1

    rec(0, 0)
    k = max(best_assign) + 1
    blocks = [[order[i] for i in range(n) if best_assign[i] == b] for b in range(k)]
    return best, checked, blocks


def brute_force_min_width(g, kind: Literal["tree", "path"] = "tree", limit: int = 10) -> int:
    return min_width_search(g, kind, limit)[0]


def model_min_width(m: Mdp, kind: Literal["tree", "path"] = "tree", limit: int = 10) -> tuple[int, int, list[list]]:
    """Like :func:`min_width_search` on the model's graph, counting only
    partitions that :func:`validate_partition` accepts (initial states in
    the root block, goal states kept apart)."""
    g = {s: m.successors.get(s, ()) for s in m.states}
    return min_width_search(g, kind, limit, root=m.initial, pure=m.goal)
