"""Tiny directed-graph helpers over ``{vertex: iterable of successors}`` maps."""

from __future__ import annotations

from collections import deque
from typing import Hashable, Iterable, Mapping

Digraph = Mapping[Hashable, Iterable[Hashable]]


def reachable(succ: Digraph, sources: Iterable[Hashable]) -> set:
    seen = set(sources)
    todo = deque(seen)
    while todo:
        v = todo.popleft()
        for w in succ.get(v, ()):
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return seen


def reverse(succ: Digraph) -> dict:
    pred: dict = {v: [] for v in succ}
    for v, ws in succ.items():
        for w in ws:
            pred.setdefault(w, []).append(v)
    return pred


def bfs_distance(succ: Digraph, sources: Iterable[Hashable]) -> dict:
    """Edge-count distance from the nearest source, for every reachable vertex."""
    dist = {s: 0 for s in sources}
    todo = deque(dist)
    while todo:
        v = todo.popleft()
        for w in succ.get(v, ()):
            if w not in dist:
                dist[w] = dist[v] + 1
                todo.append(w)
    return dist


def sccs(vertices: Iterable[Hashable], succ: Digraph) -> list[list]:
    """Strongly connected components in reverse topological order (sinks first).

    Iterative Tarjan; vertices are visited in the given order, so the output
    is deterministic. Successors outside ``vertices`` are ignored.
    """
    order = list(vertices)
    inside = set(order)
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    out: list[list] = []
    counter = 0
    for root in order:
        if root in index:
            continue
        work = [(root, iter([w for w in succ.get(root, ()) if w in inside]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter([u for u in succ.get(w, ()) if u in inside])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def weakly_connected(vertices: Iterable[Hashable], succ: Digraph) -> bool:
    vs = list(vertices)
    if not vs:
        return True
    und: dict = {v: set() for v in vs}
    for v in vs:
        for w in succ.get(v, ()):
            if w in und:
                und[v].add(w)
                und[w].add(v)
    return len(reachable(und, [vs[0]])) == len(vs)
