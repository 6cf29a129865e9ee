"""Exact convex-hull queries over rational points.

Points are either :class:`IPoint` (coordinates tagged with the interface
states they belong to) or plain sequences of rationals. Every membership
question is a linear feasibility problem solved exactly by
:func:`treewit.linalg.feasible_nonneg`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.optimize import linprog

from .errors import InputError, RefusalError
from .linalg import ONE, ZERO, _q, feasible_nonneg, feasible_or_certificate_q

DEFAULT_INTERFACE_CAP = 10
# with fewer columns (and small numbers) the exact LP beats a float pre-solve
GUIDE_MIN_COLUMNS = 12


@dataclass(frozen=True)
class IPoint:
    interface: tuple[int, ...]
    coords: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.interface) != len(self.coords):
            raise InputError("IPoint: interface and coordinates differ in length")
        object.__setattr__(self, "coords", tuple(Fraction(c) for c in self.coords))

    def __len__(self):
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def value_at(self, state: int) -> Fraction:
        return self.coords[self.interface.index(state)]

    def total(self) -> Fraction:
        return sum(self.coords, Fraction(0))


Point = Union[IPoint, Sequence[Fraction]]


def _coords(points: Iterable[Point], dim: int | None = None) -> list[tuple[Fraction, ...]]:
    out = []
    interface = None
    for p in points:
        if isinstance(p, IPoint):
            if interface is None:
                interface = p.interface
            elif p.interface != interface:
                raise InputError("points belong to different interfaces")
            c = p.coords
        else:
            c = tuple(x if type(x) is Fraction else Fraction(x) for x in p)
        if dim is None:
            dim = len(c)
        elif len(c) != dim:
            raise InputError(f"dimension mismatch: {len(c)} vs {dim}")
        out.append(c)
    return out


def _same_interface(p: Point, pts: Sequence[Point]) -> None:
    if isinstance(p, IPoint):
        for q in pts:
            if isinstance(q, IPoint) and q.interface != p.interface:
                raise InputError("points belong to different interfaces")


def in_convex_hull(p: Point, pts: Sequence[Point]) -> tuple[bool, list[Fraction] | None]:
    """Is ``p`` a convex combination of ``pts``? Returns the weights if so."""
    _same_interface(p, pts)
    (target,) = _coords([p])
    qs = _coords(pts, len(target))
    if not qs:
        return False, None
    a = [[q[j] for q in qs] for j in range(len(target))] + [[Fraction(1)] * len(qs)]
    b = list(target) + [Fraction(1)]
    x = feasible_nonneg(a, b)
    return (x is not None), x


def extreme_points(pts: Sequence[Point]) -> list[int]:
    """Indices of points that are not convex combinations of the others.

    Among exact duplicates only the first occurrence can survive.
    """
    qs = _coords(pts)
    first: dict[tuple, int] = {}
    for i, q in enumerate(qs):
        first.setdefault(q, i)
    uniq = list(first.items())
    keep = []
    for k, (q, i) in enumerate(uniq):
        others = [r for j, (r, _) in enumerate(uniq) if j != k]
        if not in_convex_hull(q, others)[0]:
            keep.append(i)
    return sorted(keep)


def project_all(p: Point, cap: int = DEFAULT_INTERFACE_CAP) -> list[Point]:
    """All axis projections of ``p`` (coordinates outside D zeroed), deduplicated.

    Projections are listed by subset bitmask, from the full set D = I down
    to the empty set, so ``p`` itself comes first.
    """
    (c,) = _coords([p])
    d = len(c)
    if d > cap:
        raise RefusalError(f"interface of size {d} exceeds the cap of {cap}")
    seen = {}
    full = (1 << d) - 1
    for mask in range(full, -1, -1):
        q = tuple(c[j] if mask >> j & 1 else Fraction(0) for j in range(d))
        seen.setdefault(q, None)
    if isinstance(p, IPoint):
        return [IPoint(p.interface, q) for q in seen]
    return list(seen)


def pareto_leq(p: Point, q: Point) -> bool:
    _same_interface(p, [q])
    a, b = _coords([p, q])
    return all(x <= y for x, y in zip(a, b))


def dominated_by_projections(p: Point, pts: Sequence[Point], maximal: bool = False, guide: bool = True) -> bool:
    """Is ``p`` in the convex hull of all projections of ``pts``?

    For nonnegative points that hull is the set of vectors lying pointwise
    between 0 and some convex combination of ``pts``, so one LP with a
    surplus column per coordinate decides it without expanding the
    2^d projections. ``maximal=True`` promises that no point of ``pts`` lies
    pointwise below another and that none is >= ``p``.

    With ``guide`` a floating-point LP is solved first; its answer is only
    used once confirmed exactly (a small exact LP on the reported support,
    or a separating direction checked in rational arithmetic). Unconfirmed
    answers fall back to the exact LP.
    """
    _same_interface(p, pts)
    (target,) = _coords([p])
    qs = _coords(pts, len(target))
    if not qs:
        return False
    if any(x < 0 for x in target):
        return False
    if not maximal and any(all(x <= y for x, y in zip(target, q)) for q in qs):
        return True
    active = [j for j, x in enumerate(target) if x > 0]
    if not active:
        return True
    goal = [target[j] for j in active]
    cols = [tuple(q[j] for j in active) for q in qs]
    if not maximal:
        cols = _maximal(cols)
    for i, x in enumerate(goal):
        if all(c[i] < x for c in cols):
            return False
    goal = [_q(x) for x in goal]
    cols = [tuple(_q(x) for x in c) for c in cols]
    if guide and (len(cols) > GUIDE_MIN_COLUMNS or max(g.denominator for g in goal).bit_length() > 64):
        verdict = _guided(goal, cols)
        if verdict is not None:
            return verdict
    return _exact_down_hull(goal, cols)


def _exact_down_hull(goal: list, cols: list[tuple], start: Sequence[int] = ()) -> bool:
    """Exact test of goal <= some convex combination of ``cols``.

    Column generation: solve on a small working set; when that is
    infeasible the Farkas certificate is a direction u >= 0 with
    u.c <= t < u.goal on the working set. If every column obeys it the
    answer is no, otherwise the violators join the working set.
    """
    k = len(goal)
    work = list(dict.fromkeys(start)) or list(range(min(len(cols), k + 1)))
    while True:
        sub = [cols[j] for j in work]
        a = [[c[i] for c in sub] + [-ONE if r == i else ZERO for r in range(k)] for i in range(k)]
        a.append([ONE] * len(sub) + [ZERO] * k)
        x, y = feasible_or_certificate_q(a, goal + [ONE])
        if x is not None:
            return True
        # y = (w, t): w.c + t <= 0 on the working set, w >= 0, w.goal + t > 0
        w, t = y[:k], y[k]
        inside = set(work)
        scores = [(sum((wi * ci for wi, ci in zip(w, c)), ZERO), j) for j, c in enumerate(cols) if j not in inside]
        violators = sorted(((v, j) for v, j in scores if v + t > 0), reverse=True)
        if not violators:
            return False
        work += [j for _, j in violators[: k + 1]]


def _guided(goal: list, cols: list[tuple]) -> bool | None:
    # Separation LP in coordinates scaled so that the target is all ones:
    # maximise sum(w) - t  s.t.  w . c <= t for every column, sum(w) = 1, w >= 0.
    # A positive optimum gives a separating w; otherwise the duals are
    # convex weights of columns reaching the target.
    k, m = len(goal), len(cols)
    inv = [1 / float(g) for g in goal]
    scaled = np.array([[float(x) * s for x, s in zip(c, inv)] for c in cols])
    if not np.all(np.isfinite(scaled)):
        return None
    res = linprog(
        np.r_[-np.ones(k), 1.0],
        A_ub=np.c_[scaled, -np.ones(m)],
        b_ub=np.zeros(m),
        A_eq=np.r_[np.ones(k), 0.0][None, :],
        b_eq=[1.0],
        bounds=[(0, None)] * k + [(None, None)],
        method="highs",
    )
    if res.status != 0:
        return None
    if -res.fun > 1e-9:
        w = [_q(float(x)) / g if x > 0 else ZERO for x, g in zip(res.x[:k], goal)]
        level = sum((wi * g for wi, g in zip(w, goal)), ZERO)
        if all(sum((wi * ci for wi, ci in zip(w, c)), ZERO) < level for c in cols):
            return False
        return None
    weights = -np.asarray(res.ineqlin.marginals)
    idx = np.flatnonzero(weights > 1e-12)
    if not len(idx):
        return None
    lam = [_q(float(weights[j])) for j in idx]
    total = sum(lam, ZERO)
    mix = [sum((l * cols[j][i] for l, j in zip(lam, idx)), ZERO) / total for i in range(k)]
    if all(g <= x for g, x in zip(goal, mix)):
        return True
    return _exact_down_hull(goal, cols, [int(j) for j in idx])


def _maximal(qs: list[tuple]) -> list[tuple]:
    """Drop duplicates and points lying pointwise below another point.

    A point strictly below another has a strictly smaller coordinate sum,
    so scanning by decreasing sum only compares against points already
    known to be maximal. Survivors keep their input order.
    """
    uniq = list(dict.fromkeys(qs))
    if not uniq:
        return []
    approx = np.array([[float(x) for x in q] for q in uniq])
    order = sorted(range(len(uniq)), key=lambda i: sum(uniq[i]), reverse=True)
    keep: list[int] = []
    for i in order:
        if not _below_any(uniq, approx, i, keep):
            keep.append(i)
    return [uniq[i] for i in sorted(keep)]


def _below_any(points, approx, i: int, among: list[int]) -> bool:
    """Is points[i] <= points[j] for some j in ``among``?

    Rounding to float is monotone, so a float comparison that fails is
    already exact; only float hits are confirmed in rationals.
    """
    if not among:
        return False
    hits = np.flatnonzero(np.all(approx[among] >= approx[i], axis=1))
    a = points[i]
    return any(all(x <= y for x, y in zip(a, points[among[h]])) for h in hits)


class ExtremeSet:
    """Incrementally maintained set of extreme points of a growing point cloud.

    ``add_points`` takes one batch; ``vertices`` returns the extreme points
    of the convex hull of everything inserted so far, in first-insertion
    order. Only current vertices and new points can be vertices after an
    insertion, so each batch re-checks just those.
    """

    def __init__(self, dim: int | None = None):
        self.dim = dim
        self._order: dict[tuple, int] = {}
        self._tags: dict[tuple, object] = {}
        self._vertices: list[tuple] = []
        self._batches = 0
        self.lp_calls = 0

    def add_points(self, points: Iterable[Point], tag=None) -> None:
        new = _coords(points, self.dim)
        if new and self.dim is None:
            self.dim = len(new[0])
        fresh = []
        for q in new:
            if q not in self._order:
                self._order[q] = len(self._order)
                self._tags[q] = (self._batches, tag)
                fresh.append(q)
        self._batches += 1
        if not fresh:
            return
        pool = self._vertices + fresh
        keep = []
        for k, q in enumerate(pool):
            others = pool[:k] + pool[k + 1:]
            self.lp_calls += 1
            if not others or not in_convex_hull(q, others)[0]:
                keep.append(q)
        self._vertices = sorted(keep, key=self._order.__getitem__)

    def vertices(self) -> list[tuple[Fraction, ...]]:
        return list(self._vertices)

    def is_vertex(self, p: Point) -> bool:
        (c,) = _coords([p])
        return c in set(self._vertices)

    def tag(self, p: Point):
        (c,) = _coords([p])
        return self._tags.get(c)

    def __len__(self):
        return len(self._order)
