"""Exact rational linear algebra: dense solves and LP feasibility.

Inputs and outputs are :class:`fractions.Fraction` (ints are accepted).
Internally the arithmetic runs on gmpy2's ``mpq``, which is the same exact
rational field with the normalisation done in C. Nothing is ever converted
to float.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from gmpy2 import mpq

from .errors import InputError

ZERO = mpq(0)
ONE = mpq(1)


def _q(x) -> mpq:
    if type(x) is mpq:
        return x
    return mpq(x.numerator, x.denominator) if isinstance(x, Fraction) else mpq(x)


def _f(x: mpq) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def solve_linear(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction]:
    """Solve ``a @ x = b`` exactly for a square nonsingular ``a``.

    Gauss-Jordan elimination with the first nonzero entry of each column as
    pivot (row order is the caller's state order, so results are
    deterministic).
    """
    return [_f(x) for x in solve_linear_q(a, b)]


def solve_linear_q(a: Sequence[Sequence], b: Sequence) -> list[mpq]:
    """:func:`solve_linear` returning ``mpq`` values (inputs may be mpq too)."""
    n = len(a)
    if len(b) != n or any(len(row) != n for row in a):
        raise InputError("solve_linear: shape mismatch")
    rows = [[_q(v) for v in row] + [_q(rhs)] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            raise InputError("solve_linear: singular system")
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
        prow = rows[col]
        inv = 1 / prow[col]
        if inv != 1:
            for k in range(col, n + 1):
                if prow[k]:
                    prow[k] *= inv
        nz = [k for k in range(col + 1, n + 1) if prow[k]]
        for r in range(n):
            if r == col:
                continue
            factor = rows[r][col]
            if factor:
                row = rows[r]
                row[col] = ZERO
                for k in nz:
                    row[k] -= factor * prow[k]
    return [rows[i][n] for i in range(n)]


def feasible_nonneg(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction] | None:
    """Return some ``x >= 0`` with ``a @ x = b``, or None if none exists.

    Phase one of the tableau simplex method with Bland's rule (so it always
    terminates), run entirely in exact arithmetic.
    """
    return feasible_or_certificate(a, b)[0]


def feasible_or_certificate(
    a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]
) -> tuple[list[Fraction] | None, list[Fraction] | None]:
    """Like :func:`feasible_nonneg`, but an infeasible system also yields a
    Farkas certificate: ``(None, y)`` with ``y @ a <= 0`` columnwise and
    ``y @ b > 0``."""
    x, y = feasible_or_certificate_q(a, b)
    return (None if x is None else [_f(v) for v in x]), (None if y is None else [_f(v) for v in y])


def feasible_or_certificate_q(a: Sequence[Sequence], b: Sequence) -> tuple[list[mpq] | None, list[mpq] | None]:
    """:func:`feasible_or_certificate` with ``mpq`` results."""
    m = len(a)
    if len(b) != m:
        raise InputError("feasible_nonneg: shape mismatch")
    n = len(a[0]) if m else 0
    if any(len(row) != n for row in a):
        raise InputError("feasible_nonneg: ragged matrix")
    if m == 0:
        return [ZERO] * n, None

    # tableau columns: n originals, m artificials, rhs
    width = n + m + 1
    tab: list[list[mpq]] = []
    for i, (row, rhs) in enumerate(zip(a, b)):
        sign = -1 if rhs < 0 else 1
        line = [sign * _q(v) for v in row] + [ZERO] * m + [sign * _q(rhs)]
        line[n + i] = ONE
        tab.append(line)
    basis = [n + i for i in range(m)]
    # reduced costs of the phase-one objective (minimise sum of artificials)
    cost = [ZERO] * width
    for line in tab:
        for k in range(n):
            cost[k] -= line[k]
        cost[-1] -= line[-1]

    while True:
        enter = next((k for k in range(n + m) if cost[k] < 0), None)
        if enter is None:
            break
        leave = None
        best = None
        for i, line in enumerate(tab):
            coef = line[enter]
            if coef > 0:
                ratio = line[-1] / coef
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:  # pragma: no cover - phase one is bounded below by 0
            raise ArithmeticError("unbounded phase-one problem")
        _pivot(tab, cost, leave, enter)
        basis[leave] = enter

    if cost[-1] != 0:
        # reduced cost of artificial i is 1 - y_i (rows were sign-normalised)
        signs = [-1 if rhs < 0 else 1 for rhs in b]
        return None, [sg * (ONE - cost[n + i]) for i, sg in enumerate(signs)]
    x = [ZERO] * n
    for i, var in enumerate(basis):
        if var < n:
            x[var] = tab[i][-1]
    return x, None


def _pivot(tab: list[list[mpq]], cost: list[mpq], r: int, c: int) -> None:
    prow = tab[r]
    inv = 1 / prow[c]
    if inv != 1:
        for k, v in enumerate(prow):
            if v:
                prow[k] = v * inv
    nz = [k for k, v in enumerate(prow) if v]
    for i, line in enumerate(tab):
        if i != r and line[c]:
            factor = line[c]
            for k in nz:
                line[k] -= factor * prow[k]
    factor = cost[c]
    if factor:
        for k in nz:
            cost[k] -= factor * prow[k]
