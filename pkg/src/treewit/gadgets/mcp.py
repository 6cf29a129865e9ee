"""Matrix-pair chain problems and the rotation/lifting constructions.

An instance has n pairs of d x d matrices, a row vector iota, a column
vector ``final`` and a threshold. Choosing one matrix per pair (a bit string
sigma) gives the value ``iota . M^1_s1 ... M^n_sn . final``; the instance is
a yes-instance iff some choice reaches the threshold.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
from mpmath import iv

from ..errors import InputError, RefusalError

Matrix = tuple[tuple[Fraction, ...], ...]
Vector = tuple[Fraction, ...]

MCP_BRUTE_CAP = 24

# change of basis used by the lifting step, and its inverse
BASIS = ((1, 1, 1), (-1, 1, 1), (0, -2, 1))
BASIS_INV = tuple(tuple(Fraction(x, 6) for x in row) for row in ((3, -3, 0), (1, 1, -2), (2, 2, 2)))


def matrix(rows) -> Matrix:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def identity(d: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d))


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    cols = list(zip(*b))
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in cols) for row in a)


def mat_pow(a: Matrix, k: int) -> Matrix:
    if k < 0:
        a, k = inverse_2x2(a), -k
    out = identity(len(a))
    for _ in range(k):
        out = mat_mul(out, a)
    return out


def inverse_2x2(a: Matrix) -> Matrix:
    (p, q), (r, s) = a
    det = p * s - q * r
    if det == 0:
        raise InputError("singular matrix")
    return ((s / det, -q / det), (-r / det, p / det))


def row_times(v: Sequence[Fraction], a: Matrix) -> Vector:
    return tuple(sum((x * a[i][j] for i, x in enumerate(v)), Fraction(0)) for j in range(len(a[0])))


def times_col(a: Matrix, v: Sequence[Fraction]) -> Vector:
    return tuple(sum((x * y for x, y in zip(row, v)), Fraction(0)) for row in a)


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(u, v)), Fraction(0))


@dataclass(frozen=True)
class McpInstance:
    dim: int
    pairs: tuple[tuple[Matrix, Matrix], ...]
    iota: Vector
    final: Vector
    lam: Fraction
    nonneg: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((matrix(a), matrix(b)) for a, b in self.pairs))
        object.__setattr__(self, "iota", tuple(Fraction(x) for x in self.iota))
        object.__setattr__(self, "final", tuple(Fraction(x) for x in self.final))
        object.__setattr__(self, "lam", Fraction(self.lam))
        d = self.dim
        if len(self.iota) != d or len(self.final) != d:
            raise InputError(f"vectors must have length {d}")
        for j, pair in enumerate(self.pairs):
            for m in pair:
                if len(m) != d or any(len(row) != d for row in m):
                    raise InputError(f"pair {j + 1}: matrices must be {d}x{d}")
        if self.nonneg and any(x < 0 for x in self.entries()):
            raise InputError("instance flagged nonnegative has a negative entry")

    @property
    def n(self) -> int:
        return len(self.pairs)

    def entries(self):
        yield from self.iota
        yield from self.final
        for pair in self.pairs:
            for m in pair:
                for row in m:
                    yield from row


@dataclass(frozen=True)
class McpAnswer:
    sigma: str
    value: Fraction
    yes: bool


def _bits(sigma, n: int) -> str:
    s = "".join(str(int(b)) for b in sigma) if not isinstance(sigma, str) else sigma
    if len(s) != n or set(s) - {"0", "1"}:
        raise InputError(f"choice must be a bit string of length {n}, got {sigma!r}")
    return s


def mcp_value(inst: McpInstance, sigma) -> Fraction:
    bits = _bits(sigma, inst.n)
    row = inst.iota
    for pair, b in zip(inst.pairs, bits):
        row = row_times(row, pair[int(b)])
    return dot(row, inst.final)


def mcp_brute(inst: McpInstance, cap: int = MCP_BRUTE_CAP) -> McpAnswer:
    """Best choice over all 2^n bit strings (ties: smallest string)."""
    if inst.n > cap:
        raise RefusalError(f"{inst.n} pairs exceeds the brute-force cap of {cap}")
    best = None
    for bits in itertools.product("01", repeat=inst.n):
        v = mcp_value(inst, bits)
        if best is None or v > best[1]:
            best = ("".join(bits), v)
    return McpAnswer(best[0], best[1], best[1] >= inst.lam)


def partition_answer(ints: Sequence[int]) -> bool:
    """Can the integers be split into two parts of equal sum?"""
    return any(
        sum(s if b else -s for s, b in zip(ints, bits)) == 0
        for bits in itertools.product((0, 1), repeat=len(ints))
    )


def rational_rotation(t) -> Matrix:
    """Rotation by 2*atan(t); exactly orthogonal for every rational t."""
    t = Fraction(t)
    den = 1 + t * t
    c, s = (1 - t * t) / den, 2 * t / den
    return ((c, -s), (s, c))


def _to_fraction(x) -> Fraction:
    man, exp = mpmath.mpf(x).man_exp
    return Fraction(int(man)) * Fraction(2) ** int(exp)


def approx_rotation(angle, eps) -> tuple[Matrix, Fraction, Fraction]:
    """Rational rotation within ``eps`` of ``angle`` (both in half-turns).

    Bisects over t, the tangent of half the realized angle, and certifies
    the error with interval arithmetic. Returns the matrix, t, and a
    rational upper bound on |realized angle - angle|.
    """
    angle, eps = Fraction(angle), Fraction(eps)
    if eps <= 0:
        raise InputError("precision must be positive")
    if not -1 < angle < 1:
        raise InputError("angle must lie strictly between -1 and 1 half-turns")
    prec = 64

    def error(t):
        saved = iv.prec
        iv.prec = prec
        try:
            return 2 * iv.atan2(iv.mpf(t.numerator), iv.mpf(t.denominator)) / iv.pi - iv.mpf(angle.numerator) / angle.denominator
        finally:
            iv.prec = saved

    lo, hi = Fraction(-1), Fraction(1)
    while error(hi).b <= 0:
        hi *= 2
    while error(lo).a >= 0:
        lo *= 2
    while True:
        mid = (lo + hi) / 2
        e = error(mid)
        bound = max(abs(_to_fraction(e.a)), abs(_to_fraction(e.b)))
        if bound <= eps:
            return rational_rotation(mid), mid, bound
        if e.a > 0:
            hi = mid
        elif e.b < 0:
            lo = mid
        else:
            prec *= 2


def partition_to_2mcp(ints: Sequence[int]) -> McpInstance:
    """Rotation instance that is a yes-instance iff ``ints`` splits evenly.

    One rational rotation R by roughly u = 1/(2(K+1)) half-turns, K = sum of
    |s|, is fixed; pair j is (R^-s_j, R^s_j). With iota = final = (1/2, 1/2)
    every choice evaluates to cos(k * angle(R)) / 2 where k is the signed
    sum, so the value is 1/2 exactly when k = 0. The threshold sits halfway
    between 1/2 and the largest value any k != 0 can produce.
    """
    ints = [int(s) for s in ints]
    if not ints:
        raise InputError("need at least one integer")
    if any(s == 0 for s in ints):
        raise InputError("integers must be nonzero")
    total = sum(abs(s) for s in ints)
    unit = Fraction(1, 2 * (total + 1))
    rot, _, _ = approx_rotation(unit, unit / 8)
    half = Fraction(1, 2)
    best_no = max(mat_pow(rot, k)[0][0] / 2 for k in range(1, total + 1))
    lam = (half + best_no) / 2
    pairs = tuple((mat_pow(rot, -s), mat_pow(rot, s)) for s in ints)
    return McpInstance(2, pairs, (half, half), (half, half), lam)


def _lift_with(inst: McpInstance, kappa: Fraction) -> McpInstance:
    def block(m):
        return ((m[0][0], m[0][1], 0), (m[1][0], m[1][1], 0), (0, 0, kappa))

    basis = matrix(BASIS)
    pairs = tuple(
        tuple(mat_mul(mat_mul(basis, matrix(block(m))), BASIS_INV) for m in pair) for pair in inst.pairs
    )
    iota = row_times(inst.iota + (kappa,), BASIS_INV)
    final = times_col(basis, inst.final + (kappa,))
    lam = inst.lam + kappa ** (inst.n + 2)
    return McpInstance(3, pairs, iota, final, lam)


def lift_to_nonneg_3mcp(inst: McpInstance, kappa=None) -> McpInstance:
    """Change basis and add a kappa-coordinate so that every entry is >= 0.

    Every choice's value grows by exactly kappa^(n+2), and so does the
    threshold. Without an explicit ``kappa`` the smallest power of two that
    works is used.
    """
    if inst.dim != 2:
        raise InputError(f"lifting needs a 2-dimensional instance, got d={inst.dim}")
    if kappa is None:
        kappa = Fraction(1)
        while any(x < 0 for x in _lift_with(inst, kappa).entries()):
            kappa *= 2
    lifted = _lift_with(inst, Fraction(kappa))
    if any(x < 0 for x in lifted.entries()):
        raise InputError(f"kappa={kappa} leaves negative entries")
    return McpInstance(3, lifted.pairs, lifted.iota, lifted.final, lifted.lam, nonneg=True)


@dataclass(frozen=True)
class ConditionedMcp:
    instance: McpInstance
    epsilon: Fraction
    kappa: Fraction
    scale: Fraction


def epsilon_admissible(eps: Fraction, n: int) -> bool:
    return 0 < 12 * eps < Fraction(1, 3) * (Fraction(1, 12) - eps) ** (n + 2)


def largest_epsilon(n: int) -> Fraction:
    eps = Fraction(1, 2)
    while not epsilon_admissible(eps, n):
        eps /= 2
    return eps


def _scale_to_twelfth(inst: McpInstance) -> tuple[McpInstance, Fraction]:
    """Scale iota, final and each pair so its largest entry is 1/12.

    Both matrices of a pair share one factor, so every choice's value is
    multiplied by the same overall factor, which is applied to the threshold
    as well.
    """
    top = Fraction(1, 12)

    def scale(xs, a):
        return tuple(a * x for x in xs)

    a_iota = top / max(inst.iota)
    a_final = top / max(inst.final)
    overall = a_iota * a_final
    pairs = []
    for pair in inst.pairs:
        a = top / max(x for m in pair for row in m for x in row)
        overall *= a
        pairs.append(tuple(tuple(scale(row, a) for row in m) for m in pair))
    scaled = McpInstance(
        inst.dim, tuple(pairs), scale(inst.iota, a_iota), scale(inst.final, a_final), inst.lam * overall, nonneg=True
    )
    return scaled, overall


def condition_entries(inst: McpInstance, source: McpInstance | None = None, budget: int = 256) -> ConditionedMcp:
    """Rescale a nonnegative 3-d instance so all entries lie in [1/12 - eps, 1/12].

    ``eps`` is the largest power of 1/2 allowed by the bound
    0 < 12 eps < (1/3)(1/12 - eps)^(n+2). If the entries are too spread out
    for that eps, kappa is doubled and the 2-d ``source`` re-lifted (so
    ``source`` is needed whenever the given lift is not tight enough).
    """
    if inst.dim != 3 or any(x < 0 for x in inst.entries()):
        raise InputError("conditioning needs a nonnegative 3-dimensional instance")
    if min(max(inst.iota), max(inst.final), *(max(x for m in p for row in m for x in row) for p in inst.pairs)) <= 0:
        raise InputError("a vector or matrix pair is entirely zero")
    eps = largest_epsilon(inst.n)
    kappa = _find_kappa(source, inst) if source is not None else Fraction(0)
    for _ in range(budget):
        scaled, overall = _scale_to_twelfth(inst)
        low = min(scaled.entries())
        if low >= Fraction(1, 12) - eps:
            return ConditionedMcp(scaled, eps, kappa, overall)
        if source is None:
            raise RefusalError(f"entries span [{low}, 1/12] but eps={eps}; pass the 2-d source to re-lift")
        kappa *= 2
        inst = lift_to_nonneg_3mcp(source, kappa)
    raise RefusalError(f"no admissible kappa within {budget} doublings")


def _find_kappa(source: McpInstance, lifted: McpInstance) -> Fraction:
    # third coordinate of the lifted final vector is kappa - 2 f_1
    kappa = lifted.final[2] + 2 * source.final[1]
    if kappa <= 0 or _lift_with(source, kappa).pairs != lifted.pairs:
        raise InputError("lifted instance does not come from the given source")
    return kappa


def pipeline(ints: Sequence[int]) -> tuple[McpInstance, McpInstance, ConditionedMcp]:
    """Partition integers -> rotation 2-MCP -> nonnegative 3-MCP -> conditioned 3-MCP."""
    two = partition_to_2mcp(ints)
    lifted = lift_to_nonneg_3mcp(two)
    return two, lifted, condition_entries(lifted, source=two)
