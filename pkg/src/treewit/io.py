"""Line-oriented text formats for models, partitions and MCP instances.

Model::

    dtmc                 # or: mdp
    states 3
    initial 0 1
    goal 2
    trans 0 a 2 1/2      # source action target probability
    trans 0 a 1 1/2

Partition::

    block 0 : 0 1
    block 1 : 2

MCP instance (entries are rationals; one ``pair`` header then d rows of the
first matrix and d rows of the second)::

    mcp d=2 n=1
    iota 1/2 1/2
    final 1/2 1/2
    lambda 2/5
    pair 1
    0 -1
    1 0
    0 1
    -1 0

``#`` starts a comment anywhere. Probabilities are integers or ``p/q``;
decimal notation is rejected so that nothing ever passes through a float.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import InputError
from .gadgets.mcp import McpInstance
from .mdp import Mdp
from .partition import DirectedTreePartition, validate_partition

_RATIONAL = re.compile(r"[+-]?\d+(/\d+)?")


class ParseError(InputError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def _tokens(text: str):
    """Yield (line number, [(column, token), ...]) for non-blank lines."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", line)]
        if toks:
            yield lineno, toks


def parse_rational(token: str, line: int = 0, column: int = 0) -> Fraction:
    if not _RATIONAL.fullmatch(token):
        raise ParseError(line, column, f"malformed rational {token!r} (use an integer or p/q)")
    _, _, den = token.partition("/")
    if den and int(den) == 0:
        raise ParseError(line, column, f"zero denominator in {token!r}")
    return Fraction(token)


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _int(tok, line) -> int:
    col, text = tok
    if not re.fullmatch(r"\d+", text):
        raise ParseError(line, col, f"expected a non-negative integer, got {text!r}")
    return int(text)


def _arity(toks, n, line, usage):
    if len(toks) != n:
        raise ParseError(line, toks[0][0], f"expected: {usage}")


def parse_model(text: str) -> Mdp:
    lines = list(_tokens(text))
    if not lines:
        raise ParseError(1, 1, "empty model file")
    lineno, toks = lines[0]
    kind = toks[0][1]
    if kind not in ("mdp", "dtmc") or len(toks) != 1:
        raise ParseError(lineno, toks[0][0], "first line must be 'mdp' or 'dtmc'")
    count = None
    initial: dict[int, Fraction] = {}
    goal: list[int] = []
    transitions = []
    where: dict[tuple, tuple[int, int]] = {}
    for lineno, toks in lines[1:]:
        key = toks[0][1]
        if key == "states":
            _arity(toks, 2, lineno, "states N")
            if count is not None:
                raise ParseError(lineno, toks[0][0], "repeated 'states' line")
            count = _int(toks[1], lineno)
            continue
        if count is None:
            raise ParseError(lineno, toks[0][0], "'states N' must come before other entries")

        def state(tok):
            s = _int(tok, lineno)
            if s >= count:
                raise ParseError(lineno, tok[0], f"state {s} out of range (states {count})")
            return s

        if key == "initial":
            _arity(toks, 3, lineno, "initial <state> <p/q>")
            s = state(toks[1])
            if s in initial:
                raise ParseError(lineno, toks[1][0], f"repeated initial state {s}")
            initial[s] = parse_rational(toks[2][1], lineno, toks[2][0])
        elif key == "goal":
            _arity(toks, 2, lineno, "goal <state>")
            goal.append(state(toks[1]))
        elif key == "trans":
            _arity(toks, 5, lineno, "trans <state> <action> <state> <p/q>")
            s, a, t = state(toks[1]), toks[2][1], state(toks[3])
            if (s, a, t) in where:
                raise ParseError(lineno, toks[0][0], f"duplicate transition {s} {a} {t} (first on line {where[(s, a, t)][0]})")
            where[(s, a, t)] = (lineno, toks[0][0])
            transitions.append((s, a, t, parse_rational(toks[4][1], lineno, toks[4][0])))
        else:
            raise ParseError(lineno, toks[0][0], f"unknown keyword {key!r}")
    if count is None:
        raise ParseError(lines[0][0], 1, "missing 'states N' line")
    if kind == "dtmc":
        labels: dict[int, set[str]] = {}
        for s, a, t, _ in transitions:
            labels.setdefault(s, set()).add(a)
            if len(labels[s]) > 1:
                line, col = where[(s, a, t)]
                raise ParseError(line, col, f"dtmc state {s} uses more than one action label")
    return Mdp.build(count, transitions, initial, goal)


def write_model(m: Mdp) -> str:
    out = ["dtmc" if m.is_dtmc else "mdp", f"states {m.state_count}"]
    out += [f"initial {s} {format_rational(p)}" for s, p in sorted(m.initial.items())]
    out += [f"goal {g}" for g in sorted(m.goal)]
    for s in m.states:
        for a in m.actions[s]:
            row = m.edges(s, a)
            if not row:
                # keeps an action whose transitions are all zero
                out.append(f"trans {s} {a} {s} 0")
            out += [f"trans {s} {a} {t} {format_rational(p)}" for t, p in row]
    return "\n".join(out) + "\n"


def parse_partition(text: str, m: Mdp | None = None) -> DirectedTreePartition:
    """Read blocks (ordered by id). With a model, also build the tree and
    validate it, raising InputError listing every violation."""
    blocks: dict[int, list[int]] = {}
    seen: dict[int, int] = {}
    for lineno, toks in _tokens(text):
        if toks[0][1] != "block" or len(toks) < 3 or toks[2][1] != ":":
            raise ParseError(lineno, toks[0][0], "expected: block <id> : s1 s2 ...")
        bid = _int(toks[1], lineno)
        if bid in blocks:
            raise ParseError(lineno, toks[1][0], f"repeated block id {bid}")
        members = []
        for tok in toks[3:]:
            s = _int(tok, lineno)
            if s in seen:
                raise ParseError(lineno, tok[0], f"state {s} already in block {seen[s]}")
            seen[s] = bid
            members.append(s)
        if not members:
            raise ParseError(lineno, toks[0][0], f"block {bid} is empty")
        blocks[bid] = members
    if not blocks:
        raise ParseError(1, 1, "no blocks")
    ordered = [blocks[b] for b in sorted(blocks)]
    if m is None:
        succ: dict[int, tuple[int, ...]] = {}
        return DirectedTreePartition.from_blocks(succ, ordered)
    part = DirectedTreePartition.from_blocks(m, ordered)
    problems = validate_partition(m, part)
    if problems:
        raise InputError("invalid partition: " + "; ".join(problems))
    return part


def write_partition(p: DirectedTreePartition) -> str:
    return "".join(f"block {i} : {' '.join(map(str, sorted(b)))}\n" for i, b in enumerate(p.blocks))


def parse_mcp(text: str) -> McpInstance:
    lines = list(_tokens(text))
    if not lines:
        raise ParseError(1, 1, "empty MCP file")
    lineno, toks = lines[0]
    head = re.fullmatch(r"mcp d=(\d+) n=(\d+)", " ".join(t for _, t in toks))
    if not head:
        raise ParseError(lineno, 1, "first line must be 'mcp d=<d> n=<n>'")
    d, n = int(head.group(1)), int(head.group(2))
    if d < 1:
        raise ParseError(lineno, 1, "dimension must be positive")
    pos = 1

    def take(keyword: str | None, count: int):
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(lines[-1][0] + 1, 1, f"unexpected end of file, expected {keyword or 'a matrix row'}")
        line, toks = lines[pos]
        pos += 1
        if keyword is not None:
            if toks[0][1] != keyword:
                raise ParseError(line, toks[0][0], f"expected '{keyword}'")
            toks = toks[1:]
        if len(toks) != count:
            raise ParseError(line, toks[0][0] if toks else 1, f"expected {count} entries, got {len(toks)}")
        return [parse_rational(t, line, c) for c, t in toks], line, toks

    iota, _, _ = take("iota", d)
    final, _, _ = take("final", d)
    (lam,), _, _ = take("lambda", 1)
    pairs = []
    for j in range(1, n + 1):
        (idx,), line, toks = take("pair", 1)
        if idx != j:
            raise ParseError(line, toks[0][0], f"expected pair {j}, got {format_rational(idx)}")
        m0 = [take(None, d)[0] for _ in range(d)]
        m1 = [take(None, d)[0] for _ in range(d)]
        pairs.append((m0, m1))
    if pos < len(lines):
        line, toks = lines[pos]
        raise ParseError(line, toks[0][0], "trailing content after the last pair")
    nonneg = all(x >= 0 for x in iota + final) and all(x >= 0 for m in pairs for mat in m for row in mat for x in row)
    return McpInstance(d, tuple(pairs), tuple(iota), tuple(final), lam, nonneg=nonneg)


def write_mcp(inst: McpInstance) -> str:
    def row(xs):
        return " ".join(format_rational(x) for x in xs)

    out = [
        f"mcp d={inst.dim} n={inst.n}",
        "iota " + row(inst.iota),
        "final " + row(inst.final),
        "lambda " + format_rational(inst.lam),
    ]
    for j, (m0, m1) in enumerate(inst.pairs, start=1):
        out.append(f"pair {j}")
        out += [row(r) for r in m0]
        out += [row(r) for r in m1]
    return "\n".join(out) + "\n"
