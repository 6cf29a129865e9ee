"""Command-line front end: ``treewit <command> ...``.

Every command prints one JSON report (sorted keys) on stdout, except
``bench`` which prints CSV. Exit codes: 0 answered, 1 negative answer (no
witness, invalid partition, MCP no-instance), 2 bad input or refusal.
Output never contains color, so ``NO_COLOR`` needs no special handling.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from .errors import InputError, RefusalError
from .gadgets.chains import mcp_to_chain
from .gadgets.mcp import mcp_brute, partition_answer, partition_to_2mcp, pipeline
from .gadgets.random_models import layered_random
from .io import format_rational, parse_mcp, parse_model, parse_partition, parse_rational, write_mcp, write_model, write_partition
from .mdp import reach_values, initial_value, validate_model
from .partition import DirectedTreePartition, heuristic_partition, min_width_search, model_min_width, validate_partition
from .witness import (
    BRUTE_FORCE_CAP,
    SearchConfig,
    SearchStats,
    Witness,
    brute_force_minimal_witness,
    greedy_upper_bound,
    minimal_witness,
)

PRUNES = ("value-sum", "size-bound")


class Answer(Exception):
    """Carries a finished report and exit code out of a command."""

    def __init__(self, report: dict, code: int = 0):
        self.report, self.code = report, code


class _Parser(argparse.ArgumentParser):
    # usage errors become input errors so they get the JSON report too
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _rational(text: str, flag: str = "--lambda") -> Fraction:
    try:
        return parse_rational(text.strip())
    except InputError:
        raise InputError(f"{flag}: malformed rational {text!r} (use an integer or p/q)") from None


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def _load_model(path: str):
    try:
        m = parse_model(_read(path))
    except InputError as e:
        raise InputError(f"{path}: {e}") from None
    problems = validate_model(m)
    if problems:
        raise InputError(f"{path}: " + "; ".join(problems))
    return m


def _load_partition(path: str, m, check: bool = True) -> DirectedTreePartition:
    try:
        blocks = parse_partition(_read(path)).blocks
        part = DirectedTreePartition.from_blocks(m, blocks)
    except InputError as e:
        raise InputError(f"{path}: {e}") from None
    if check:
        problems = validate_partition(m, part)
        if problems:
            raise InputError(f"{path}: invalid partition: " + "; ".join(problems))
    return part


def _witness_json(w: Witness | None):
    if w is None:
        return "none"
    return {"size": w.size, "states": sorted(w.states), "value": format_rational(w.value)}


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"--ints expects comma-separated integers, got {text!r}") from None


def _range(text: str) -> range:
    lo, sep, hi = text.partition("..")
    if not sep or not lo.isdigit() or not hi.isdigit() or int(lo) > int(hi):
        raise InputError(f"--layers expects A..B, got {text!r}")
    return range(int(lo), int(hi) + 1)


def cmd_witness(args) -> dict:
    m = _load_model(args.model)
    part = _load_partition(args.partition, m)
    lam = _rational(args.lam)
    prunes = [x for x in (args.prune or "").split(",") if x]
    for x in prunes:
        if x not in PRUNES:
            raise InputError(f"unknown prune {x!r}; choose from {', '.join(PRUNES)}")
    bound = args.bound
    if "size-bound" in prunes and bound is None:
        bound = greedy_upper_bound(m, lam, args.mode)
    cfg = SearchConfig(
        mode=args.mode,
        lam=lam,
        size_upper_bound=bound,
        enable_value_sum_prune="value-sum" in prunes,
        enable_size_bound_prune="size-bound" in prunes,
        interface_cap=args.interface_cap,
        parallelism=args.threads,
    )
    stats = SearchStats()
    w = minimal_witness(m, part, cfg, stats)
    report = {
        "answer": _witness_json(w),
        "config": {
            "bound": bound,
            "domination": cfg.domination,
            "interface_cap": cfg.interface_cap,
            "lambda": format_rational(lam),
            "mode": cfg.mode,
            "prune": sorted(prunes),
        },
        "stats": stats.as_dict(),
    }
    if args.oracle:
        o = brute_force_minimal_witness(m, cfg, args.cap)
        agrees = (o is None) == (w is None) and (o is None or o.size == w.size)
        report["oracle"] = {"answer": _witness_json(o), "agrees": agrees}
    raise Answer(report, 0 if w is not None else 1)


def cmd_brute(args) -> dict:
    m = _load_model(args.model)
    lam = _rational(args.lam)
    cfg = SearchConfig(mode=args.mode, lam=lam)
    started = time.perf_counter()
    w = brute_force_minimal_witness(m, cfg, args.cap)
    report = {
        "answer": _witness_json(w),
        "config": {"cap": args.cap, "lambda": format_rational(lam), "mode": args.mode},
        "stats": {"wall_time": time.perf_counter() - started},
    }
    raise Answer(report, 0 if w is not None else 1)


def _blocks_json(part: DirectedTreePartition) -> list[list[int]]:
    return [sorted(b) for b in part.blocks]


def cmd_partition(args) -> dict:
    m = _load_model(args.model)
    if args.action == "validate":
        part = _load_partition(args.partition, m, check=False)
        problems = validate_partition(m, part)
        report = {"valid": not problems, "violations": problems, "width": part.width, "is_path": part.is_path}
        raise Answer(report, 0 if not problems else 1)
    if args.action == "width":
        part = _load_partition(args.partition, m)
        raise Answer({"width": part.width, "is_path": part.is_path, "blocks": len(part.blocks)})
    if args.action == "heuristic":
        part = heuristic_partition(m)
        if args.out:
            Path(args.out).write_text(write_partition(part))
        raise Answer({"width": part.width, "is_path": part.is_path, "blocks": _blocks_json(part), "file": args.out})
    kinds = ("tree", "path") if args.kind == "both" else (args.kind,)
    report: dict = {"limit": args.limit, "graph_only": args.graph_only}
    for kind in kinds:
        started = time.perf_counter()
        if args.graph_only:
            width, checked, best = min_width_search({s: m.successors.get(s, ()) for s in m.states}, kind, args.limit)
        else:
            width, checked, best = model_min_width(m, kind, args.limit)
        report[kind] = {
            "width": width,
            "partitions_checked": checked,
            "blocks": [sorted(b) for b in best],
            "wall_time": time.perf_counter() - started,
        }
    raise Answer(report)


def _write_files(out_dir: str, files: dict[str, str]) -> dict[str, str]:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    written = {}
    for name, text in files.items():
        (d / name).write_text(text)
        written[name] = str(d / name)
    return written


def cmd_generate(args) -> dict:
    if args.family in ("m1", "m2"):
        ints = _ints(args.ints)
        two, lifted, cond = pipeline(ints)
        chain = mcp_to_chain(cond, "plain" if args.family == "m1" else "robust")
        prov = {
            "family": args.family,
            "ints": ints,
            "n": len(ints),
            "partition_answer": partition_answer(ints),
            "lambda": format_rational(chain.lam),
            "epsilon": format_rational(cond.epsilon),
            "kappa": format_rational(cond.kappa),
            "scale": format_rational(cond.scale),
            "gamma": None if chain.gamma is None else format_rational(chain.gamma),
            "states": chain.dtmc.state_count,
            "width": chain.partition.width,
            "witness_size_bound": 3 * len(ints) + 4,
        }
        files = {
            "model.txt": write_model(chain.dtmc),
            "partition.txt": write_partition(chain.partition),
            "mcp.txt": write_mcp(cond.instance),
        }
    elif args.family == "layered":
        if args.seed is None:
            raise InputError("generate layered needs --seed")
        m, part = layered_random(args.layers, args.width, args.fanout, args.seed)
        prov = {
            "family": "layered",
            "layers": args.layers,
            "width": args.width,
            "fanout": args.fanout,
            "seed": args.seed,
            "states": m.state_count,
            "max_value": format_rational(initial_value(m, reach_values(m, "max"))),
        }
        files = {"model.txt": write_model(m), "partition.txt": write_partition(part)}
    else:
        ints = _ints(args.ints)
        two, lifted, cond = pipeline(ints) if args.stage != "2mcp" else (partition_to_2mcp(ints), None, None)
        inst = {"2mcp": two, "lifted": lifted, "conditioned": cond and cond.instance}[args.stage]
        prov = {"family": "mcp-from-partition", "ints": ints, "stage": args.stage, "partition_answer": partition_answer(ints)}
        files = {"mcp.txt": write_mcp(inst)}
    prov["files"] = _write_files(args.out_dir, files)
    Path(args.out_dir, "provenance.json").write_text(json.dumps(prov, sort_keys=True, indent=2) + "\n")
    raise Answer(prov)


def cmd_mcp(args) -> dict:
    try:
        inst = parse_mcp(_read(args.file))
    except InputError as e:
        raise InputError(f"{args.file}: {e}") from None
    ans = mcp_brute(inst)
    raise Answer({"sigma": ans.sigma, "value": format_rational(ans.value), "yes": ans.yes}, 0 if ans.yes else 1)


def cmd_bench(args) -> str:
    if args.seed is None:
        raise InputError("bench needs --seed")
    frac = _rational(args.lambda_fraction, "--lambda-fraction")
    out = _io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["layers", "states", "lambda", "size", "time"])
    for layers in _range(args.layers):
        m, part = layered_random(layers, args.width, args.fanout, args.seed + layers)
        lam = frac * initial_value(m, reach_values(m, "max"))
        started = time.perf_counter()
        wit = minimal_witness(m, part, SearchConfig(lam=lam, parallelism=args.threads))
        elapsed = time.perf_counter() - started
        w.writerow([layers, m.state_count, format_rational(lam), wit.size if wit else "none", f"{elapsed:.3f}"])
    return out.getvalue()


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="treewit", description="Minimal witnessing subsystems along directed tree partitions.")
    sub = ap.add_subparsers(dest="command", required=True)

    w = sub.add_parser("witness", help="smallest witnessing subsystem via the partition DP")
    w.add_argument("--model", required=True)
    w.add_argument("--partition", required=True)
    w.add_argument("--lambda", dest="lam", required=True)
    w.add_argument("--mode", choices=("max", "min"), default="max")
    w.add_argument("--oracle", action="store_true", help="cross-check with brute force")
    w.add_argument("--cap", type=int, default=BRUTE_FORCE_CAP, help="state cap for --oracle")
    w.add_argument("--prune", help="comma list of: " + ", ".join(PRUNES))
    w.add_argument("--bound", type=int, help="known upper bound on the witness size")
    w.add_argument("--interface-cap", type=int, default=10)
    w.add_argument("--threads", type=int, default=1)
    w.set_defaults(func=cmd_witness)

    b = sub.add_parser("brute", help="smallest witnessing subsystem by exhaustive search")
    b.add_argument("--model", required=True)
    b.add_argument("--lambda", dest="lam", required=True)
    b.add_argument("--mode", choices=("max", "min"), default="max")
    b.add_argument("--cap", type=int, default=BRUTE_FORCE_CAP)
    b.set_defaults(func=cmd_brute)

    p = sub.add_parser("partition", help="check, measure or build tree partitions")
    p.add_argument("action", choices=("validate", "width", "heuristic", "brute-width"))
    p.add_argument("--model", required=True)
    p.add_argument("--partition")
    p.add_argument("--out", help="heuristic: write the partition here")
    p.add_argument("--kind", choices=("tree", "path", "both"), default="both")
    p.add_argument("--limit", type=int, default=10, help="brute-width: most states to enumerate")
    p.add_argument("--graph-only", action="store_true", help="brute-width: ignore the initial and goal side conditions")
    p.set_defaults(func=cmd_partition)

    g = sub.add_parser("generate", help="write generated instances and their provenance")
    g.add_argument("family", choices=("m1", "m2", "layered", "mcp-from-partition"))
    g.add_argument("--out-dir", required=True)
    g.add_argument("--ints", help="m1, m2, mcp-from-partition: comma-separated integers")
    g.add_argument("--stage", choices=("2mcp", "lifted", "conditioned"), default="2mcp")
    g.add_argument("--layers", type=int, default=10)
    g.add_argument("--width", type=int, default=4)
    g.add_argument("--fanout", type=int, default=2)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_generate)

    mc = sub.add_parser("mcp", help="matrix-pair chain instances")
    mc.add_argument("action", choices=("solve",))
    mc.add_argument("--file", required=True)
    mc.set_defaults(func=cmd_mcp)

    be = sub.add_parser("bench", help="CSV timings over a generated family")
    be.add_argument("--family", choices=("layered",), default="layered")
    be.add_argument("--layers", required=True, help="A..B")
    be.add_argument("--width", type=int, default=4)
    be.add_argument("--fanout", type=int, default=2)
    be.add_argument("--lambda-fraction", default="1/2", help="lambda as a fraction of the model's value")
    be.add_argument("--seed", type=int)
    be.add_argument("--threads", type=int, default=1)
    be.set_defaults(func=cmd_bench)
    return ap


def _needs(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise InputError(f"{args.command} {getattr(args, 'action', '') or getattr(args, 'family', '')} needs --{name.replace('_', '-')}")


def run(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    started = time.perf_counter()
    args = None
    try:
        args = build_parser().parse_args(argv)
        if args.command == "partition" and args.action in ("validate", "width"):
            _needs(args, "partition")
        if args.command == "generate" and args.family != "layered":
            _needs(args, "ints")
        if getattr(args, "threads", 1) < 1:
            raise InputError("--threads must be at least 1")
        out = args.func(args)
        stdout.write(out)
        return 0
    except Answer as a:
        report, code = a.report, a.code
    except (InputError, RefusalError) as e:
        kind = "refusal" if isinstance(e, RefusalError) else "input"
        print(f"treewit: {e}", file=sys.stderr)
        report, code = {"error": {"kind": kind, "message": str(e)}}, 2
    report = {"command": getattr(args, "command", None), **report}
    report["runtime"] = {"threads": getattr(args, "threads", 1), "wall_time": time.perf_counter() - started}
    stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return code


def main(argv: list[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
