"""Acceptance suites 1-11.

Every suite is a function ``threads -> report`` whose report is plain JSON
data. Anything timing-dependent lives under a "timing" key (or a key named
"wall_time"), which the determinism check strips before comparing.
A summary line per criterion is printed at the end of the session
(see conftest.py).
"""

import itertools
import json
import random
import subprocess
import sys
import time
from fractions import Fraction as F

from treewit import (
    RefusalError,
    SearchConfig,
    apply_assumption,
    assumed_values,
    block_interfaces,
    brute_force_minimal_witness,
    heuristic_partition,
    induced_subsystem,
    minimal_witness,
    reach_values,
    subsystem_value,
    validate_partition,
)
from treewit.gadgets.chains import good_subsystem, mcp_to_chain
from treewit.gadgets.mcp import mcp_brute, mcp_value, partition_answer, pipeline
from treewit.gadgets.random_models import layered_random, random_dtmc, random_mdp
from treewit.graph import reachable
from treewit.hull import IPoint, in_convex_hull, pareto_leq, project_all
from treewit.io import format_rational
from treewit.partition import model_min_width, min_width_search
from treewit.witness import (
    PartialSubsystem,
    exhaustive_witness_within,
    greedy_upper_bound,
    remove_dominated,
)

_cache: dict = {}


def q(x) -> str:
    return format_rational(F(x))


def strip_timing(obj):
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in ("timing", "wall_time")}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def canonical(report) -> str:
    return json.dumps(strip_timing(report), sort_keys=True)


def sample_lambda(m, rng, mode="max"):
    """A value some subsystem actually achieves (so a witness exists)."""
    total = subsystem_value(m, m.states, mode)
    pick = [s for s in m.states if rng.random() < 0.6] + sorted(m.goal)
    lam = subsystem_value(m, pick, mode)
    return lam if lam > 0 else total


# 1 and 3 ---------------------------------------------------------------

def dtmc_instances():
    rng = random.Random(2024)
    for i in range(200):
        m = random_dtmc(rng.randint(3, 12), seed=10_000 + i, max_out=rng.randint(1, 3))
        yield i, m, heuristic_partition(m), sample_lambda(m, rng)


def suite_dtmc_oracle(threads, **prune):
    started = time.perf_counter()
    rows, bad = [], []
    for i, m, p, lam in dtmc_instances():
        if prune.get("size_bound"):
            prune_cfg = dict(size_upper_bound=greedy_upper_bound(m, lam), enable_size_bound_prune=True)
        else:
            prune_cfg = {}
        cfg = SearchConfig(lam=lam, parallelism=threads, enable_value_sum_prune=bool(prune.get("value_sum")), **prune_cfg)
        w = minimal_witness(m, p, cfg)
        o = brute_force_minimal_witness(m, SearchConfig(lam=lam))
        size = None if w is None else w.size
        ok = w is not None and o is not None and size == o.size
        ok = ok and subsystem_value(m, w.states) == w.value >= lam
        rows.append([i, m.state_count, q(lam), size])
        if not ok:
            bad.append(i)
    elapsed = time.perf_counter() - started
    return {"instances": rows, "mismatches": bad, "timing": {"seconds": elapsed}}


def suite_pruning(threads):
    base = suite(1, threads)["instances"]
    out = {}
    for name, flags in (
        ("value-sum", {"value_sum": True}),
        ("size-bound", {"size_bound": True}),
        ("both", {"value_sum": True, "size_bound": True}),
    ):
        rep = suite_dtmc_oracle(threads, **flags)
        changed = [a[0] for a, b in zip(base, rep["instances"]) if a[3] != b[3]]
        out[name] = {"changed": changed, "mismatches": rep["mismatches"], "timing": rep["timing"]}
    return out


# 2 ---------------------------------------------------------------------

def suite_mdp_oracle(threads):
    rng = random.Random(77)
    rows, bad = [], []
    for i in range(100):
        m = random_mdp(rng.randint(3, 10), seed=20_000 + i, actions=2)
        p = heuristic_partition(m)
        for mode in ("max", "min"):
            lam = sample_lambda(m, rng, mode)
            cfg = SearchConfig(mode=mode, lam=lam, parallelism=threads)
            w = minimal_witness(m, p, cfg)
            o = brute_force_minimal_witness(m, cfg)
            ok = w is not None and o is not None and w.size == o.size
            ok = ok and subsystem_value(m, w.states, mode) == w.value >= lam
            rows.append([i, mode, m.state_count, q(lam), None if w is None else w.size])
            if not ok:
                bad.append([i, mode])
    return {"instances": rows, "mismatches": bad}


# 4 ---------------------------------------------------------------------

def multisets(total, largest, k):
    if k == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(total, largest), 0, -1):
        for rest in multisets(total - first, first, k - 1):
            yield (first,) + rest


def reduction_lists():
    # sign and order of the integers do not change any of the answers
    return [list(t) for n in range(1, 7) for s in range(n, 13) for t in multisets(s, s, n)]


def suite_reduction(threads):
    rows, bad = [], []
    timing = []
    for ints in reduction_lists():
        started = time.perf_counter()
        n = len(ints)
        expected = partition_answer(ints)
        two, lifted, cond = pipeline(ints)
        stages = [mcp_brute(x).yes for x in (two, lifted, cond.instance)]
        chain = mcp_to_chain(cond, "robust")
        bound = 3 * n + 4
        cfg = SearchConfig(
            lam=chain.lam,
            size_upper_bound=bound,
            enable_value_sum_prune=True,
            enable_size_bound_prune=True,
            parallelism=threads,
        )
        w = minimal_witness(chain.dtmc, chain.partition, cfg)
        found = w is not None and w.size <= bound
        exhaustive = None
        if n <= 3:
            exhaustive = exhaustive_witness_within(chain.dtmc, bound, chain.lam) is not None
        ok = stages == [expected] * 3 and found == expected and exhaustive in (None, expected)
        rows.append([ints, expected, stages, None if w is None else w.size, exhaustive])
        timing.append(round(time.perf_counter() - started, 3))
        if not ok:
            bad.append(ints)
    return {"lists": rows, "mismatches": bad, "timing": timing}


# 5, 6, 7 ---------------------------------------------------------------

def suite_good_values(threads):
    bad, checked = [], 0
    for n in range(1, 6):
        for ints in ([1] * n, list(range(1, n + 1))):
            cond = pipeline(ints)[2]
            for variant in ("plain", "robust"):
                chain = mcp_to_chain(cond, variant)
                for bits in itertools.product("01", repeat=n):
                    checked += 1
                    if subsystem_value(chain.dtmc, good_subsystem(chain, bits)) != mcp_value(cond.instance, bits):
                        bad.append([ints, variant, "".join(bits)])
    return {"checked": checked, "mismatches": bad}


def suite_widths(threads):
    layers = []
    for n in range(1, 7):
        cond = pipeline([1] * n)[2]
        for variant in ("plain", "robust"):
            chain = mcp_to_chain(cond, variant)
            layers.append({
                "n": n,
                "variant": variant,
                "valid": validate_partition(chain.dtmc, chain.partition) == [],
                "width": chain.partition.width,
                "is_path": chain.partition.is_path,
            })
    m1 = mcp_to_chain(pipeline([1])[2], "plain").dtmc
    search, timing = {}, {}
    for kind in ("tree", "path"):
        started = time.perf_counter()
        width, checked, _ = model_min_width(m1, kind)
        timing[kind] = time.perf_counter() - started
        graph_only = min_width_search({s: m1.successors[s] for s in m1.states}, kind)[0]
        search[kind] = {"width": width, "partitions": checked, "graph_only_width": graph_only}
    return {"chains": layers, "min_width": search, "timing": timing}


def suite_bad_vs_good(threads):
    out = {}
    for ints in ([1, 1], [1, 2], [2, 1]):
        chain = mcp_to_chain(pipeline(ints)[2], "robust")
        m, n = chain.dtmc, chain.n
        good = {good_subsystem(chain, "".join(b)) for b in itertools.product("01", repeat=n)}
        min_good = min(subsystem_value(m, s) for s in good)
        max_bad, count = F(0), 0
        for combo in itertools.combinations(m.states, 3 * n + 4):
            if frozenset(combo) in good:
                continue
            count += 1
            max_bad = max(max_bad, subsystem_value(m, combo))
        out[",".join(map(str, ints))] = {"bad": count, "max_bad": q(max_bad), "min_good": q(min_good), "ok": max_bad <= min_good}
    return out


# 8 ---------------------------------------------------------------------

def values_in(m, states, mode):
    return reach_values(induced_subsystem(m, states), mode)


def suite_decomposition(threads):
    rng = random.Random(8)
    split_bad, split_checked = [], 0
    seed = 0
    while split_checked < 100:
        seed += 1
        m = random_mdp(rng.randint(4, 9), seed=30_000 + seed, actions=rng.randint(1, 2))
        p = heuristic_partition(m)
        inner = [b for b in range(len(p.blocks)) if p.children[b]]
        if not inner:
            continue
        b = rng.choice(inner)
        mode = rng.choice(("max", "min"))
        chosen = {s for s in m.states if rng.random() < 0.7}
        below = p.closure(b) - p.blocks[b]
        s2 = chosen & below
        s1 = chosen - s2
        out = block_interfaces(m, p, b).out
        v2 = values_in(m, s2, mode)
        f = {o: v2[o] for o in out}
        s1_ext = s1 | out
        lhs = values_in(m, chosen, mode)
        rhs = assumed_values(m, s1_ext, f, mode, s1_ext)
        split_checked += 1
        if any(lhs[x] != rhs[x] for x in s1_ext):
            split_bad.append(seed)

    rng = random.Random(14)
    props_bad, props_checked = [], 0
    seed = 0
    while props_checked < 100:
        seed += 1
        m = random_mdp(rng.randint(4, 9), seed=40_000 + seed, actions=rng.randint(1, 2))
        chosen = {s for s in m.states if rng.random() < 0.8} | set(m.goal)
        pool = sorted(chosen - m.goal)
        if not pool:
            continue
        dom = set(rng.sample(pool, rng.randint(1, min(3, len(pool)))))
        succ = {s: [t for t in m.successors[s] if t in chosen] for s in chosen if s not in dom}
        # states that cannot reach Goal while avoiding dom
        query = {s for s in chosen - dom if not reachable(succ, [s]) & m.goal}
        hits = {s for s in query if reachable(succ, [s]) & dom}
        if not hits:
            continue
        props_checked += 1

        def rand(hi=F(1)):
            return hi * F(rng.randint(0, 10), 10)

        f1 = {d: rand() for d in dom}
        f2 = {d: f1[d] * rand() for d in dom}
        scale = rand(1 / max(max(f1.values()), F(1, 10)))
        g2 = {d: rand(1 - f1[d]) for d in dom}
        ok = True
        for mode in ("max", "min"):
            def v(f):
                return reach_values(apply_assumption(m, chosen, f), mode)

            a, b, c = v(f1), v(f2), v({d: scale * f1[d] for d in dom})
            ok &= all(a[x] >= b[x] for x in query)
            ok &= all(scale * a[x] == c[x] for x in query)
            if mode == "max":
                s12, s1_, s2_ = v({d: f1[d] + g2[d] for d in dom}), a, v(g2)
                ok &= all(s12[x] <= s1_[x] + s2_[x] for x in query)
        if not ok:
            props_bad.append(seed)
    return {
        "split": {"checked": split_checked, "violations": split_bad},
        "properties": {"checked": props_checked, "violations": props_bad},
    }


# 9 ---------------------------------------------------------------------

def rand_point(rng, d):
    return tuple(F(rng.randint(0, 12), rng.randint(1, 12)) / 12 for _ in range(d))


def suite_domination(threads):
    rng = random.Random(9)
    bullet_bad, sets = [], 0
    for i in range(100):
        d = rng.randint(1, 4)
        k = rng.randint(1, 50)
        iface = tuple(range(d))
        cands, base = [], 0
        for _ in range(k):
            size = rng.randint(1, 5)
            cands.append(PartialSubsystem(0, frozenset(range(base, base + size)), IPoint(iface, rand_point(rng, d))))
            base += size
        kept = remove_dominated(cands, "standard")
        keys = {c.key for c in kept}
        sets += 1

        def dominated(t, by):
            cols = [pt for c in by if c.size <= t.size for pt in project_all(c.value.coords)]
            return bool(cols) and in_convex_hull(t.value.coords, list(dict.fromkeys(cols)))[0]

        ok = all(dominated(t, kept) for t in cands if t.key not in keys)
        ok = ok and not any(dominated(t, [c for c in kept if c.key != t.key]) for t in kept)
        if not ok:
            bullet_bad.append(i)

    rng = random.Random(99)
    proj_bad = []
    for i in range(1000):
        d = rng.randint(1, 3)
        top = rand_point(rng, d)
        if rng.random() < 0.5:
            p = tuple(x * F(rng.randint(0, 6), 6) for x in top)
        else:
            p = rand_point(rng, d)
        if in_convex_hull(p, project_all(top))[0] != pareto_leq(p, top):
            proj_bad.append(i)
    return {
        "remove_dominated": {"sets": sets, "violations": bullet_bad},
        "projections": {"pairs": 1000, "violations": proj_bad},
    }


# 10 --------------------------------------------------------------------

SCALING_LAYERS = list(range(10, 61, 5))
FIT_LAYERS = [x for x in SCALING_LAYERS if x <= 35]
LIMIT = 60.0
SLACK = 1.5


def suite_scaling(threads):
    rows, dp_times = [], {}
    for layers in SCALING_LAYERS:
        m, p = layered_random(layers, 4, 2, seed=layers)
        lam = subsystem_value(m, m.states) / 2
        started = time.perf_counter()
        w = minimal_witness(m, p, SearchConfig(lam=lam, parallelism=threads))
        dp_times[layers] = time.perf_counter() - started
        rows.append({"layers": layers, "states": m.state_count, "lambda": q(lam), "size": w.size})
    # brute force on small layer counts until it first runs out of time,
    # then on the smallest member of the family itself
    brute = []
    for layers in list(range(1, SCALING_LAYERS[0])) + [SCALING_LAYERS[0]]:
        if brute and brute[-1]["size"] is None and layers != SCALING_LAYERS[0]:
            continue
        m, _ = layered_random(layers, 4, 2, seed=layers)
        lam = subsystem_value(m, m.states) / 2
        started = time.perf_counter()
        try:
            size = brute_force_minimal_witness(m, SearchConfig(lam=lam), cap=64, time_limit=LIMIT).size
        except RefusalError:
            size = None
        brute.append({"layers": layers, "states": m.state_count, "size": size, "seconds": time.perf_counter() - started})
    c = max(dp_times[x] / x for x in FIT_LAYERS)
    return {
        "instances": rows,
        "timing": {
            "dp_seconds": {str(k): v for k, v in dp_times.items()},
            "fitted_c": c,
            "within_limit": all(t < LIMIT for t in dp_times.values()),
            "over_linear": [x for x, t in dp_times.items() if t > SLACK * c * x],
            "brute": brute,
        },
    }


SUITES = {
    1: suite_dtmc_oracle,
    2: suite_mdp_oracle,
    3: suite_pruning,
    4: suite_reduction,
    5: suite_good_values,
    6: suite_widths,
    7: suite_bad_vs_good,
    8: suite_decomposition,
    9: suite_domination,
    10: suite_scaling,
}


def suite(k, threads=1):
    if (k, threads) not in _cache:
        _cache[(k, threads)] = SUITES[k](threads)
    return _cache[(k, threads)]


def test_criterion_01_dtmc_oracle(record_property):
    rep = suite(1)
    record_property("summary", f"200 DTMCs, {len(rep['mismatches'])} mismatches, {rep['timing']['seconds']:.0f} s")
    assert rep["mismatches"] == []
    assert len(rep["instances"]) == 200
    assert rep["timing"]["seconds"] < 300


def test_criterion_02_mdp_oracle(record_property):
    rep = suite(2)
    record_property("summary", f"{len(rep['instances'])} MDP runs (max and min), {len(rep['mismatches'])} mismatches")
    assert rep["mismatches"] == []
    assert len(rep["instances"]) == 200


def test_criterion_03_pruning_neutral(record_property):
    rep = suite(3)
    changed = {k: len(v["changed"]) + len(v["mismatches"]) for k, v in rep.items()}
    record_property("summary", f"answers changed per heuristic: {changed}")
    assert all(v == 0 for v in changed.values())


def test_criterion_04_reduction(record_property):
    rep = suite(4)
    record_property("summary", f"{len(rep['lists'])} integer lists, {len(rep['mismatches'])} disagreements")
    assert rep["mismatches"] == []


def test_criterion_05_good_subsystem_values(record_property):
    rep = suite(5)
    record_property("summary", f"{rep['checked']} choices, {len(rep['mismatches'])} inequalities")
    assert rep["mismatches"] == []


def test_criterion_06_widths(record_property):
    rep = suite(6)
    mw = rep["min_width"]
    record_property(
        "summary",
        f"tree {mw['tree']['width']}, path {mw['path']['width']} over {mw['tree']['partitions']} partitions "
        f"({rep['timing']['tree']:.0f} s, {rep['timing']['path']:.0f} s)",
    )
    assert all(c["valid"] and c["width"] == 6 and c["is_path"] for c in rep["chains"])
    for kind in ("tree", "path"):
        assert mw[kind]["width"] == 6
        assert mw[kind]["partitions"] == 115_975
        assert rep["timing"][kind] < 60


def test_criterion_07_bad_below_good(record_property):
    rep = suite(7)
    record_property("summary", ", ".join(f"[{k}] {v['bad']} bad sets ok={v['ok']}" for k, v in rep.items()))
    assert all(v["ok"] for v in rep.values())


def test_criterion_08_decomposition(record_property):
    rep = suite(8)
    record_property(
        "summary",
        f"split {rep['split']['checked']} ({len(rep['split']['violations'])} bad), "
        f"properties {rep['properties']['checked']} ({len(rep['properties']['violations'])} bad)",
    )
    assert rep["split"]["violations"] == [] and rep["split"]["checked"] == 100
    assert rep["properties"]["violations"] == [] and rep["properties"]["checked"] == 100


def test_criterion_09_domination(record_property):
    rep = suite(9)
    record_property(
        "summary",
        f"{len(rep['remove_dominated']['violations'])} bad point sets, {len(rep['projections']['violations'])} bad pairs",
    )
    assert rep["remove_dominated"]["violations"] == []
    assert rep["projections"]["violations"] == []


def test_criterion_10_scaling(record_property):
    rep = suite(10)
    t = rep["timing"]
    first_out = next(b["states"] for b in t["brute"] if b["size"] is None)
    last_done = max((b["states"] for b in t["brute"] if b["size"] is not None), default=0)
    record_property(
        "summary",
        f"max {max(t['dp_seconds'].values()):.1f} s, c={t['fitted_c']:.3f} s/layer, "
        f"over {SLACK}*c*layers at layers {t['over_linear']}; brute force done at "
        f"{last_done} states, over {LIMIT:.0f} s from {first_out} states",
    )
    assert t["within_limit"]
    # the family's smallest member is already out of reach for brute force
    assert t["brute"][-1]["size"] is None
    assert t["over_linear"] == []


def test_criterion_11_determinism(record_property):
    differ = [k for k in SUITES if canonical(suite(k, 1)) != canonical(suite(k, 4))]
    again = canonical(suite_good_values(1)) == canonical(suite(5, 1))
    cli = cli_reports()
    record_property("summary", f"suites differing across threads: {differ}; cli identical: {len(set(cli)) == 1}")
    assert differ == []
    assert again
    assert len(set(cli)) == 1


def cli_reports():
    import tempfile
    from pathlib import Path

    from treewit.io import write_model, write_partition

    m, p = layered_random(8, 4, 2, seed=8)
    lam = q(subsystem_value(m, m.states) / 2)
    out = []
    with tempfile.TemporaryDirectory() as d:
        Path(d, "m.txt").write_text(write_model(m))
        Path(d, "p.txt").write_text(write_partition(p))
        for threads in ("1", "4", "1"):
            proc = subprocess.run(
                [sys.executable, "-m", "treewit.cli", "witness", "--model", str(Path(d, "m.txt")),
                 "--partition", str(Path(d, "p.txt")), "--lambda", lam, "--threads", threads],
                capture_output=True, text=True, check=True,
            )
            rep = json.loads(proc.stdout)
            rep.pop("runtime")
            out.append(canonical(rep))
    return out

