"""Batch command-line front-end.

Subcommands: embed, flow, wp, return-prob, check-exclusive, curves, gamma,
ball, dirichlet, selftest, manifest.  Every subcommand has a --json mode with
a versioned schema tag; plain output is CSV or short text.  Outputs carry no
timestamps, so identical invocations produce byte-identical artifacts.

Exit codes: 0 ok, 1 failed selftest, 2 argument/parse error, 3 budget
exhausted.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import acceptance
from .exclusive import ExclusiveCandidate, ExclusiveError, check_exclusive
from .fox import flow_of_word, magnus_embed
from .groups import BallBudgetExceeded, GroupError, MarkedGroup, parse_group_spec
from .measures import (
    ConvolutionBudgetError,
    MeasureError,
    MeasureSpec,
    lazy_law,
    make_generator_power_measure,
    make_lazy_srw,
    make_phi_lower_measure,
    make_power_law,
    mc_return_probability,
    return_probability_exact,
    uniform_pm_one,
)
from .profiles import (
    ProfileError,
    ProfileSpec,
    ball_vertices,
    box_vertices,
    dirichlet_lambda1,
    gamma_log,
    iterated_exp_volume,
    phi_profile,
    polynomial_volume,
    stretched_exp_volume,
    wreath_volume,
)
from .words import WordError, parse_word


class CliError(Exception):
    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


def _parse_law(text: str):
    if text == "lazy":
        return lazy_law()
    if text == "pm1":
        return uniform_pm_one()
    if text.startswith("plaw:"):
        parts = text.split(":")
        alpha = float(parts[1])
        cutoff = int(parts[2]) if len(parts) > 2 else 10_000
        return make_power_law(alpha, cutoff)
    raise CliError(f"unknown law {text!r} (use lazy | pm1 | plaw:alpha[:cutoff])")


def parse_measure_spec(text: str, group: MarkedGroup) -> MeasureSpec:
    """lazy | genpow:law,law,... | phi:law,law,...  (phi builds the measure
    on Z^r wr group from per-generator laws)."""
    if text == "lazy":
        return make_lazy_srw(group)
    if text.startswith("genpow:"):
        laws = [_parse_law(t) for t in text.split(":", 1)[1].split(",")]
        return make_generator_power_measure(group, laws)
    if text.startswith("phi:"):
        laws = [_parse_law(t) for t in text.split(":", 1)[1].split(",")]
        return make_phi_lower_measure(laws, group)
    raise CliError(f"unknown measure {text!r}")


def _parse_volume(text: str):
    if text.startswith("poly:"):
        return polynomial_volume(float(text.split(":")[1]))
    if text.startswith("wreath-poly:"):
        parts = text.split(":")
        D = float(parts[1])
        C = float(parts[2]) if len(parts) > 2 else 1.0
        return wreath_volume(polynomial_volume(D), C)
    if text.startswith("stretched:"):
        return stretched_exp_volume(float(text.split(":")[1]))
    if text.startswith("iterexp:"):
        return iterated_exp_volume(int(text.split(":")[1]))
    raise CliError(f"unknown volume {text!r}")


def _parse_grid(text: str) -> list[float]:
    # a:b:steps, geometric
    try:
        a, b, steps = text.split(":")
        return list(np.geomspace(float(a), float(b), int(steps)))
    except ValueError as exc:
        raise CliError(f"bad grid {text!r}, want a:b:steps") from exc


def _emit_json(payload: dict):
    print(json.dumps(payload, sort_keys=True, separators=(",", ":")))


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


# -- subcommand implementations -------------------------------------------------


def cmd_embed(args) -> int:
    G = parse_group_spec(args.group)
    w = parse_word(args.word, G.rank)
    psi = magnus_embed(w, G)
    entries = sorted(
        ([G.canonical_obj(x), list(vec)] for x, vec in psi.a.entries.items()),
        key=lambda kv: json.dumps(kv[0]),
    )
    payload = {
        "schema": "wreathwalk.embed/1",
        "group": G.name,
        "word": str(w),
        "a": [{"key": k, "vector": v} for k, v in entries],
        "base": G.canonical_obj(psi.base),
    }
    if args.json:
        _emit_json(payload)
    else:
        print("base:", json.dumps(payload["base"]))
        for item in payload["a"]:
            print(json.dumps(item["key"]), item["vector"])
    return 0


def cmd_flow(args) -> int:
    G = parse_group_spec(args.group)
    w = parse_word(args.word, G.rank)
    f = flow_of_word(w, G)
    edges = sorted(
        ({"vertex": G.canonical_obj(x), "gen": i, "value": c} for (x, i), c in f.edges.items()),
        key=lambda e: (json.dumps(e["vertex"]), e["gen"]),
    )
    payload = {
        "schema": "wreathwalk.flow/1",
        "group": G.name,
        "word": str(w),
        "edges": edges,
        "circulation": f.is_circulation(),
    }
    if args.json:
        _emit_json(payload)
    else:
        print("circulation:", payload["circulation"])
        for e in edges:
            print(json.dumps(e["vertex"]), f"s{e['gen']}", e["value"])
    return 0


def cmd_wp(args) -> int:
    G = parse_group_spec(args.group)
    u = parse_word(args.u, G.rank)
    v = parse_word(args.v, G.rank)
    equal = flow_of_word(u, G) == flow_of_word(v, G)
    if args.json:
        _emit_json({"schema": "wreathwalk.wp/1", "group": G.name, "equal": equal})
    else:
        print("EQUAL" if equal else "DISTINCT")
    return 0


def cmd_return_prob(args) -> int:
    G = parse_group_spec(args.group)
    spec = parse_measure_spec(args.measure, G)
    ns = list(range(1, args.n + 1)) if args.sweep else [args.n]
    rows = []
    for n in ns:
        exact = estimate = ci_lo = ci_hi = trials = seed = ""
        if args.exact:
            value = return_probability_exact(spec, n, support_budget=args.support_budget)
            exact = _fmt(value)
        else:
            est = mc_return_probability(spec, n, args.trials, args.seed, workers=args.workers)
            estimate, ci_lo, ci_hi = _fmt(est.estimate), _fmt(est.ci_lo), _fmt(est.ci_hi)
            trials, seed = str(est.trials), str(est.seed)
        rows.append({"n": n, "exact": exact, "estimate": estimate, "ci_lo": ci_lo, "ci_hi": ci_hi, "trials": trials, "seed": seed})
    if args.json:
        _emit_json({"schema": "wreathwalk.return-prob/1", "group": G.name, "measure": args.measure, "rows": rows})
    else:
        print("n,exact,estimate,ci_lo,ci_hi,trials,seed")
        for r in rows:
            print(f"{r['n']},{r['exact']},{r['estimate']},{r['ci_lo']},{r['ci_hi']},{r['trials']},{r['seed']}")
    return 0


def cmd_check_exclusive(args) -> int:
    G = parse_group_spec(args.group)
    gamma = [parse_word(w, G.rank) for w in args.gamma.split(";") if w.strip()]
    rho = parse_word(args.rho, G.rank)
    membership = (lambda x: True) if args.membership == "all" else G.membership(args.membership)
    cand = ExclusiveCandidate(G, gamma, rho, args.split_at, membership, radius=args.radius)
    moduli = [int(x) for x in args.m.split(",")] if args.m else None
    rep = check_exclusive(cand, tm_moduli=moduli)
    payload = {
        "schema": "wreathwalk.check-exclusive/1",
        "group": G.name,
        "rho": str(rho),
        "split_at": args.split_at,
        "condition1": rep.condition1,
        "condition2": rep.condition2,
        "condition2_witness": None if rep.condition2_witness is None else G.canonical_obj(rep.condition2_witness),
        "condition3": rep.condition3,
        "condition3_method": rep.condition3_method,
        "condition3_witness": None if rep.condition3_witness is None else str(rep.condition3_witness),
        "all_true": rep.all_true,
    }
    _emit_json(payload)
    return 0


def _emit_gnuplot(title: str, columns: tuple[str, str], rows) -> None:
    # data-only plotting: a self-contained gnuplot script with inline data
    print(f'set title "{title}"')
    print("set logscale xy")
    print(f'set xlabel "{columns[0]}"; set ylabel "{columns[1]}"')
    print("$data << EOD")
    for x, y in rows:
        print(f"{_fmt(x)} {_fmt(y)}")
    print("EOD")
    print('plot $data using 1:2 with linespoints title ""')


def cmd_curves(args) -> int:
    params = {}
    if args.params:
        for kv in args.params.split(","):
            key, val = kv.split("=")
            params[key] = float(val) if "." in val or "e" in val else int(val)
    spec = ProfileSpec(args.family, params)
    rows = [(n, *phi_profile(spec, n)) for n in _parse_grid(args.n_grid)]
    if args.json:
        _emit_json({
            "schema": "wreathwalk.curves/1",
            "family": args.family,
            "params": params,
            "rows": [{"n": _fmt(n), "exponent": _fmt(e), "value": _fmt(v)} for n, e, v in rows],
        })
    elif args.gnuplot:
        _emit_gnuplot(f"{args.family} exponent", ("n", "exponent"), [(n, e) for n, e, _ in rows])
    else:
        print("n,exponent,value")
        for n, e, v in rows:
            print(f"{_fmt(n)},{_fmt(e)},{_fmt(v)}")
    return 0


def cmd_gamma(args) -> int:
    V = _parse_volume(args.volume)
    rows = []
    for t in _parse_grid(args.t_grid):
        lg = gamma_log(V, t)
        rows.append((t, math.exp(lg) if lg < 700 else math.inf, lg))
    if args.json:
        _emit_json({
            "schema": "wreathwalk.gamma/1",
            "volume": V.tag,
            "rows": [{"t": _fmt(t), "gamma": _fmt(g), "log_gamma": _fmt(lg)} for t, g, lg in rows],
        })
    elif args.gnuplot:
        _emit_gnuplot(f"gamma for {V.tag}", ("t", "log_gamma"), [(t, lg) for t, _, lg in rows])
    else:
        print("t,gamma,log_gamma")
        for t, g, lg in rows:
            print(f"{_fmt(t)},{_fmt(g)},{_fmt(lg)}")
    return 0


def cmd_ball(args) -> int:
    G = parse_group_spec(args.group)
    levels = G.ball(args.radius, budget=args.budget)
    if args.json:
        _emit_json({
            "schema": "wreathwalk.ball/1",
            "group": G.name,
            "levels": [{"radius": r, "size": s} for r, s, _ in levels],
        })
    else:
        print("radius,size")
        for r, s, _ in levels:
            print(f"{r},{s}")
    return 0


def cmd_dirichlet(args) -> int:
    G = parse_group_spec(args.group)
    spec = parse_measure_spec(args.measure, G)
    kind, _, param = args.omega.partition(":")
    if kind == "box":
        vertices = box_vertices(G, int(param))
    elif kind == "ball":
        vertices = ball_vertices(G, int(param))
    else:
        raise CliError(f"unknown omega {args.omega!r} (use box:k or ball:R)")
    lam, bound = dirichlet_lambda1(spec, vertices)
    if args.json:
        _emit_json({
            "schema": "wreathwalk.dirichlet/1",
            "group": G.name,
            "omega": args.omega,
            "size": len(vertices),
            "lambda1": lam,
            "test_function_bound": bound,
        })
    else:
        print(f"lambda1,{_fmt(lam)}")
        print(f"test_function_bound,{_fmt(bound)}")
    return 0


def cmd_selftest(args) -> int:
    numbers = [int(x) for x in args.criteria.split(",")] if args.criteria else None
    results = acceptance.run_all(numbers)
    failed = sum(0 if res.passed else 1 for res in results)
    if args.json:
        _emit_json({
            "schema": "wreathwalk.selftest/1",
            "passed": failed == 0,
            "criteria": [
                {"number": r.number, "name": r.name, "passed": r.passed, "detail": r.detail}
                for r in results
            ],
        })
    else:
        for res in results:
            status = "PASS" if res.passed else "FAIL"
            print(f"{status} {res.number:2d} {res.name:<24s} [{res.seconds:6.1f}s] {res.detail}")
        print(f"{len(results) - failed}/{len(results)} criteria passed")
    return 0 if failed == 0 else 1


def cmd_manifest(args) -> int:
    with open(args.path) as fh:
        manifest = json.load(fh)
    jobs = manifest.get("jobs")
    if not isinstance(jobs, list):
        raise CliError("manifest must contain a 'jobs' list")
    worst = 0
    for job in jobs:
        argv = job.get("argv")
        if not isinstance(argv, list):
            raise CliError("each job needs an 'argv' list")
        buffer = io.StringIO()
        with contextlib.redirect_stdout(buffer):
            code = run(argv)
        output = job.get("output")
        if output:
            with open(output, "w") as out:
                out.write(buffer.getvalue())
        else:
            sys.stdout.write(buffer.getvalue())
        worst = max(worst, code)
    return worst


# -- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wreathwalk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--json", action="store_true", help="emit versioned JSON")
        return p

    p = add("embed", cmd_embed, help="Magnus embedding of a word")
    p.add_argument("--group", required=True)
    p.add_argument("--word", required=True)

    p = add("flow", cmd_flow, help="edge flow of a word on the marked Cayley graph")
    p.add_argument("--group", required=True)
    p.add_argument("--word", required=True)

    p = add("wp", cmd_wp, help="word problem in F_r/[N,N]")
    p.add_argument("--group", required=True)
    p.add_argument("--u", required=True)
    p.add_argument("--v", required=True)

    p = add("return-prob", cmd_return_prob, help="return probability, exact or Monte Carlo")
    p.add_argument("--group", required=True)
    p.add_argument("--measure", required=True)
    p.add_argument("--n", type=int, required=True)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--mc", action="store_true")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--sweep", action="store_true", help="emit rows for every n up to --n")
    p.add_argument("--support-budget", type=int, default=2_000_000)

    p = add("check-exclusive", cmd_check_exclusive, help="verify an exclusive-pair candidate")
    p.add_argument("--group", required=True)
    p.add_argument("--gamma", required=True, help="semicolon-separated generator words")
    p.add_argument("--rho", required=True)
    p.add_argument("--split-at", type=int, required=True)
    p.add_argument("--m", default=None, help="comma-separated moduli for the T_m criterion")
    p.add_argument("--membership", default="all")
    p.add_argument("--radius", type=int, default=3)

    p = add("curves", cmd_curves, help="evaluate a return-probability profile")
    p.add_argument("--family", required=True)
    p.add_argument("--params", default="")
    p.add_argument("--n-grid", required=True, help="a:b:steps (geometric)")
    p.add_argument("--gnuplot", action="store_true", help="emit a gnuplot script instead of CSV")

    p = add("gamma", cmd_gamma, help="solve the volume-to-gamma integral equation")
    p.add_argument("--volume", required=True)
    p.add_argument("--t-grid", required=True, help="a:b:steps (geometric)")
    p.add_argument("--gnuplot", action="store_true", help="emit a gnuplot script instead of CSV")

    p = add("ball", cmd_ball, help="breadth-first ball sizes")
    p.add_argument("--group", required=True)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--budget", type=int, default=200_000)

    p = add("dirichlet", cmd_dirichlet, help="lowest Dirichlet eigenvalue on a finite set")
    p.add_argument("--group", required=True)
    p.add_argument("--measure", default="lazy")
    p.add_argument("--omega", required=True, help="box:k or ball:R")

    p = add("selftest", cmd_selftest, help="run the acceptance criteria")
    p.add_argument("--criteria", default=None, help="comma-separated criterion numbers")

    p = add("manifest", cmd_manifest, help="run a JSON manifest of jobs")
    p.add_argument("path")

    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (BallBudgetExceeded, ConvolutionBudgetError) as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return 3
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (WordError, GroupError, MeasureError, ExclusiveError, ProfileError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
