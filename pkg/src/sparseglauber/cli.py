"""Command-line front end: generation, sampling, verification, analysis,
oracle queries and benchmarking, each emitting a JSON report with an
embedded run manifest.

Exit codes: 0 success, 1 check/assertion failure, 2 usage or parameter
error (also: inconclusive verification), 3 resource cap hit
(enumeration overflow / component too complex).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .analysis import (
    VerifyConfig,
    contraction_check,
    contraction_context,
    influence_matrix,
    lambda1,
    pairwise_influence,
    spectral_independence_scan,
    verify_graph,
)
from .errors import (
    ComponentTooComplexError,
    DegenerateInstanceError,
    EmptySupportError,
    EnumerationOverflowError,
    InvalidParameterError,
    NumericFailureError,
)
from .dynamics import make_schedule, sample
from .graphs import Graph, generate_gnp, read_edge_list, to_edge_list_text, write_edge_list
from .models import Configuration, ModelSpec, Pinning
from .oracle import empirical_distribution, exact_distribution, exact_marginal, tv_distance
from .rng import RNG_TAG
from .trees import branching_value, saw_tree

_MODEL_FLAGS = {"hardcore", "ising", "matchings"}


def _parse_param(text: str):
    """Model parameter: ints and p/q fractions stay exact (the oracle then
    uses rational arithmetic); anything else becomes a float."""
    from fractions import Fraction

    try:
        return int(text)
    except ValueError:
        pass
    if "/" in text:
        try:
            return Fraction(text)
        except ValueError:
            pass
    return float(text)


def _manifest(command: str, args: argparse.Namespace, graph: Graph | None,
              timings: dict) -> dict:
    flags = {k: v for k, v in sorted(vars(args).items())
             if k not in ("func",) and v is not None}
    return {
        "command": command,
        "flags": flags,
        "seed": getattr(args, "seed", None),
        "graph_hash": graph.content_hash() if graph is not None else None,
        "tool_version": __version__,
        "rng": RNG_TAG,
        "timings": {k: round(v, 6) for k, v in timings.items()},
    }


def _emit(report: dict, args) -> None:
    text = json.dumps(report, indent=2, sort_keys=True, default=str)
    out = getattr(args, "json_out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)


def _load_graph(args) -> Graph:
    return read_edge_list(args.graph)


def _model(args) -> ModelSpec:
    return ModelSpec(args.model, args.param)


def _pinning(args) -> Pinning | None:
    pins = getattr(args, "pin", None)
    if not pins:
        return None
    spins = {}
    for item in pins:
        site, _, spin = item.partition("=")
        spins[int(site)] = int(spin)
    return Pinning(spins)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    t0 = time.perf_counter()
    g = generate_gnp(args.n, args.d, args.seed)
    gen_time = time.perf_counter() - t0
    if args.out:
        write_edge_list(g, args.out)
    else:
        sys.stdout.write(to_edge_list_text(g))
    report = {
        "n": g.n,
        "edges": len(g.edges),
        "manifest": _manifest("gen", args, g, {"generate": gen_time}),
    }
    if args.out:
        _emit(report, args)
    return 0


def cmd_sample(args) -> int:
    g = _load_graph(args)
    m = _model(args)
    D = args.D if args.D is not None else 20.0 * max(1.0, g.mean_degree())
    warnings = []
    T_override = args.T
    if T_override is not None and T_override < 1:
        warnings.append(f"T={T_override} clamped to 1")
        T_override = 1
    sched = make_schedule(g.n, theta=args.theta, eps=args.eps,
                          T_override=T_override)
    runs = args.runs
    t0 = time.perf_counter()
    configs = [sample(g, m, D, sched, seed=args.seed + i) for i in range(runs)]
    sample_time = time.perf_counter() - t0
    manifest = _manifest("sample", args, g, {"sample": sample_time})
    manifest["schedule"] = {"theta": sched.theta, "eps": sched.eps,
                            "T": sched.T, "derived": sched.derived}
    if warnings:
        manifest["warnings"] = warnings
    if args.out == "spins":
        blocks = ["\n".join(str(s) for s in c.values) for c in configs]
        text = ("\n\n").join(blocks) + "\n"
        if args.out_file:
            with open(args.out_file, "w", encoding="ascii") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    report = {
        "model": m.kind,
        "param": float(m.param),
        "D": D,
        "sites": "vertex" if m.vertex_model else "edge",
        "runs": [list(c.values) for c in configs],
        "manifest": manifest,
    }
    _emit(report, args)
    return 0


def cmd_verify(args) -> int:
    g = _load_graph(args)
    cfg = VerifyConfig(d=args.d, eps=args.eps, delta=args.delta, D=args.D,
                       ell=args.ell, M=args.M,
                       enumeration_cap=args.enum_cap)
    t0 = time.perf_counter()
    rep = verify_graph(g, args.d, cfg)
    elapsed = time.perf_counter() - t0
    report = {
        "passed": rep.passed,
        "inconclusive": rep.inconclusive,
        "checks": [
            {"name": c.name, "passed": c.passed, "inconclusive": c.inconclusive,
             "witness": c.witness, "stats": c.stats}
            for c in rep.checks
        ],
        "manifest": _manifest("verify", args, g, {"verify": elapsed}),
    }
    _emit(report, args)
    if rep.inconclusive:
        return 2
    return 0 if rep.passed else 1


def cmd_analyze(args) -> int:
    g = _load_graph(args) if args.graph else None
    t0 = time.perf_counter()
    if args.what == "branching":
        verts = range(g.n) if args.vertex is None else [args.vertex]
        rows = {}
        for v in verts:
            prof = branching_value(g, v, args.d, args.len_cap, args.count_cap)
            rows[v] = {"S": prof.value, "tail_bound": prof.tail_bound,
                       "path_counts": list(prof.path_counts)}
        body = {"branching": rows, "d": args.d}
    elif args.what == "sawtree":
        t = saw_tree(g, args.root, args.depth_cap)
        body = {"root": args.root, "size": t.size, "depth": t.depth,
                "terminals": t.terminal_count}
    elif args.what == "influence":
        m = _model(args)
        if args.u is not None and args.v is not None:
            body = {"influence": pairwise_influence(g, m, _pinning(args),
                                                    args.u, args.v)}
        else:
            im = influence_matrix(g, m, _pinning(args))
            body = {"dim": im.dim, "lambda1": lambda1(im),
                    "max_abs_row_sum": im.max_abs_row_sum()}
    elif args.what == "spectral":
        m = _model(args)
        eta, worst, count = spectral_independence_scan(
            g, m, pinning_budget=args.budget, seed=args.seed)
        body = {"eta_observed": eta, "worst_pinning": worst,
                "conditionings": count}
    elif args.what == "contraction":
        ctx = contraction_context(args.model, args.d, args.param)
        top, ok = contraction_check(ctx, args.trials, args.kmax, seed=args.seed)
        body = {"chi": ctx.chi, "a": ctx.a, "in_regime": ctx.in_regime,
                "max_statistic": top, "passed": ok}
    else:  # pragma: no cover
        raise InvalidParameterError(f"unknown analysis {args.what!r}")
    report = dict(body)
    report["manifest"] = _manifest(f"analyze {args.what}", args, g,
                                   {"analyze": time.perf_counter() - t0})
    _emit(report, args)
    if args.what == "contraction" and not body["passed"]:
        return 1
    return 0


def cmd_oracle(args) -> int:
    g = _load_graph(args)
    m = _model(args)
    pins = _pinning(args)
    t0 = time.perf_counter()
    if args.what == "z":
        dist = exact_distribution(g, m, pins)
        body = {"Z": float(dist.Z), "Z_exact": str(dist.Z),
                "support": len(dist.outcomes)}
    elif args.what == "marginal":
        body = {"site": args.site,
                "marginal": float(exact_marginal(g, m, pins, args.site))}
    elif args.what == "dist":
        dist = exact_distribution(g, m, pins)
        body = {
            "Z": float(dist.Z),
            "outcomes": ["".join(map(str, o)) for o in dist.outcomes],
            "probabilities": [float(p) for p in dist.probabilities],
        }
    elif args.what == "tv":
        dist = exact_distribution(g, m, pins)
        counts = {}
        with open(args.samples, "r", encoding="ascii") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    key = tuple(int(c) for c in line)
                    counts[key] = counts.get(key, 0) + 1
        emp = empirical_distribution(counts)
        body = {"tv": tv_distance(emp, dist), "samples": sum(counts.values())}
    else:  # pragma: no cover
        raise InvalidParameterError(f"unknown oracle query {args.what!r}")
    report = dict(body)
    report["manifest"] = _manifest(f"oracle {args.what}", args, g,
                                   {"oracle": time.perf_counter() - t0})
    _emit(report, args)
    return 0


def cmd_bench(args) -> int:
    m = _model(args)
    rungs = []
    for k, n in enumerate(args.sizes):
        t0 = time.perf_counter()
        g = generate_gnp(n, args.d, seed=args.seed + k)
        t1 = time.perf_counter()
        sched = make_schedule(n, theta=args.theta, eps=args.eps)
        D = 20.0 * max(1.0, args.d)
        from .dynamics import SamplerContext, _run_chain

        ctx = SamplerContext(g, m, D)
        t2 = time.perf_counter()
        values = _run_chain(ctx, args.seed + k, sched.T)
        t3 = time.perf_counter()
        ctx.finalize(values, args.seed + k)
        t4 = time.perf_counter()
        rungs.append({
            "n": n, "T": sched.T, "edges": len(g.edges),
            "generate_s": t1 - t0, "setup_s": t2 - t1,
            "main_loop_s": t3 - t2, "finalize_s": t4 - t3,
            "total_s": t4 - t0,
        })
    totals = [r["total_s"] for r in rungs]
    ratios = [totals[i + 1] / totals[i] for i in range(len(totals) - 1)]
    logs_n = [math.log(r["n"]) for r in rungs]
    logs_t = [math.log(t) for t in totals]
    if len(rungs) > 1:
        exponent = float(np.polyfit(logs_n, logs_t, 1)[0])
    else:
        exponent = float("nan")
    report = {
        "rungs": rungs,
        "doubling_ratios": ratios,
        "fitted_exponent": exponent,
        "manifest": _manifest("bench", args, None,
                              {"total": sum(totals)}),
    }
    _emit(report, args)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sparseglauber",
        description="Glauber-dynamics sampling and analysis on sparse graphs")
    p.add_argument("--threads", type=int, default=1,
                   help="reserved; runs are single-process and deterministic")
    sub = p.add_subparsers(dest="cmd", required=True)

    def add_common(sp, graph=True, model=False, seed=True):
        if graph:
            sp.add_argument("--graph", required=True, help="edge-list file")
        if model:
            sp.add_argument("--model", choices=sorted(_MODEL_FLAGS), required=True)
            sp.add_argument("--param", type=_parse_param, required=True)
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--json-out", dest="json_out", help="also write JSON here")

    sp = sub.add_parser("gen", help="generate a sparse random graph")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="output edge-list file (default stdout)")
    sp.add_argument("--json-out", dest="json_out")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("sample", help="run the sampler")
    add_common(sp, model=True)
    sp.add_argument("--D", type=float, help="degree threshold (default 20 max(1, mean degree))")
    sp.add_argument("--theta", type=float, default=1.0)
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--T", type=int, help="override the step count")
    sp.add_argument("--runs", type=int, default=1)
    sp.add_argument("--out", choices=("json", "spins"), default="json")
    sp.add_argument("--out-file", dest="out_file")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("verify", help="check the sparse-graph properties")
    add_common(sp, seed=False)
    sp.add_argument("--d", type=float, required=True)
    sp.add_argument("--eps", type=float, default=1.0)
    sp.add_argument("--delta", type=float, default=0.5)
    sp.add_argument("--D", type=float)
    sp.add_argument("--ell", type=int, default=6)
    sp.add_argument("--M", type=float)
    sp.add_argument("--enum-cap", dest="enum_cap", type=int, default=2_000_000)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("analyze", help="analysis utilities")
    spa = sp.add_subparsers(dest="what", required=True)

    a = spa.add_parser("branching")
    add_common(a)
    a.add_argument("--d", type=float, required=True)
    a.add_argument("--vertex", type=int)
    a.add_argument("--len-cap", dest="len_cap", type=int)
    a.add_argument("--count-cap", dest="count_cap", type=int, default=1_000_000)
    a.set_defaults(func=cmd_analyze)

    a = spa.add_parser("sawtree")
    add_common(a)
    a.add_argument("--root", type=int, required=True)
    a.add_argument("--depth-cap", dest="depth_cap", type=int, required=True)
    a.set_defaults(func=cmd_analyze)

    a = spa.add_parser("influence")
    add_common(a, model=True)
    a.add_argument("--u", type=int)
    a.add_argument("--v", type=int)
    a.add_argument("--pin", action="append", help="site=spin, repeatable")
    a.set_defaults(func=cmd_analyze)

    a = spa.add_parser("spectral")
    add_common(a, model=True)
    a.add_argument("--budget", type=int, default=100_000)
    a.set_defaults(func=cmd_analyze)

    a = spa.add_parser("contraction")
    a.add_argument("--model", choices=("hardcore", "matchings"), required=True)
    a.add_argument("--d", type=float, required=True)
    a.add_argument("--param", type=_parse_param, required=True)
    a.add_argument("--trials", type=int, default=10_000)
    a.add_argument("--kmax", type=int, default=10)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--json-out", dest="json_out")
    a.set_defaults(func=cmd_analyze, graph=None)

    sp = sub.add_parser("oracle", help="exact desk-scale queries")
    spo = sp.add_subparsers(dest="what", required=True)
    for what in ("z", "marginal", "dist", "tv"):
        o = spo.add_parser(what)
        add_common(o, model=True, seed=False)
        o.add_argument("--pin", action="append", help="site=spin, repeatable")
        if what == "marginal":
            o.add_argument("--site", type=int, required=True)
        if what == "tv":
            o.add_argument("--samples", required=True,
                           help="file of sampled configurations, one per line")
        o.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("bench", help="timing ladder for the sampler")
    sp.add_argument("--model", choices=sorted(_MODEL_FLAGS), default="hardcore")
    sp.add_argument("--param", type=_parse_param, default=0.5)
    sp.add_argument("--d", type=float, default=2.0)
    sp.add_argument("--sizes", type=int, nargs="+",
                    default=[100_000, 200_000, 400_000])
    sp.add_argument("--theta", type=float, default=0.1)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--json-out", dest="json_out")
    sp.set_defaults(func=cmd_bench)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (InvalidParameterError, DegenerateInstanceError, EmptySupportError,
            FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EnumerationOverflowError, ComponentTooComplexError) as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 3
    except NumericFailureError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
