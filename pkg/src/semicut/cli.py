"""Command-line front end: instance generation, the cut pipelines,
recovery, checks, and a seeded bench runner emitting JSON + CSV."""

from __future__ import annotations

import argparse
import csv
import io
import json
import statistics
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .expander import planted_expander_balanced_cut, planted_expander_sse
from .graphs import Graph, Partition
from .instances import (
    AdversaryStrategy,
    PlantedInstance,
    generate_multicut_demands,
    generate_planted_expander,
    generate_sr,
)
from .pipelines import balanced_cut, multicut, sparsest_cut, sse
from .recover import purify, recovery_error
from .sparsify import sparsify
from .util import substream
from .verify import (
    brute_force_balanced_cut,
    brute_force_multicut,
    brute_force_sse,
    fuzz_geometric_expansion,
    geometric_expansion_check,
    invariant_audit,
)

PROBLEMS = ("balanced-cut", "multicut", "sse", "sparsest-cut")


def _write_json(path: str, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def _load_instance(path: str) -> PlantedInstance:
    try:
        text = Path(path).read_text()
        return PlantedInstance.from_json(text)
    except (OSError, ValueError, KeyError, AssertionError, json.JSONDecodeError) as exc:
        raise SystemExit(f"error: cannot load instance {path}: {exc}")


def _adversary_from_args(args) -> AdversaryStrategy:
    return AdversaryStrategy(
        inside=args.adversary,
        inside_prob=args.inside_prob,
        inside_degree=args.inside_degree,
        cross_deletion=args.deletion,
    )


def cmd_generate(args) -> int:
    if args.model == "sr":
        if not (0.0 < args.eps < 1.0):
            raise SystemExit("error: --eps must lie in (0, 1)")
        side = int(round(args.rho * args.n))
        if not (0 < side < args.n):
            raise SystemExit("error: --rho gives an empty side")
        P = Partition(args.n, [range(side), range(side, args.n)])
        inst = generate_sr(P, args.eps, _adversary_from_args(args), seed=args.seed)
    else:
        inst = generate_planted_expander(
            args.n, args.rho, args.inside_degree, args.cross, seed=args.seed
        )
    Path(args.out).write_text(inst.to_json() + "\n")
    print(f"wrote {args.out}: n={inst.graph.n} m={inst.graph.m} sr-cost={inst.sr_cost():.1f}")
    return 0


def _cut_payload(result, inst: PlantedInstance) -> dict:
    side = result.side
    if isinstance(side, Partition):
        side_payload = [list(p) for p in side.parts]
    else:
        side_payload = sorted(side)
    return {
        "boundary_cost": result.boundary_cost,
        "side": side_payload,
        "diagnostics": _plain(result.diagnostics),
        "sr_cost": inst.sr_cost(),
    }


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [_plain(v) for v in sorted(obj) if not isinstance(obj, (list, tuple))] if isinstance(obj, (set, frozenset)) else [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    return str(obj)


def _run_problem(problem: str, inst: PlantedInstance, args, seed: int):
    rng = substream(seed, f"cli.{problem}")
    if problem == "balanced-cut":
        return balanced_cut(inst.graph, args.D, rng, reference=inst, solve_seed=seed)
    if problem == "multicut":
        dem = generate_multicut_demands(inst, args.demands, seed=seed + 1)
        return multicut(inst.graph, list(dem), args.D, rng, reference=inst, solve_seed=seed)
    if problem == "sse":
        return sse(inst.graph, args.rho, args.D, rng, reference=inst, solve_seed=seed)
    if problem == "sparsest-cut":
        return sparsest_cut(inst.graph, range(inst.graph.n), D=args.D, rng=rng)
    raise SystemExit(f"error: unknown problem {problem}")


def cmd_solve(args) -> int:
    inst = _load_instance(args.infile)
    result = _run_problem(args.problem, inst, args, args.seed)
    payload = _cut_payload(result, inst)
    payload["problem"] = args.problem
    payload["seed"] = args.seed
    if inst.sr_cost() > 0:
        payload["ratio_vs_sr_cost"] = result.boundary_cost / inst.sr_cost()
    _write_json(args.report, payload)
    print(f"{args.problem}: boundary={result.boundary_cost} report={args.report}")
    return 0


def cmd_recover(args) -> int:
    inst = _load_instance(args.infile)
    rng = substream(args.seed, "cli.recover")
    X, Y, state = purify(inst.graph, args.eps, args.eta, args.csc, rng)
    payload = {
        "X": sorted(X),
        "f_value": state.f_value,
        "steps": state.steps,
        "trace": [
            {"step": m.step, "moved": m.moved, "size": m.size, "gain": m.gain, "f_after": m.f_after}
            for m in state.trace
        ],
        "seed": args.seed,
    }
    if inst.hidden.n_parts == 2:
        S = inst.hidden.parts[0]
        payload["error"] = recovery_error(X, S, inst.graph.n)
    _write_json(args.report, payload)
    print(f"recover: steps={state.steps} error={payload.get('error', 'n/a')} report={args.report}")
    return 0


def cmd_expander_solve(args) -> int:
    inst = _load_instance(args.infile)
    hidden = inst.hidden.parts[0] if inst.hidden.n_parts == 2 else None
    if args.problem == "balanced-cut":
        result = planted_expander_balanced_cut(inst.graph, hidden_side=hidden, seed=args.seed)
    else:
        result = planted_expander_sse(inst.graph, args.rho, hidden_side=hidden, seed=args.seed)
    payload = _cut_payload(result, inst)
    payload["problem"] = f"expander-{args.problem}"
    _write_json(args.report, payload)
    print(f"expander-{args.problem}: boundary={result.boundary_cost} report={args.report}")
    return 0


def cmd_check(args) -> int:
    inst = _load_instance(args.infile)
    rng = substream(args.seed, "cli.check")
    if args.what == "invariants":
        out = sparsify(
            inst.graph,
            args.model,
            args.D,
            rng,
            rho=args.rho if args.model == "sse" else None,
            demands=list(generate_multicut_demands(inst, args.demands, seed=args.seed + 1))
            if args.model == "multicut"
            else None,
            solve_seed=args.seed,
        )
        rep = invariant_audit(out, inst.graph, args.model)
        payload = {"what": "invariants", "passed": rep.passed, "report": rep.to_dict()}
    elif args.what == "geo-expansion":
        out = sparsify(inst.graph, "balanced-cut", args.D, rng, solve_seed=args.seed)
        X = max(inst.sr_cost(), inst.graph.n * args.D * (np.log2(args.D) ** 2))
        cut_edges_hidden = [
            e for e in inst.graph.edges if inst.hidden.part_of(e[0]) != inst.hidden.part_of(e[1])
        ]
        results = []
        for it in out.trace:
            res = geometric_expansion_check(cut_edges_hidden, it.phi, it.m_after, it.delta, X)
            results.append({"t": it.t, "delta": it.delta, "status": res.status, "short": res.short_count, "bound": res.bound})
        fuzz = fuzz_geometric_expansion(cut_edges_hidden, inst.graph.n, 0.25, X, seed=args.seed)
        payload = {
            "what": "geo-expansion",
            "passed": all(r["status"] != "violation" for r in results),
            "scales": results,
            "fuzzer_found_violation": fuzz is not None,
        }
    else:  # oracle
        g = inst.graph
        payload = {"what": "oracle", "n": g.n}
        if g.n <= 20 and g.n % 2 == 0:
            _, cost = brute_force_balanced_cut(g)
            payload["balanced_cut_opt"] = cost
        if g.n <= 20:
            size = max(1, g.n // 4)
            _, cost = brute_force_sse(g, size / g.n)
            payload["sse_opt_quarter"] = cost
        if g.n <= 10:
            dem = generate_multicut_demands(inst, min(2, max(1, g.n // 4)), seed=args.seed + 1)
            _, cost = brute_force_multicut(g, list(dem))
            payload["multicut_opt"] = cost
        payload["passed"] = True
    _write_json(args.report, payload)
    print(f"check {args.what}: passed={payload['passed']} report={args.report}")
    return 0 if payload["passed"] else 1


def _parse_seed_range(spec: str) -> list[int]:
    if ".." in spec:
        a, b = spec.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(s) for s in spec.split(",") if s]


def cmd_bench(args) -> int:
    seeds = _parse_seed_range(args.seeds)
    rows = []
    for seed in seeds:
        side = int(round(args.rho_hidden * args.n))
        P = Partition(args.n, [range(side), range(side, args.n)])
        inst = generate_sr(P, args.eps, _adversary_from_args(args), seed=seed)
        result = _run_problem(args.problem, inst, args, seed)
        ratio = result.boundary_cost / inst.sr_cost() if inst.sr_cost() > 0 else None
        if isinstance(result.side, Partition):
            sizes = [len(p) for p in result.side.parts]
        else:
            sizes = [len(result.side), args.n - len(result.side)]
        rows.append(
            {
                "seed": seed,
                "boundary_cost": result.boundary_cost,
                "ratio_vs_sr_cost": ratio,
                "sizes": sizes,
                "diagnostics": _plain(result.diagnostics),
            }
        )
    ratios = [r["ratio_vs_sr_cost"] for r in rows if r["ratio_vs_sr_cost"] is not None]
    payload = {
        "problem": args.problem,
        "n": args.n,
        "eps": args.eps,
        "D": args.D,
        "seeds": seeds,
        "per_seed": rows,
        "summary": {
            "median_ratio": statistics.median(ratios) if ratios else None,
            "max_ratio": max(ratios) if ratios else None,
            "min_ratio": min(ratios) if ratios else None,
        },
    }
    _write_json(args.report, payload)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["seed", "boundary_cost", "ratio_vs_sr_cost"])
    for r in rows:
        writer.writerow([r["seed"], r["boundary_cost"], r["ratio_vs_sr_cost"]])
    Path(args.csv).write_text(buf.getvalue())
    print(f"bench {args.problem}: {len(rows)} seeds, median ratio "
          f"{payload['summary']['median_ratio']}, report={args.report} csv={args.csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semicut", description=__doc__)
    p.add_argument("--version", action="version", version=f"semicut {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add_adversary(sp):
        sp.add_argument("--adversary", default="empty",
                        choices=["empty", "erdos-renyi", "cliques", "regular-expander"])
        sp.add_argument("--inside-prob", type=float, default=0.0)
        sp.add_argument("--inside-degree", type=int, default=0)
        sp.add_argument("--deletion", type=float, default=0.0)

    g = sub.add_parser("generate", help="generate an instance file")
    g.add_argument("--model", choices=["sr", "expander"], default="sr")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--eps", type=float, default=0.1)
    g.add_argument("--rho", type=float, default=0.5, help="hidden small-side fraction")
    g.add_argument("--cross", type=int, default=0, help="expander model: cross edge count")
    add_adversary(g)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run a cut pipeline on an instance file")
    s.add_argument("--problem", choices=PROBLEMS, required=True)
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--rho", type=float, default=0.25)
    s.add_argument("--demands", type=int, default=8)
    s.add_argument("--D", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--report", required=True)
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("recover", help="purify a two-sided planted partition")
    r.add_argument("--in", dest="infile", required=True)
    r.add_argument("--eps", type=float, required=True)
    r.add_argument("--eta", type=float, default=0.05)
    r.add_argument("--csc", type=float, default=1.0)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--report", required=True)
    r.set_defaults(func=cmd_recover)

    e = sub.add_parser("expander-solve", help="ball-sweep algorithms for planted expanders")
    e.add_argument("--problem", choices=["balanced-cut", "sse"], required=True)
    e.add_argument("--in", dest="infile", required=True)
    e.add_argument("--rho", type=float, default=0.25)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--report", required=True)
    e.set_defaults(func=cmd_expander_solve)

    c = sub.add_parser("check", help="invariant / geometric-expansion / oracle checks")
    c.add_argument("--what", choices=["invariants", "geo-expansion", "oracle"], required=True)
    c.add_argument("--in", dest="infile", required=True)
    c.add_argument("--model", choices=["balanced-cut", "sse", "multicut"], default="balanced-cut")
    c.add_argument("--rho", type=float, default=0.25)
    c.add_argument("--demands", type=int, default=4)
    c.add_argument("--D", type=int, default=16)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--report", required=True)
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="seed sweep with a JSON report and CSV")
    b.add_argument("--problem", choices=PROBLEMS, required=True)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--eps", type=float, default=0.1)
    b.add_argument("--rho", type=float, default=0.25, help="sse target fraction")
    b.add_argument("--rho-hidden", type=float, default=0.5, dest="rho_hidden")
    b.add_argument("--demands", type=int, default=8)
    b.add_argument("--D", type=int, default=16)
    add_adversary(b)
    b.add_argument("--seeds", default="1..5", help="range 1..10 or list 1,2,3")
    b.add_argument("--report", required=True)
    b.add_argument("--csv", required=True)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
