"""Command-line front end."""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .instances import ExperimentGrid, InstanceError, InstanceFormatError, read_instance
from .ladder import ContinuousRange, LadderError, build_ladder
from .oracles import CapExceeded, dlp_value, dp_solve, exact_policy_revenue, expected_opt
from .experiment import SimulationReport, evaluate_instance, run_experiment, write_ladder_comparison
from .policies import EXTRA_IDS, LABELS, POLICY_IDS, BENCHMARK_POLICIES, build_policy
from .verify import SUITES, run_suites

EXIT_INPUT = 2
EXIT_CAP = 3

GRID_PRESETS = {
    "smoke": {"ladders": ["1-2-3-4"], "inventories": [3], "multipliers": [1, 2],
              "instances_per_length": 2, "reps": 20, "opt_reps": 100},
    "desk": {"ladders": ["1-2-3-4"], "inventories": [10], "instances_per_length": 100,
             "reps": 200, "opt_reps": 500},
    "full": {"ladders": ["1-2-3-4"], "inventories": [10, 100], "instances_per_length": 1000,
               "reps": 1000, "opt_reps": 1000},
    "ladders": {"ladders": ["1-2-3-4", "step-0.5", "step-0.25", "step-0.125", "step-0.0625",
                            "step-0.03125", "step-0.015625", "1-2", "1-to-8"],
                "inventories": [10], "instances_per_length": 1000, "reps": 1000,
                "opt_reps": 1000},
}
CONFIG_DEFAULTS = {
    "ladders": ["1-2-3-4"], "inventories": [10], "multipliers": list(range(1, 11)),
    "instances_per_length": 100, "b_low": 1 / 3, "b_high": 4 / 3, "seed": 0,
    "policies": list(BENCHMARK_POLICIES), "reps": 200, "opt_reps": 1000, "epsilon": 0.05,
    "samples": 1000,
}


class InputError(Exception):
    pass


def fmt(v) -> str:
    """Decimal, followed by p/q for exact values."""
    if isinstance(v, Fraction):
        return f"{float(v):.12g} {v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return f"{v} {v}/1"
    return f"{v:.12g}"


def _int_list(s: str) -> list:
    out = []
    for part in s.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _names(s) -> list:
    names = [p.strip() for p in s.split(",") if p.strip()] if isinstance(s, str) else list(s)
    if names == ["all"]:
        names = list(POLICY_IDS)
    elif names == ["benchmark"]:
        names = list(BENCHMARK_POLICIES)
    for p in names:
        if p not in POLICY_IDS and p not in EXTRA_IDS:
            raise InputError(f"unknown policy {p!r}")
    return names


def _load(path):
    try:
        return read_instance(path)
    except FileNotFoundError:
        raise InputError(f"instance not found: {path}") from None
    except (InstanceError, InstanceFormatError, LadderError) as e:
        raise InputError(f"invalid instance: {e}") from None


def cmd_ladder(args) -> int:
    if args.continuous:
        text = args.continuous.split("=", 1)[-1]
        try:
            crange = ContinuousRange(float(text))
        except (ValueError, LadderError) as e:
            raise InputError(f"invalid range: {e}") from None
        print(f"range [1, {crange.R:g}]")
        print(f"c* = {crange.competitive_ratio:.12g}")
        return 0
    try:
        lad = build_ladder(args.prices)
    except LadderError as e:
        raise InputError(str(e)) from None
    print(f"ladder {lad}")
    print("j price q_j")
    for j, (r, w) in enumerate(zip(lad.prices, lad.weights), start=1):
        print(j, r, w)
    print(f"q = {fmt(lad.total_weight)}")
    print(f"c* = {fmt(lad.competitive_ratio)}")
    return 0


def _print_oracles(inst, args) -> None:
    exact = inst.is_exact
    if args.method == "mc":
        est = expected_opt(inst, args.reps, seed=args.seed)
        print(f"opt_mc {est.mean:.12g} se {est.se:.6g} reps {est.replications}")
    else:
        est = expected_opt(inst, method=args.method, cap=args.cap)
        print(f"opt_{args.method} {fmt(est.exact if est.exact is not None else est.mean)}")
    print(f"dp {fmt(dp_solve(inst).optimum)}")
    print(f"dlp {fmt(dlp_value(inst))}")
    if exact:
        guarantee = inst.ladder.competitive_ratio * expected_opt(inst, method="layered").exact
        print(f"vt_guarantee {fmt(guarantee)}")


def cmd_opt(args) -> int:
    _print_oracles(_load(args.instance), args)
    return 0


def cmd_simulate(args) -> int:
    inst = _load(args.instance)
    policies = _names(args.policies)
    rows = evaluate_instance(inst, policies, args.reps, args.seed, args.opt_reps, args.epsilon,
                             args.samples, cap=args.cap)
    print(f"instance {inst.name or args.instance}: k={inst.k} T={inst.T} ladder {inst.ladder}")
    print(f"E[OPT] ~ {rows[0].opt_mean:.6g} (se {rows[0].opt_se:.3g})")
    for r in rows:
        line = f"{r.policy:14s} revenue {r.mean_revenue:.6f} se {r.se:.6f} ratio {r.mean_ratio:.6f}"
        if args.exact:
            pol = build_policy(r.policy, inst, exact=inst.is_exact, epsilon=args.epsilon,
                               samples=args.samples, cap=args.cap)
            if pol.enumerable and r.policy not in ("vt-est", "vt-p"):
                line += f" exact {fmt(exact_policy_revenue(inst, pol, cap=args.cap).revenue)}"
        print(line)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        SimulationReport(rows, policies, str(inst.ladder)).write(out)
        config = {"command": "simulate", "instance": str(args.instance), "policies": policies,
                  "reps": args.reps, "opt_reps": args.opt_reps, "seed": args.seed,
                  "epsilon": args.epsilon, "samples": args.samples}
        (out / "config.json").write_text(json.dumps(config, indent=2) + "\n")
    return 0


def resolve_config(args) -> dict:
    cfg = dict(CONFIG_DEFAULTS)
    source = args.config or args.grid
    if source:
        if source in GRID_PRESETS:
            cfg.update(GRID_PRESETS[source])
        else:
            try:
                loaded = json.loads(Path(source).read_text())
            except FileNotFoundError:
                raise InputError(f"grid not found: {source}") from None
            except json.JSONDecodeError as e:
                raise InputError(f"invalid grid file: {e}") from None
            unknown = set(loaded) - set(CONFIG_DEFAULTS) - {"command"}
            if unknown:
                raise InputError(f"unknown config fields: {sorted(unknown)}")
            cfg.update({k: v for k, v in loaded.items() if k != "command"})
    overrides = {
        "ladders": args.ladders and [s.strip() for s in args.ladders.split(";")],
        "inventories": args.k and _int_list(args.k),
        "multipliers": args.multipliers and _int_list(args.multipliers),
        "instances_per_length": args.instances, "policies": args.policies and _names(args.policies),
        "reps": args.reps, "opt_reps": args.opt_reps, "epsilon": args.epsilon, "seed": args.seed,
        "samples": args.samples,
    }
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def cmd_experiment(args) -> int:
    cfg = resolve_config(args)
    reports = []
    for name in cfg["ladders"]:
        try:
            lad = build_ladder(name)
        except LadderError as e:
            raise InputError(str(e)) from None
        try:
            grid = ExperimentGrid(lad, tuple(cfg["inventories"]), tuple(cfg["multipliers"]),
                                  cfg["instances_per_length"], cfg["b_low"], cfg["b_high"],
                                  cfg["seed"])
        except ValueError as e:
            raise InputError(f"invalid grid: {e}") from None
        cfg["policies"] = _names(cfg["policies"])

        def progress(i, n, name=name):
            if not args.quiet and (i == n or i % max(1, n // 20) == 0):
                print(f"[{name}] {i}/{n} instances", file=sys.stderr, flush=True)

        rep = run_experiment(grid, cfg["policies"], cfg["reps"], cfg["seed"], cfg["opt_reps"],
                             cfg["epsilon"], cfg["samples"], progress=progress)
        reports.append(rep)
        _print_report(rep)
        if args.out:
            out = Path(args.out) / name if len(cfg["ladders"]) > 1 else Path(args.out)
            rep.write(out)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if len(reports) > 1:
            write_ladder_comparison(reports, out / "ladders.csv")
        (out / "config.json").write_text(json.dumps({"command": "experiment", **cfg}, indent=2) + "\n")
    return 0


def _print_report(rep) -> None:
    for k in rep.inventories:
        print(f"ladder {rep.ladder} k={k}")
        for p in rep.policies:
            m, se, n = rep.summary(p, k)
            print(f"  {LABELS.get(p, p):20s} {m:.4f} +- {se:.4f} ({n} instances)")
    bad = rep.anomalies()
    if bad:
        print(f"  anomalies: {len(bad)} rows with ratio above 1 + 4 SE")


def cmd_verify(args) -> int:
    if args.instance:
        _print_oracles(_load(args.instance), args)
        return 0
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = run_suites(names, fault=args.inject_fault)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="valtrack", description="Revenue management with valuation tracking.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ladder", help="skimming weights and competitive ratio of a price set")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--prices", help="comma-separated prices or a preset name")
    g.add_argument("--continuous", help="continuous range, e.g. R=4")
    p.set_defaults(func=cmd_ladder)

    def oracle_flags(p):
        p.add_argument("--method", choices=("exact", "layered", "mc"), default="layered")
        p.add_argument("--reps", type=int, default=1000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--cap", type=int, default=10**6)

    p = sub.add_parser("opt", help="clairvoyant benchmarks for an instance file")
    p.add_argument("--instance", required=True)
    oracle_flags(p)
    p.set_defaults(func=cmd_opt)

    p = sub.add_parser("simulate", help="evaluate policies on one instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--policies", default="benchmark", help="comma-separated ids, 'benchmark' or 'all'")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--opt-reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--cap", type=int, default=10**6)
    p.add_argument("--exact", action="store_true", help="also print exact expected revenues")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run a grid of generated instances")
    p.add_argument("--grid", help=f"preset ({', '.join(GRID_PRESETS)}) or JSON config file")
    p.add_argument("--config", help="JSON config file (e.g. a previous run's config.json)")
    p.add_argument("--ladders", "--prices", dest="ladders",
                   help="ladders separated by ';' (presets or comma-separated prices)")
    p.add_argument("--k", help="inventories, e.g. 10,100")
    p.add_argument("--multipliers", help="horizon multipliers of k, e.g. 1-10")
    p.add_argument("--instances", type=int, help="instances per horizon")
    p.add_argument("--policies")
    p.add_argument("--reps", type=int)
    p.add_argument("--opt-reps", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify", help="exact invariant suites, or oracles for an instance file")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--inject-fault", choices=("skim-off-by-one",))
    p.add_argument("--instance")
    oracle_flags(p)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except CapExceeded as e:
        print(f"error: cap exceeded: {e}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
