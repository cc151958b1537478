"""Command-line front end: gen, run, oracle, bench and verify."""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import acceptance
from .balance import InvalidConfig, ProtocolConfig, ProtocolError, SelectionPolicy
from .bench import BadPlan, ExperimentPlan, rows_to_csv, rows_to_jsonl, run_plan, summarize
from .instances import BadParams, BadSpec, FamilyISpec, gen_family_I1, gen_family_I2, gen_random, gen_tight
from .io import dump_instance, load_instance, parse_delay, run_report
from .model import InstanceError, cost
from .oracle import optimal_assignment, optimal_cost
from .variants import run_protocol

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _global_parent() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand from overwriting a value given before it
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for ids, generators and delays")
    p.add_argument("--leader", type=int, default=argparse.SUPPRESS, help="force this ring position to lead")
    p.add_argument("--policy", choices=[p.value for p in SelectionPolicy], default=argparse.SUPPRESS)
    p.add_argument("--delay", default=argparse.SUPPRESS, help="unit | uniform:lo,hi | table:FILE")
    p.add_argument("--trace", default=argparse.SUPPRESS, metavar="FILE", help="write message trace as JSON lines")
    return p


def build_parser() -> argparse.ArgumentParser:
    parent = _global_parent()
    ap = argparse.ArgumentParser(prog="ringbalance", parents=[parent],
                                 description="Balanced color assignment on a ring of agents.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[parent], help="generate an instance")
    g.add_argument("--family", choices=["random", "i1", "i2", "tight"], default="random")
    g.add_argument("-n", type=int, required=True)
    g.add_argument("-m", type=int, help="colors (random family; defaults to n)")
    g.add_argument("--p-max", type=int, default=64)
    g.add_argument("--density", type=float, default=1.0)
    g.add_argument("-t", type=int, default=4, help="colors per pair (family I)")
    g.add_argument("-u", type=int, default=2, help="base weight (family I)")
    g.add_argument("-q", default="280", help="tight family scale")
    g.add_argument("--delta", default="9/10")
    g.add_argument("--eps", default="1/10")
    g.add_argument("-o", "--out")

    r = sub.add_parser("run", parents=[parent], help="run a protocol on an instance file")
    r.add_argument("instance")
    r.add_argument("--protocol", choices=["sync", "async"], default="sync")
    r.add_argument("--variant", choices=["base", "two-approx", "eps", "gather"], default="base")
    r.add_argument("--epsilon", default=None, help="rational in (0, 1) for the eps variant")
    r.add_argument("--with-oracle", action="store_true")
    r.add_argument("--quota-rule", choices=["pooled", "label"], default="pooled")
    r.add_argument("--emit", choices=["json", "assignment"], default="json")

    o = sub.add_parser("oracle", parents=[parent], help="optimal balanced assignment")
    o.add_argument("instance")

    b = sub.add_parser("bench", parents=[parent], help="run an experiment plan")
    b.add_argument("plan")
    b.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--emit-assignments", action="store_true")
    b.add_argument("--summary", action="store_true", help="print per-point aggregates instead of rows")
    b.add_argument("-o", "--out")

    v = sub.add_parser("verify", parents=[parent], help="run the acceptance suite")
    v.add_argument("--json", action="store_true")
    v.add_argument("--corrupt-oracle", action="store_true", help=argparse.SUPPRESS)
    return ap


def _config(args, **extra) -> ProtocolConfig:
    kw = {}
    if hasattr(args, "seed"):
        kw["seed"] = args.seed
    if hasattr(args, "leader"):
        kw["leader"] = args.leader
    if hasattr(args, "policy"):
        kw["policy"] = args.policy
    if hasattr(args, "delay"):
        kw["delay"] = parse_delay(args.delay, getattr(args, "seed", 0))
    return ProtocolConfig(**kw, **extra)


def cmd_gen(args) -> int:
    seed = getattr(args, "seed", 0)
    if args.family == "random":
        inst = gen_random(args.n, args.m if args.m is not None else args.n, args.p_max, args.density, seed)
    elif args.family in ("i1", "i2"):
        spec = FamilyISpec(n=args.n, t=args.t, u=args.u, seed=seed)
        inst = (gen_family_I1 if args.family == "i1" else gen_family_I2)(spec)
    else:
        inst = gen_tight(args.n, Fraction(args.q), Fraction(args.delta), Fraction(args.eps))
    _write(dump_instance(inst) + "\n", args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    inst = load_instance(args.instance)
    extra = {"mode": args.protocol, "variant": args.variant, "quota_rule": args.quota_rule}
    if args.variant == "eps":
        if args.epsilon is None:
            raise UsageError("--variant eps needs --epsilon")
        extra["epsilon"] = Fraction(args.epsilon)
    config = _config(args, **extra)
    trace = [] if hasattr(args, "trace") else None
    run = run_protocol(inst, config, trace=trace)
    if trace is not None:
        Path(args.trace).write_text("".join(json.dumps(t) + "\n" for t in trace))
    c = cost(run.assignment, inst)
    if args.emit == "assignment":
        print(json.dumps({"pi": list(run.assignment.pi)}))
        return EXIT_OK
    extra_keys = {"protocol": args.protocol, "leader": run.leader_pos}
    if run.detail is not None:
        extra_keys["p_hat"] = run.detail.p_hat
    report = run_report(inst, run.assignment, run.metrics, variant=args.variant, cost=c,
                        oracle_cost=optimal_cost(inst) if args.with_oracle else None, extra=extra_keys)
    print(json.dumps(report))
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = load_instance(args.instance)
    a, c = optimal_assignment(inst)
    print(json.dumps({"cost": c, "pi": list(a.pi)}))
    return EXIT_OK


def cmd_bench(args) -> int:
    plan = ExperimentPlan.load(args.plan)
    overrides = {}
    if hasattr(args, "seed"):
        overrides["seed"] = args.seed
    if hasattr(args, "policy"):
        overrides["policy"] = args.policy
    if hasattr(args, "delay"):
        overrides["delay"] = args.delay
    if overrides:
        plan = ExperimentPlan.from_dict({**plan.__dict__, **overrides})
    rows = run_plan(plan, workers=args.workers, emit_assignments=args.emit_assignments)
    if args.summary:
        text = "".join(json.dumps(s) + "\n" for s in summarize(rows))
    elif args.format == "csv":
        text = rows_to_csv(rows)
    else:
        text = rows_to_jsonl(rows)
    _write(text, args.out)
    return EXIT_OK


def cmd_verify(args, oracle=optimal_cost) -> int:
    results = acceptance.run_all(oracle)
    if args.json:
        print(acceptance.results_json(results))
    else:
        for res in results:
            print(res.line())
        passed = sum(r.passed for r in results)
        print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _corrupt(inst) -> int:
    return optimal_cost(inst) + 1


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "oracle": cmd_oracle, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args, _corrupt if args.corrupt_oracle else optimal_cost)
        return COMMANDS[args.command](args)
    except (UsageError, BadPlan, BadParams, BadSpec, InvalidConfig, InstanceError, ValueError, OSError) as exc:
        print(f"ringbalance: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProtocolError as exc:
        print(f"ringbalance: protocol failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
