"""Command-line front end: ``policyiter {solve,verify,experiment,gen,bounds}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from fractions import Fraction
from typing import List, Optional

from . import oracle
from .bounds import BOUND_NAMES, eval_bounds
from .engine import parse_policy_text, policy_text, run_policy_iteration, trace_to_text
from .experiment import experiment_rows, make_strategy, resolve_lemmas, rows_to_csv, run_verify, start_policy
from .instances import GenSpec, MdpFormatError, builtin_instance, parse_mdp, random_mdp, serialize_mdp
from .linalg import SingularSystemError
from .mdp import InvalidMdpError, check_policy

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_VIOLATION = 1
EXIT_CAP = 2
EXIT_USAGE = 2
EXIT_ARITH = 3


class UsageError(Exception):
    pass


def _u64(text: str) -> int:
    v = int(text, 0)
    if not (0 <= v < 2**64):
        raise argparse.ArgumentTypeError(f"{text} is not a 64-bit unsigned integer")
    return v


def _n_range(text: str) -> List[int]:
    lo, sep, hi = text.partition("..")
    if not sep:
        return [int(text)]
    lo, hi = int(lo), int(hi)
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return list(range(lo, hi + 1))


def _load_mdp(args):
    sources = [x for x in (args.input, args.builtin, args.gen) if x is not None]
    if len(sources) != 1:
        raise UsageError("give exactly one of --input, --builtin, --gen")
    if args.input is not None:
        text = sys.stdin.read() if args.input == "-" else open(args.input).read()
        return parse_mdp(text)
    if args.builtin is not None:
        return builtin_instance(args.builtin)
    return random_mdp(GenSpec.parse(args.gen))


def _start(mdp, text: str, seed: int):
    if text in ("zero", "random"):
        return start_policy(mdp, text, seed)
    if os.path.isfile(text):
        with open(text) as fh:
            text = fh.read()
    return check_policy(mdp, parse_policy_text(text.strip().strip("()").replace("a", "")))


def _value_text(v, exact: bool) -> str:
    if exact:
        return " ".join(f"{x.numerator}/{x.denominator}" for x in v)
    return " ".join(repr(float(x)) for x in v)


def cmd_solve(args) -> int:
    try:
        mdp = _load_mdp(args)
        if args.arith == "float":
            mdp = mdp.to_float()
        pi0 = _start(mdp, args.start_policy, args.seed)
        strategy = make_strategy(args.strategy, args.seed, args.rule)
    except (MdpFormatError, InvalidMdpError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        trace = run_policy_iteration(mdp, pi0, strategy, args.max_iter)
    except (SingularSystemError, ZeroDivisionError) as exc:
        print(f"arithmetic failure: {exc}", file=sys.stderr)
        return EXIT_ARITH

    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(trace_to_text(trace))
    exact = mdp.is_exact
    if args.format == "csv":
        print("policy,value,iterations,terminated")
        print(f"{policy_text(trace.final_policy)},{_value_text(trace.final_value, exact)},"
              f"{trace.iterations},{int(trace.terminated)}")
    else:
        print(f"strategy: {trace.strategy}")
        print(f"start: {policy_text(pi0)}")
        print(f"policy: {policy_text(trace.final_policy)}")
        print(f"value: {_value_text(trace.final_value, exact)}")
        print(f"iterations: {trace.iterations}")
        print(f"terminated: {'yes' if trace.terminated else 'no (iteration cap)'}")
    return EXIT_OK if trace.terminated else EXIT_CAP


def cmd_verify(args) -> int:
    lemmas = resolve_lemmas(args.lemmas, args.k)
    try:
        reports = run_verify(args.n, args.k, args.instances, args.seed, lemmas,
                             gamma=args.gamma, density=args.density, cap=args.cap)
    except oracle.EnumerationCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    for rep in reports:
        print(rep.to_text())
    failed = [r.lemma_id for r in reports if not r.passed]
    print(f"summary n={args.n} k={args.k} instances={args.instances} seed={args.seed}"
          f" failed={','.join(failed) or 'none'}")
    return EXIT_VIOLATION if failed else EXIT_OK


def cmd_experiment(args) -> int:
    rows = experiment_rows(
        args.n_range, args.k, args.instances, args.strategy, args.seed,
        use_oracle=args.oracle == "on", start_rule=args.start_policy, rule=args.rule,
        gamma=args.gamma, density=args.density,
    )
    text = rows_to_csv(rows)
    try:
        if args.out in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        mdp = builtin_instance(args.builtin) if args.builtin else random_mdp(GenSpec.parse(args.spec))
    except (ValueError, KeyError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    text = serialize_mdp(mdp)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_bounds(args) -> int:
    names = BOUND_NAMES if args.which == "all" else [args.which]
    for name in names:
        print(f"{name} n={args.n} k={args.k} bound={eval_bounds(args.n, args.k, name):.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="policyiter", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def strategy_flags(sp):
        sp.add_argument("--strategy", choices=("greedy", "random", "sequential"), default="greedy")
        sp.add_argument("--rule", choices=("lowest", "highest", "random"), default="lowest",
                        help="singleton rule for --strategy sequential")
        sp.add_argument("--seed", type=_u64, default=0)

    def instance_flags(sp):
        sp.add_argument("--gamma", type=Fraction, default=Fraction(9, 10))
        sp.add_argument("--density", type=Fraction, default=Fraction(1, 2))

    s = sub.add_parser("solve", help="run policy iteration on one instance")
    s.add_argument("--input", help="MDP text file ('-' for stdin)")
    s.add_argument("--builtin", help="named instance: M2 or M2c")
    s.add_argument("--gen", help="generator spec, e.g. n=4,k=2,seed=7")
    strategy_flags(s)
    s.add_argument("--arith", choices=("exact", "float"), default="exact")
    s.add_argument("--start-policy", default="zero", help="zero, random, an action string like 10, or a file")
    s.add_argument("--max-iter", type=int, default=None)
    s.add_argument("--trace", help="write the iteration log here")
    s.add_argument("--format", choices=("text", "csv"), default="text")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check the structural lemmas on seeded instances")
    v.add_argument("--n", type=int, default=4)
    v.add_argument("--k", type=int, default=2)
    v.add_argument("--instances", type=int, default=10)
    v.add_argument("--seed", type=_u64, default=0)
    v.add_argument("--lemmas", default="all")
    v.add_argument("--cap", type=int, default=oracle.DEFAULT_CAP)
    instance_flags(v)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("experiment", help="iteration-count sweep written as CSV")
    e.add_argument("--n-range", type=_n_range, default=[2, 3, 4, 5, 6])
    e.add_argument("--k", type=int, default=2)
    e.add_argument("--instances", type=int, default=10)
    strategy_flags(e)
    e.add_argument("--start-policy", choices=("zero", "random"), default="zero")
    e.add_argument("--oracle", choices=("on", "off"), default="off")
    e.add_argument("--out")
    instance_flags(e)
    e.set_defaults(func=cmd_experiment)

    g = sub.add_parser("gen", help="write an MDP in the text format")
    g.add_argument("--spec", default="n=3,k=2,seed=0")
    g.add_argument("--builtin")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bounds", help="evaluate the iteration bounds")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--k", type=int, default=2)
    b.add_argument("--which", choices=BOUND_NAMES + ("all",), default="all")
    b.set_defaults(func=cmd_bounds)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
