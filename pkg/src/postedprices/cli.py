"""Command line front end.

Three subcommands: `run` simulates a pricing scheme on a market file and
writes a machine-readable report, `verify-walrasian` checks a prices plus
allocation pair against a market, and `feas` decides a linear inequality
system. Exit codes: 0 success/feasible, 1 parse error, 2 precondition
violated, 3 capacity guard tripped, 4 negative verdict (infeasible system or
failed equilibrium check).
"""

import argparse
import json
import sys
from fractions import Fraction

from .feasibility import feasible, parse_system
from .matching import brute_force_optimum
from .model import (
    CapacityError,
    MarketError,
    ParseError,
    PreconditionError,
    format_rational,
)
from .serialize import (
    allocation_from_json,
    load_json,
    market_from_json,
    prices_from_json,
)
from .simulate import (
    SCHEMES,
    adversarial_worst,
    make_scheme,
    run_order,
    walrasian_check,
    worst_over_orders,
)


def _read(path) -> str:
    try:
        with open(path, "r") as f:
            return f.read()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}")


def _label(x) -> str:
    # items are plain names; bundles are frozensets rendered as sorted joins
    if isinstance(x, frozenset):
        return " ".join(sorted(x))
    return str(x)


def _choice_obj(choice):
    if any(isinstance(part, frozenset) for part in choice):
        return [sorted(B) for B in sorted(choice, key=lambda B: sorted(B))]
    return sorted(choice)


def _trace_obj(trace):
    rounds = []
    for r in trace.rounds:
        rounds.append({
            "agent": r.agent,
            "prices": {_label(u): format_rational(p) for u, p in r.prices.items()},
            "chosen": _choice_obj(r.chosen),
            "paid": format_rational(r.paid),
            "value": format_rational(r.value),
        })
    return {"order": list(trace.order), "rounds": rounds,
            "welfare": format_rational(trace.welfare),
            "revenue": format_rational(trace.revenue)}


def _parse_script(text, scheme_name):
    obj = load_json(text)
    if not isinstance(obj, dict) or set(obj) != {"script"} \
            or not isinstance(obj["script"], list):
        raise ParseError('script file must be {"script": [choice, ...]}')
    out = []
    for i, choice in enumerate(obj["script"]):
        if not isinstance(choice, list):
            raise ParseError(f"script[{i}]: expected a list")
        if all(isinstance(part, str) for part in choice):
            out.append(frozenset(choice))
        elif all(isinstance(part, list) for part in choice):
            out.append(frozenset(frozenset(B) for B in choice))
        else:
            raise ParseError(
                f"script[{i}]: mix of items and bundles in one choice")
    return out


def cmd_run(args) -> int:
    m = market_from_json(_read(args.market))
    scheme = make_scheme(args.scheme, m)
    _, opt = brute_force_optimum(m)

    tie = args.tie_break
    script = None
    if tie.startswith("scripted:"):
        if args.order is None:
            raise PreconditionError(
                "scripted tie breaking needs --order, a script fixes one run")
        script = _parse_script(_read(tie.split(":", 1)[1]), args.scheme)
        tie = "scripted"

    if args.order is not None:
        order = [a.strip() for a in args.order.split(",") if a.strip()]
        trace = run_order(m, scheme, order, tie_break=tie, script=script)
        worst, mode = trace.welfare, "single-order"
    elif args.all_orders:
        worst, trace = worst_over_orders(m, scheme, tie_break=tie)
        mode = "all-orders"
    else:
        if tie != "adversarial":
            raise PreconditionError(
                "without --order or --all-orders the sweep is fully "
                "adversarial; --tie-break would be ignored")
        worst, trace = adversarial_worst(m, scheme)
        mode = "adversarial"

    report = {
        "scheme": args.scheme,
        "mode": mode,
        "tie_break": tie,
        "opt": format_rational(opt),
        "worst_welfare": format_rational(worst),
        "ratio": format_rational(Fraction(worst, opt) if opt else Fraction(1)),
        "trace": _trace_obj(trace),
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as f:
            f.write(text)
    return 0


def cmd_verify_walrasian(args) -> int:
    m = market_from_json(_read(args.market))
    prices = prices_from_json(_read(args.prices))
    allocation = allocation_from_json(_read(args.allocation))
    problem = walrasian_check(m, prices, allocation)
    if problem is None:
        print("walrasian equilibrium verified")
        return 0
    print(problem)
    return 4


def cmd_feas(args) -> int:
    system = parse_system(_read(args.system))
    verdict = feasible(system)
    if verdict.feasible:
        print("feasible")
        for var in sorted(verdict.sample):
            print(f"  {var} = {format_rational(verdict.sample[var])}")
        return 0
    print("infeasible")
    print(f"  derived contradiction: {verdict.contradiction.render()}")
    print("  from:")
    for origin in verdict.certificate:
        print(f"    {origin}")
    return 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="postedprices",
        description="Posted-price schemes for sequential buyers.",
        epilog="The state-space guard for adversarial sweeps can be raised "
               "via the POSTEDPRICES_NODE_GUARD environment variable.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser(
        "run", help="simulate a pricing scheme on a market file")
    run.add_argument("market", help="market JSON file")
    run.add_argument("--scheme", required=True, choices=sorted(SCHEMES))
    group = run.add_mutually_exclusive_group()
    group.add_argument("--order", metavar="A,B,...",
                       help="run one arrival order (comma separated names)")
    group.add_argument("--all-orders", action="store_true",
                       help="enumerate every arrival order")
    run.add_argument("--tie-break", default="adversarial",
                     metavar="{adversarial|first|scripted:<file>}",
                     help="how buyers break demand ties (default adversarial)")
    run.add_argument("--out", default="-",
                     help="report path, - for standard output (default)")
    run.set_defaults(func=cmd_run)

    vw = sub.add_parser(
        "verify-walrasian",
        help="check that prices plus an allocation form an equilibrium")
    vw.add_argument("market")
    vw.add_argument("prices")
    vw.add_argument("allocation")
    vw.set_defaults(func=cmd_verify_walrasian)

    feas = sub.add_parser(
        "feas", help="decide a linear inequality system file")
    feas.add_argument("system")
    feas.set_defaults(func=cmd_feas)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (PreconditionError, MarketError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except CapacityError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
