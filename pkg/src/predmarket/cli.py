"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 domain error, 3 invariant violation.
Every numeric parameter accepts decimal (``0.1``) or fraction (``1/10``) syntax.
"""
from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from typing import List, Optional

from . import cfd, datasets, glove, orderbook, scenarios
from .ledger import codec
from .ledger.assets import VectorSpec, derive_event_id
from .ledger.state import Ledger, LedgerError
from .numeric import fmt_decimal, to_fraction

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _rational(text: str) -> Fraction:
    try:
        return to_fraction(text)
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _rational_list(text: str) -> List[Fraction]:
    return [_rational(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> List[int]:
    out = []
    for part in text.split(","):
        lo, sep, hi = part.partition("-")
        out.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
    return out


def _show(label: str, value: Fraction) -> str:
    return f"{label} = {Fraction(value)} ~ {fmt_decimal(value)}"


# -- commands -------------------------------------------------------------------

def cmd_scenario(args) -> int:
    result = scenarios.run_scenario(args.name)
    print(result.summary())
    for note in result.notes:
        print(f"  note: {note}")
    if args.trace:
        for tx in result.trace:
            print(codec.dumps(tx).replace("\n", ""))
    if not result.audit.ok:
        for v in result.audit.violations:
            print(f"  violation: {v}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK if result.status == "Match" else EXIT_DOMAIN


def cmd_dataset(args) -> int:
    params = {}
    if args.which == "fig2":
        params = {"n": args.n, "p": args.p, "initial": args.initial}
    elif args.which == "fig4":
        params = {"n": args.n, "ms": args.ms, "ps": args.ps}
    else:
        params = {"low": args.low, "high": args.high, "grid": args.grid}
    text = datasets.emit_dataset(args.which, args.out, **params)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_shapley(args) -> int:
    m, n, p = args.m, args.n, args.p
    if args.method == "exact":
        print(_show("v_minus", glove.shapley_minus_exact(m, n, p)))
        print(_show("v_plus", glove.shapley_plus_exact(m, n, p)))
    elif args.method == "brute":
        values = glove.shapley_bruteforce(glove.singleton_players(m, n), p, args.max_players)
        print(_show("v_minus", values["-0"]))
        print(_show("v_plus", values["+0"]))
    else:
        if args.seed is None:
            raise UsageError("--seed is required for the Monte Carlo method")
        est = glove.shapley_montecarlo(m, n, p, args.samples, args.seed)
        print(f"v_minus ~ {est.v_minus:.6f} (se {est.se_minus:.6f})")
        print(f"v_plus ~ {est.v_plus:.6f} (se {est.se_plus:.6f})")
        print(f"samples = {est.samples}, seed = {est.seed}")
    return EXIT_OK


def cmd_burn(args) -> int:
    best = glove.optimal_burn(glove.Side(args.side), args.initial, args.opposing, args.p)
    print(f"keep = {best.keep} (burn {best.initial_count - best.keep})")
    print(_show("revenue", best.revenue))
    return EXIT_OK


def cmd_consolidated(args) -> int:
    print(_show("owner_value", glove.consolidated_owner_value(args.m, args.n, args.p, args.max_players)))
    return EXIT_OK


def cmd_fungible(args) -> int:
    print(_show("value", glove.fungible_burn_total(args.C, args.n, args.m, args.x)))
    return EXIT_OK


def cmd_cfd_price(args) -> int:
    yes, no = cfd.capped_cfd_price(args.c, args.low, args.high)
    print(_show("yes", yes))
    print(_show("no", no))
    return EXIT_OK


def cmd_vector_price(args) -> int:
    spec = VectorSpec.from_flat(*args.spec)
    eid = derive_event_id(args.event)
    z = cfd.VectorAsset(args.amount, eid, spec, args.leg)
    price = cfd.vector_price_prime(z, args.c) if args.prime else cfd.vector_price(z, args.c)
    print(_show("price'" if args.prime else "price", price))
    return EXIT_OK


def cmd_ledger_apply(args) -> int:
    with open(args.script, encoding="utf-8") as fh:
        script = codec.loads(fh.read())
    if args.state and os.path.exists(args.state):
        with open(args.state, encoding="utf-8") as fh:
            led = Ledger.from_snapshot(fh.read())
    else:
        led = Ledger(script.get("genesis", {}), script.get("controllers"))
    ops = script.get("ops", script.get("tx_log", []))
    for i, op in enumerate(ops):
        try:
            led.apply(op["op"], op.get("args", {}))
        except LedgerError as exc:
            raise LedgerError(f"operation {i} ({op.get('op')}): {exc}") from exc
    snapshot = led.snapshot()
    if args.state:
        with open(args.state, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(snapshot)
        print(f"applied {len(ops)} operations; state written to {args.state}")
    else:
        sys.stdout.write(snapshot)
    report = led.check_invariants()
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for v in report.violations:
        print(f"violation: {v}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_INVARIANT


def cmd_orderbook_simulate(args) -> int:
    with open(args.script, encoding="utf-8") as fh:
        script = orderbook.load_script(fh.read())
    defaults = script.get("config", {})
    config = orderbook.SimConfig(
        seed=args.seed if args.seed is not None else int(defaults.get("seed", 0)),
        checkpoint_interval=args.interval or int(defaults.get("checkpoint_interval", 1)),
        ttp_behavior=orderbook.parse_behavior(args.behavior or defaults.get("ttp_behavior", "honest")),
    )
    result = orderbook.simulate(config, script)
    trace = result.trace_lines()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(trace)
    else:
        sys.stdout.write(trace)
    print(f"{len(result.state.trades)} trades, {result.rejected} rejected actions, "
          f"{len(result.violations)} violations", file=sys.stderr)
    for tick, problem in result.violations:
        print(f"violation at tick {tick}: {problem}", file=sys.stderr)
    return EXIT_INVARIANT if result.violations else EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="predmarket", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("scenario", help="replay a worked trading scenario")
    p.add_argument("name", choices=sorted(scenarios.SCENARIOS))
    p.add_argument("--trace", action="store_true", help="print the ledger transaction log")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("dataset", help="write a figure table as CSV")
    p.add_argument("which", choices=datasets.FIGURES)
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--n", type=int, default=100, help="opposing shares (fig2, fig4)")
    p.add_argument("--p", type=_rational, default=Fraction(0), help="agreement probability (fig2)")
    p.add_argument("--initial", type=int, help="initial '+' shares (fig2, default n)")
    p.add_argument("--ms", type=_int_list, help="m grid such as 1-100 or 10,50,100 (fig4)")
    p.add_argument("--ps", type=_rational_list, help="p grid such as 0,1/4,1/2 (fig4)")
    p.add_argument("--low", type=_rational, default=Fraction(20), help="lower barrier (fig6)")
    p.add_argument("--high", type=_rational, default=Fraction(40), help="upper barrier (fig6)")
    p.add_argument("--grid", type=_rational_list, help="asset prices (fig6)")
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("shapley", help="per-share Shapley values of the glove game")
    p.add_argument("m", type=int)
    p.add_argument("n", type=int)
    p.add_argument("p", type=_rational)
    p.add_argument("method", nargs="?", default="exact", choices=("exact", "brute", "mc"))
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-players", type=int, default=glove.DEFAULT_MAX_PLAYERS)
    p.set_defaults(func=cmd_shapley)

    p = sub.add_parser("burn", help="revenue-maximizing number of shares to keep")
    p.add_argument("side", choices=[s.value for s in glove.Side])
    p.add_argument("initial", type=int)
    p.add_argument("opposing", type=int)
    p.add_argument("p", type=_rational)
    p.set_defaults(func=cmd_burn)

    p = sub.add_parser("consolidated", help="value of one owner holding m '+' shares vs n singletons")
    p.add_argument("m", type=int)
    p.add_argument("n", type=int)
    p.add_argument("p", type=_rational)
    p.add_argument("--max-players", type=int, default=glove.DEFAULT_MAX_PLAYERS)
    p.set_defaults(func=cmd_consolidated)

    p = sub.add_parser("fungible", help="holder value after burning x of m fungible coins")
    p.add_argument("C", type=_rational, help="total market value")
    p.add_argument("n", type=int, help="coin supply")
    p.add_argument("m", type=int, help="coins held")
    p.add_argument("x", type=int, help="coins burned")
    p.set_defaults(func=cmd_fungible)

    p = sub.add_parser("cfd-price", help="capped CFD Yes/No prices")
    p.add_argument("c", type=_rational)
    p.add_argument("low", type=_rational)
    p.add_argument("high", type=_rational)
    p.set_defaults(func=cmd_cfd_price)

    p = sub.add_parser("vector-price", help="market price of one vector CFD leg")
    p.add_argument("--spec", type=_rational_list, required=True, help="b1,w1,b2,w2,...")
    p.add_argument("--leg", type=int, required=True)
    p.add_argument("--amount", type=_rational, required=True)
    p.add_argument("--c", type=_rational, required=True, help="current price of the asset")
    p.add_argument("--event", default="baseline asset x")
    p.add_argument("--prime", action="store_true", help="use the steeper, floored formula")
    p.set_defaults(func=cmd_vector_price)

    p = sub.add_parser("ledger", help="ledger operations")
    lsub = p.add_subparsers(dest="ledger_command", required=True, parser_class=_Parser)
    q = lsub.add_parser("apply", help="apply a JSON operation script")
    q.add_argument("script")
    q.add_argument("--state", help="snapshot file to load from and save to")
    q.set_defaults(func=cmd_ledger_apply)

    p = sub.add_parser("orderbook", help="order book simulation")
    osub = p.add_subparsers(dest="orderbook_command", required=True, parser_class=_Parser)
    q = osub.add_parser("simulate", help="run a timed action script and print the trace")
    q.add_argument("script")
    q.add_argument("--seed", type=int)
    q.add_argument("--interval", type=int, help="checkpoint interval in ticks")
    q.add_argument("--behavior", help="honest, stall:<tick> or censor:<a,b>")
    q.add_argument("--out", help="trace output path")
    q.set_defaults(func=cmd_orderbook_simulate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
