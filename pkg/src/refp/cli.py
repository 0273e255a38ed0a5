"""Command line entry point: ``refp generate|solve|check|experiment|tables``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .generators import AdXConfig, RandomKConfig, VARIANTS, adx_market, random_k_market
from .market import (
    MarketError,
    bundle_sizes,
    is_envy_free,
    is_feasible,
    is_restricted_envy_free,
    market_from_json,
    market_to_json,
    mc_violating_goods,
    outcome_from_json,
    outcome_to_dict,
    revenue,
    welfare,
    winners,
)


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_generate(args) -> int:
    if args.dist == "random-k":
        missing = [f for f in ("n", "m", "p", "k") if getattr(args, f) is None]
        if missing:
            raise ValueError(f"random-k needs --{' --'.join(missing)}")
        cfg = RandomKConfig(args.n, args.m, args.p, args.k, args.variant, args.seed)
        market = random_k_market(cfg)
    else:
        if args.m is None or args.p is None:
            raise ValueError("adx needs --m and --p")
        if args.config:
            cfg = AdXConfig.from_file(args.config, m=args.m, p=args.p, seed=args.seed)
        else:
            cfg = AdXConfig(args.m, args.p, user_count=args.users, seed=args.seed)
        market = adx_market(cfg)
    _write(market_to_json(market), args.out)
    return 0


def cmd_solve(args) -> int:
    market = market_from_json(Path(args.market).read_text())
    outcome, record = harness.run_algorithm(args.algo, market)
    payload = outcome_to_dict(outcome)
    payload["metrics"] = {f: getattr(record, f) for f in record.FIELDS}
    payload["revenue"] = revenue(market, outcome)
    payload["welfare"] = welfare(market, outcome.allocation)
    _write(json.dumps(payload, indent=2), args.out)
    print(f"revenue {payload['revenue']:g}", file=sys.stderr)
    return 0


def diagnose(market, outcome) -> dict:
    if outcome.allocation.shape != (market.n, market.m):
        raise MarketError("outcome does not match the market's dimensions")
    W = winners(market, outcome.allocation)
    envious = [b.id for b in market.bidders if not is_envy_free(market, outcome, b.id)]
    mc = mc_violating_goods(outcome)
    return {
        "feasible": is_feasible(market, outcome.allocation),
        "winners": sorted(W),
        "bundle_sizes": bundle_sizes(outcome.allocation).tolist(),
        "restricted_envy_free": is_restricted_envy_free(market, outcome),
        "ef_violations": len(envious),
        "ef_violations_winners": len([j for j in envious if j in W]),
        "ef_violations_losers": len([j for j in envious if j not in W]),
        "envious_bidders": envious,
        "mc_violations": len(mc),
        "mc_violating_goods": mc,
        "revenue": revenue(market, outcome),
        "welfare": welfare(market, outcome.allocation),
    }


def cmd_check(args) -> int:
    market = market_from_json(Path(args.market).read_text())
    outcome = outcome_from_json(Path(args.outcome).read_text())
    _write(json.dumps(diagnose(market, outcome), indent=2), args.out)
    return 0


def cmd_experiment(args) -> int:
    grid, seed, timing = harness.suite_from_dict(json.loads(Path(args.config).read_text()))
    if args.seed is not None:
        seed = args.seed
    if args.trials is not None:
        grid = harness.Grid(grid.title, grid.distribution, grid.algorithms, grid.params, args.trials)
    if args.no_timing:
        timing = False
    _write(harness.run_grid(grid, seed=seed, timing=timing), args.out)
    return 0


def cmd_tables(args) -> int:
    grids = harness.builtin_grids(full=args.full, trials=args.trials)
    wanted = args.only.split(",") if args.only else list(grids)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in wanted:
        if name not in grids:
            raise ValueError(f"unknown table {name!r}; choose from {sorted(grids)}")
        csv_text = harness.run_grid(grids[name], seed=args.seed, timing=not args.no_timing)
        (out_dir / f"{name}.csv").write_text(csv_text)
        print(f"wrote {out_dir / f'{name}.csv'}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="refp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a random market and print it as JSON")
    g.add_argument("--dist", choices=["random-k", "adx"], default="random-k")
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--p", type=float)
    g.add_argument("--k", type=float)
    g.add_argument("--variant", choices=VARIANTS, default="size-interchangeable")
    g.add_argument("--users", type=int, default=10000)
    g.add_argument("--config", help="AdX distribution tables (JSON)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run an algorithm on a market JSON")
    s.add_argument("--algo", required=True, choices=sorted(harness.ALGORITHMS))
    s.add_argument("--market", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("check", help="EF / MC diagnostics for an outcome")
    c.add_argument("--market", required=True)
    c.add_argument("--outcome", required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)

    e = sub.add_parser("experiment", help="run a suite config and emit a CSV table")
    e.add_argument("--config", required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--trials", type=int)
    e.add_argument("--no-timing", action="store_true", help="report time as 0 for byte-reproducible output")
    e.add_argument("--out")
    e.set_defaults(func=cmd_experiment)

    t = sub.add_parser("tables", help="regenerate the four built-in tables")
    t.add_argument("--out-dir", default="tables")
    t.add_argument("--only", help="comma-separated subset, e.g. table1,table3")
    t.add_argument("--full", action="store_true", help="full-scale grids (slow)")
    t.add_argument("--trials", type=int)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--no-timing", action="store_true")
    t.set_defaults(func=cmd_tables)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"refp {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
