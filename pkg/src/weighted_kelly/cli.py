"""Command-line front end.

Exit codes: 0 success, 1 when the mathematics says no (failed condition,
infeasible market, numerical error; the report or error object is still
written), 2 on usage errors (bad flags, missing files, schema violations).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import conditions, engine, montecarlo, oracle, schemas
from .errors import SchemaError, WeightedKellyError
from .market import market_from_dict
from .quadrature import GridSpec
from .strategy import constant_fraction, optimal_strategy, strategy_from_dict

COMMANDS = ("validate", "conditions", "alpha", "feasibility", "optimal", "exact", "sweep",
            "simulate", "drift-test", "gaussian-return", "trajectory")

SCHEMA_HELP = """\
market JSON:
  {"type":"discrete","outcomes":[...],"probs":[...],"weights":[...],"reference":[...]}
      (add "repeated_returns":true to let distinct outcomes share a return value)
  {"type":"gaussian","dim":d,"sigma":[[...]],"sigma0":[[...]],"weight":"one","return":{"form":"martingale","D":0.5}}
  weight catalog: "one" | {"kind":"constant","value":c}
                  | {"kind":"polynomial","terms":[{"coef":c,"powers":[...]}]} (or "coeffs" when dim=1)
                  | {"kind":"box","lower":[...],"upper":[...],"value":c}  (null bound = unbounded)
  return catalog: {"form":"martingale","D":D} (alias "eq24") | {"form":"linear","coeffs":[...]}
                  | {"form":"polynomial","terms":[...]}
strategy JSON:
  {"kind":"constant_fraction","D":0.2}
  {"kind":"table","stakes":[{"history":[0,1],"fraction":0.1}, ...],"default":0.0}
grid JSON:
  {"scheme":"tensor","K":64,"R":8}
"""


class UsageError(Exception):
    pass


def _load_json(path, name):
    if not os.path.exists(path):
        raise UsageError(f"{name} file not found: {path}")
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{name} file is not valid JSON: {exc}") from None
    try:
        schemas.validate(data, name)
    except SchemaError as exc:
        raise UsageError(str(exc)) from None
    return data


def _market(args):
    if not args.market:
        raise UsageError("--market is required")
    return market_from_dict(_load_json(args.market, "market"))


def _strategy(args):
    if getattr(args, "strategy", None):
        return strategy_from_dict(_load_json(args.strategy, "strategy"))
    if getattr(args, "fraction", None) is not None:
        return constant_fraction(args.fraction, allow_leverage=True)
    raise UsageError("--strategy or --fraction is required")


def _grid(args):
    if getattr(args, "grid", None):
        return GridSpec.from_dict(_load_json(args.grid, "grid"))
    return GridSpec()


def _matrix(text, name):
    try:
        mat = np.atleast_2d(np.asarray(json.loads(text), dtype=float))
    except (json.JSONDecodeError, ValueError) as exc:
        raise UsageError(f"{name} must be a JSON number or matrix: {exc}") from None
    return mat


# each command returns (report, ok, csv_text or None)

def cmd_validate(args):
    market = _market(args)
    residuals = market.validate() if hasattr(market, "validate") else {}
    return {"valid": True, "market": market.to_dict(), "residuals": residuals}, True, None


def cmd_conditions(args):
    report = conditions.check_conditions(_market(args), grid_spec=_grid(args))
    return report.to_dict(), report.passed, None


def cmd_alpha(args):
    market = _market(args)
    if market.kind == "gaussian":
        value = engine.alpha_gaussian(market, method=args.method, grid_spec=_grid(args))
    else:
        value = engine.alpha_for(market)
    return value.to_dict(), True, None


def cmd_feasibility(args):
    res = conditions.martingale_feasibility(_market(args), use_reference=args.use_reference,
                                            grid_spec=_grid(args))
    return res.to_dict(), res.feasible, None


def cmd_optimal(args):
    market = _market(args)
    res = conditions.martingale_feasibility(market, grid_spec=_grid(args))
    strat = optimal_strategy(market, grid_spec=_grid(args))
    return {"strategy": strat.to_dict(), "feasibility": res.to_dict()}, True, None


def cmd_exact(args):
    res = oracle.exact_expected_rate(_market(args), _strategy(args), args.n, args.z0, cap=args.cap,
                                     per_node=args.per_node)
    return res.to_dict(), True, None


def cmd_sweep(args):
    if args.d_step <= 0:
        raise UsageError("--d-step must be positive")
    count = int(round((args.d_max - args.d_min) / args.d_step)) + 1
    grid = [round(args.d_min + k * args.d_step, 12) for k in range(count)]
    points = oracle.sweep_fraction(_market(args), grid, args.n, args.z0)
    best = oracle.sweep_argmax(points)
    report = {"n": args.n, "points": [p.__dict__ for p in points], "argmax": best.__dict__}
    return report, True, oracle.sweep_to_csv(points)


def cmd_simulate(args):
    market = _market(args)
    strat = _strategy(args)
    rep = montecarlo.simulate(market, strat, args.n, args.paths, args.seed, args.z0,
                              threads=args.threads, skip_ruin=args.skip_ruin)
    if args.dump_paths:
        text = montecarlo.path_dump_csv(market, strat, args.n, args.paths, args.seed, args.z0,
                                        threads=args.threads)
        with open(args.dump_paths, "w") as fh:
            fh.write(text)
    return rep.to_dict(), True, None


def cmd_drift_test(args):
    rep = montecarlo.drift_test(_market(args), _strategy(args), args.n, args.paths, args.seed, args.z0,
                                threads=args.threads)
    return rep.to_dict(), True, None


def cmd_gaussian_return(args):
    sigma = _matrix(args.sigma, "--sigma")
    sigma0 = _matrix(args.sigma0, "--sigma0")
    g = conditions.construct_return_gaussian(sigma, sigma0, args.D)
    points = np.asarray(json.loads(args.x) if args.x else [[0.0] * sigma.shape[0]], dtype=float)
    points = points.reshape(-1, sigma.shape[0])
    return {"return": g.spec, "points": points.tolist(), "values": g(points).tolist(),
            "growth": g.growth(points).tolist()}, True, None


def cmd_trajectory(args):
    market = _market(args)
    outcomes = json.loads(args.outcomes)
    traj = engine.run_trajectory(market, _strategy(args), len(outcomes), outcomes, args.z0)
    report = {"wealth": traj.wealth.tolist(), "rate": traj.rate.tolist(),
              "compensator": traj.compensator.tolist(), "alpha": traj.alpha}
    return report, True, traj.to_csv()


HANDLERS = {
    "validate": cmd_validate, "conditions": cmd_conditions, "alpha": cmd_alpha,
    "feasibility": cmd_feasibility, "optimal": cmd_optimal, "exact": cmd_exact, "sweep": cmd_sweep,
    "simulate": cmd_simulate, "drift-test": cmd_drift_test, "gaussian-return": cmd_gaussian_return,
    "trajectory": cmd_trajectory,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="weighted-kelly", description="Weighted log-optimal betting engine.",
        epilog=SCHEMA_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, market=True, strategy=False, steps=False, mc=False, grid=False):
        p = sub.add_parser(name, help=help_text, epilog=SCHEMA_HELP,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        if market:
            p.add_argument("--market", required=True, help="market JSON file")
        if strategy:
            p.add_argument("--strategy", help="strategy JSON file")
            p.add_argument("--fraction", type=float, help="constant fraction shortcut instead of --strategy")
        if steps:
            p.add_argument("--n", type=int, required=True, help="number of trials")
            p.add_argument("--z0", type=float, default=1.0, help="initial wealth")
        if mc:
            p.add_argument("--paths", type=int, required=True)
            p.add_argument("--seed", type=int, required=True)
            p.add_argument("--threads", type=int, default=None,
                           help="worker threads (default: WEIGHTED_KELLY_THREADS or cpu count)")
        if grid:
            p.add_argument("--grid", help="grid JSON file for quadrature")
        p.add_argument("--output", "-o", default="-", help="output file (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        return p

    add("validate", "validate a market file")
    add("conditions", "check orthogonality and reference-mass conditions", grid=True)
    p = add("alpha", "compute the compensator increment alpha", grid=True)
    p.add_argument("--method", choices=("auto", "closed-form", "quadrature"), default="auto")
    p = add("feasibility", "decide whether a martingale strategy exists", grid=True)
    p.add_argument("--use-reference", action="store_true",
                   help="use the market's reference weights instead of 1/m")
    add("optimal", "emit the optimal (martingale) strategy", grid=True)
    p = add("exact", "exact expectation by enumeration", strategy=True, steps=True)
    p.add_argument("--cap", type=int, default=oracle.DEFAULT_CAP)
    p.add_argument("--per-node", action="store_true", help="include conditional drift at every node")
    p = add("sweep", "exact expectation over a grid of constant fractions", steps=True)
    p.add_argument("--d-min", type=float, default=0.0)
    p.add_argument("--d-max", type=float, default=0.99)
    p.add_argument("--d-step", type=float, default=0.01)
    p = add("simulate", "Monte Carlo estimate of E[S_n]", strategy=True, steps=True, mc=True)
    p.add_argument("--skip-ruin", action="store_true")
    p.add_argument("--dump-paths", help="write per-path CSV (path, step, Z, S) here")
    add("drift-test", "per-step Monte Carlo drift z-scores", strategy=True, steps=True, mc=True)
    p = add("gaussian-return", "construct the martingale return function", market=False)
    p.add_argument("--sigma", required=True, help="JSON covariance, e.g. '[[1]]'")
    p.add_argument("--sigma0", required=True, help="JSON reference covariance")
    p.add_argument("--D", type=float, required=True)
    p.add_argument("--x", help="JSON list of evaluation points")
    p = add("trajectory", "replay an outcome sequence", strategy=True)
    p.add_argument("--outcomes", required=True, help="JSON list of outcome indices (or points)")
    p.add_argument("--z0", type=float, default=1.0)
    return parser


def _emit(text, path):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "n", 1) is not None and getattr(args, "n", 1) < 1:
        parser.error("--n must be >= 1")
    if getattr(args, "z0", 1.0) <= 0:
        parser.error("--z0 must be positive")
    try:
        report, ok, csv_text = HANDLERS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{parser.prog}: error: {exc}\n\n{SCHEMA_HELP}")
        return 2
    except WeightedKellyError as exc:
        _emit(schemas.dumps({"error": {"name": type(exc).__name__, "message": str(exc)}}) + "\n", args.output)
        return 1
    if args.format == "csv":
        if csv_text is None:
            parser.error(f"{args.command} has no CSV output")
        _emit(csv_text, args.output)
    else:
        _emit(schemas.dumps(report) + "\n", args.output)
    return 0 if ok else 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
