"""Command-line front end.

    etmrs validate --config scenario.json
    etmrs run --config scenario.json --out results.csv [--mc | --no-mc] [--threads K] [--seed S]

``run`` writes one CSV row per sweep point in sweep order, flushing after
each row. Exit codes: 0 success, 2 configuration error, 3 numerical or
feasibility error.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from .analysis import system_outage
from .bounds import upper_bound_outage
from .errors import AlphaExceedsCapacity, EtmrsError, SearchSpaceTooLarge, SingularSystem, TooManyRelays
from .optimizer import search_full, search_heuristic, search_iid
from .scenario_file import ScenarioFile, SweepPoint, load
from .simulator import simulate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

COLUMNS = [
    "point", "P_dbm", "P_w", "N0_w", "kappa", "eta", "C", "L", "alpha", "N", "policy",
    "chi", "chi_index", "p_out_analytic", "p_empty", "p_out_ub",
    "p_out_mc", "mc_ci_low", "mc_ci_high", "mc_blocks", "mc_seed", "mc_battery_mode",
]


def fmt(x) -> str:
    """Fixed 17-significant-digit decimal, empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, (list, tuple)):
        return ";".join(fmt(v) for v in x)
    if isinstance(x, (bool, str)):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def _thresholds(sf: ScenarioFile, pt: SweepPoint):
    if sf.policy == "chi":
        return sf.scenario(pt)
    base = sf.scenario(pt)
    if sf.policy == "optimize:iid":
        r = base.relays[0]
        res = search_iid(sf.N, r.sr, r.rd, base.radio, base.spec)
    elif sf.policy == "optimize:full":
        res = search_full(base)
    else:
        res = search_heuristic(base)
    return sf.scenario(pt, res.chi_indices)


def evaluate_point(sf: ScenarioFile, pt: SweepPoint, mc: bool, seed: int | None) -> list[str]:
    scenario = _thresholds(sf, pt)
    rep = system_outage(scenario)
    ub = upper_bound_outage(scenario).p_out_ub if sf.bound else None
    mc_vals = [None] * 6
    if mc:
        cfg = sf.sim_config(seed)
        sim = simulate(scenario, cfg)
        lo, hi = sim.ci95
        mc_vals = [sim.outage_rate, lo, hi, sim.blocks, cfg.seed, cfg.battery_mode]
    row = [
        pt.index, pt.P_dbm, pt.P, sf.N0, sf.kappa, sf.eta, pt.C, pt.L, sf.alpha, sf.N, sf.policy,
        [r.policy.chi for r in scenario.relays], list(scenario.chi_indices),
        rep.p_out, rep.p_empty, ub, *mc_vals,
    ]
    return [fmt(v) for v in row]


def _print_diags(diags, stream):
    for d in diags:
        print(f"  {d}", file=stream)


def cmd_validate(args) -> int:
    sf, diags = load(args.config)
    if not diags:
        print("OK")
        return EXIT_OK
    print(f"{args.config}: {len(diags)} problem(s)")
    _print_diags(diags, sys.stdout)
    return EXIT_CONFIG if any(d.kind == "config" for d in diags) else EXIT_NUMERIC


def cmd_run(args) -> int:
    sf, diags = load(args.config)
    if diags:
        print(f"error: {args.config} failed validation", file=sys.stderr)
        _print_diags(diags, sys.stderr)
        return EXIT_CONFIG if any(d.kind == "config" for d in diags) else EXIT_NUMERIC
    mc = args.mc if args.mc is not None else sf.sim is not None
    points = sf.points()
    t0 = time.perf_counter()
    try:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            fh.flush()
            with ThreadPoolExecutor(max_workers=max(1, args.threads)) as ex:
                rows = ex.map(lambda pt: evaluate_point(sf, pt, mc, args.seed), points)
                for pt, row in zip(points, rows):
                    w.writerow(row)
                    fh.flush()
                    print(f"point {pt.index + 1}/{len(points)} done "
                          f"({time.perf_counter() - t0:.2f} s elapsed)", file=sys.stderr)
    except (AlphaExceedsCapacity, TooManyRelays, SearchSpaceTooLarge, SingularSystem) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except EtmrsError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error: cannot write {args.out}: {e.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="etmrs", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a scenario file without running it")
    v.add_argument("--config", required=True, metavar="PATH")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", help="evaluate every sweep point and write a CSV")
    r.add_argument("--config", required=True, metavar="PATH")
    r.add_argument("--out", required=True, metavar="PATH")
    g = r.add_mutually_exclusive_group()
    g.add_argument("--mc", dest="mc", action="store_true", default=None,
                   help="run the Monte Carlo simulator (default: only if the file has a sim section)")
    g.add_argument("--no-mc", dest="mc", action="store_false")
    r.add_argument("--threads", type=int, default=1, metavar="K",
                   help="sweep points evaluated concurrently")
    r.add_argument("--seed", type=int, default=None, metavar="S", help="overrides sim.seed")
    r.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "seed", None) is not None and args.seed < 0:
        print("error: --seed must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
