"""Command-line front end: simulate, replay, frontier, fit-slippage.

Exit codes: 0 success, 2 configuration/schema error, 3 data ingestion error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

from .config import ConfigError, ReplayPlan, load_replay_config, load_simulate_config
from .montecarlo import run_experiment, write_report
from .policy import uc_frontier
from .prices import PriceDataError
from .replay import (
    ReplayError,
    above_frontier_split,
    classify_constraint_bound,
    dltv_distribution,
    event_ltv_changes,
    fit_sigma,
    reconstruct_ltv,
    sigma_summary,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

# Mirrors the empirical-slippage report's axis truncation: larger values are
# counted in a footnote instead of being dropped.
SIGMA_FOOTNOTE_CUTOFF = 600.0


def _fmt_usd(v: float) -> str:
    return f"{v:,.2f}"


def cmd_simulate(args: argparse.Namespace) -> int:
    plan = load_simulate_config(
        args.config, seed=args.seed, workers=args.workers, out_dir=args.out_dir)
    s = plan.scenario
    n_total = s.trajectories.count * (2 if s.trajectories.source == "historical" else 1)
    print(f"simulating {n_total} trajectories x {len(s.policies)} policies "
          f"({s.trajectories.horizon} steps, seed={s.seed}, workers={s.workers}) ...")
    report = run_experiment(s)
    report.config_hash = plan.config_hash
    paths = write_report(report, plan.out_dir)

    print(f"{'policy':<28} {'mean final bad debt':>20} {'P(bad debt>0)':>14} {'tail mean':>16}")
    for st in report.policies:
        print(f"{st.name:<28} {_fmt_usd(st.mean_final):>20} "
              f"{st.p_bad_debt:>14.4f} {_fmt_usd(st.tail_mean):>16}")
    print(f"report written to {paths['report']}")
    return EXIT_OK


def _write_sigma_outputs(plan: ReplayPlan, out_dir: str) -> dict:
    events = plan.events
    sigmas = fit_sigma(events, plan.gamma, plan.liquidity)
    split = above_frontier_split(plan.portfolio, plan.prices, events, plan.frontier)
    bound = classify_constraint_bound(
        plan.portfolio, plan.prices, events,
        plan.closing_factor, plan.constraint_tolerance)
    included = [
        not math.isnan(sig) and (plan.include_constraint_bound or not is_bound)
        for sig, is_bound in zip(sigmas, bound)
    ]

    os.makedirs(out_dir, exist_ok=True)
    fit_path = os.path.join(out_dir, "sigma_fit.csv")
    with open(fit_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["event", "timestamp", "repaid_usd", "incentive", "sigma",
                    "above_frontier", "constraint_bound", "included"])
        for k, ev in enumerate(events):
            w.writerow([k + 1, ev.timestamp, repr(ev.repaid_usd), repr(ev.incentive),
                        repr(sigmas[k]), int(split[k]), int(bound[k]), int(included[k])])

    fitted = [s for s, ok in zip(sigmas, included) if ok]
    fitted_split = [up for up, ok in zip(split, included) if ok]
    if fitted:
        med_below, med_above, med_all = sigma_summary(fitted, fitted_split)
    else:
        med_below = med_above = med_all = None
    doc = {
        "config_hash": plan.config_hash,
        "frontier": plan.frontier,
        "gamma": plan.gamma,
        "liquidity": plan.liquidity,
        "events": len(events),
        "fitted": len(fitted),
        "excluded_constraint_bound": int(sum(bound)) if not plan.include_constraint_bound else 0,
        "skipped": sum(1 for s in sigmas if math.isnan(s)),
        "median_below_frontier": _none_if_nan(med_below),
        "median_above_frontier": _none_if_nan(med_above),
        "median_all": _none_if_nan(med_all),
        "count_above_cutoff": sum(1 for s in fitted if s > SIGMA_FOOTNOTE_CUTOFF),
        "cutoff": SIGMA_FOOTNOTE_CUTOFF,
    }
    summary_path = os.path.join(out_dir, "sigma_summary.json")
    with open(summary_path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc


def _none_if_nan(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    return v


def cmd_replay(args: argparse.Namespace) -> int:
    plan = load_replay_config(args.config, out_dir=args.out_dir)
    trace = reconstruct_ltv(plan.portfolio, plan.prices, plan.events)
    changes = event_ltv_changes(trace, plan.events)
    dltv = dltv_distribution(trace, plan.events, plan.frontier)

    os.makedirs(plan.out_dir, exist_ok=True)
    trace_path = os.path.join(plan.out_dir, "ltv_trace.csv")
    with open(trace_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "ltv"])
        for ts, value in trace:
            w.writerow([ts, repr(value)])

    dltv_path = os.path.join(plan.out_dir, "dltv_events.csv")
    with open(dltv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "ltv_init", "ltv_fin", "rel_change", "above_frontier"])
        for ts, init, fin in changes:
            w.writerow([ts, repr(init), repr(fin), repr(fin / init - 1.0),
                        int(init > plan.frontier)])

    summary = _write_sigma_outputs(plan, plan.out_dir)
    if plan.events:
        print(f"replayed {len(plan.events)} events over {len(plan.prices)} price ticks")
        print(f"dLTV split: {len(dltv.below)} below / {len(dltv.above)} above "
              f"frontier {plan.frontier:.6f}")
    else:
        print("no events: trace follows prices only, sigma fit skipped")
    print(f"sigma medians (below/above/all): {summary['median_below_frontier']} / "
          f"{summary['median_above_frontier']} / {summary['median_all']}")
    print(f"outputs written to {plan.out_dir}")
    return EXIT_OK


def cmd_fit_slippage(args: argparse.Namespace) -> int:
    plan = load_replay_config(args.config, out_dir=args.out_dir)
    summary = _write_sigma_outputs(plan, plan.out_dir)
    print(f"fitted {summary['fitted']} of {summary['events']} events; "
          f"median sigma {summary['median_all']}")
    return EXIT_OK


def cmd_frontier(args: argparse.Namespace) -> int:
    try:
        value = uc_frontier(args.incentive)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{value:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liqsim",
        description="Liquidation-spiral simulator and bad-debt analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run the Monte Carlo policy comparison")
    p_sim.add_argument("config", help="TOML experiment file")
    p_sim.add_argument("--seed", type=int, default=None, help="override [run].seed")
    p_sim.add_argument("--workers", type=int, default=None,
                       help="override [run].workers (0 = all cores)")
    p_sim.add_argument("--out-dir", default=None, help="override [run].out_dir")
    p_sim.set_defaults(func=cmd_simulate)

    p_rep = sub.add_parser("replay", help="replay recorded liquidations against prices")
    p_rep.add_argument("config", help="TOML replay file")
    p_rep.add_argument("--out-dir", default=None, help="override [run].out_dir")
    p_rep.set_defaults(func=cmd_replay)

    p_fit = sub.add_parser("fit-slippage", help="fit empirical slippage factors only")
    p_fit.add_argument("config", help="TOML replay file")
    p_fit.add_argument("--out-dir", default=None, help="override [run].out_dir")
    p_fit.set_defaults(func=cmd_fit_slippage)

    p_fr = sub.add_parser("frontier", help="print the UC frontier 1/(1+i)")
    p_fr.add_argument("incentive", type=float, help="liquidation incentive, e.g. 0.045")
    p_fr.set_defaults(func=cmd_frontier)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PriceDataError, ReplayError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
