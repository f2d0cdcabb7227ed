"""Command-line interface.

Subcommands: design, simulate, evaluate, verify, reproduce. Every command is
deterministic given its flags; Monte Carlo commands require an explicit
--rng seed. Exit codes: 0 success, 1 usage error, 2 numerical failure (or a
failed verification).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import evaluation, mechanism, model, pricing

FIG1_INSTANCE_NOTE = (
    "fig1 uses a documented substitute instance: the staircase family with "
    "L=1, U=100, k=5, eps=(U-L)/200, truncated at the lattice value nearest "
    "(L+U)/2, on which a single static price earns zero welfare with "
    "probability about 0.12."
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def _add_market_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--L", type=float, required=True, help="price lower bound")
    p.add_argument("--U", type=float, required=True, help="price upper bound")
    p.add_argument("--k", type=int, required=True, help="inventory")
    p.add_argument("--cap", type=int, default=None, help="allowed price changes")
    p.add_argument("--delta", type=float, default=1.0, help="tail probability")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cppm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", parents=[], help="construct and save a pricing profile")
    _add_market_args(p)
    p.add_argument("--mode", required=True,
                   choices=["neutral", "static", "fully-dynamic", "delta-dynamic"])
    p.add_argument("--policy", default="even-split",
                   help="reservation policy: even-split, ceil-first, or comma-separated ints")
    p.add_argument("--grid-size", type=int, default=pricing.DEFAULT_GRID_SIZE)
    p.add_argument("--alpha-tol", type=float, default=1e-8)
    p.add_argument("--out", required=True, help="profile file to write")

    p = sub.add_parser("simulate", help="run the mechanism or a baseline, write CSV")
    p.add_argument("--profile", help="profile file (for the correlated mechanism)")
    p.add_argument("--instance", required=True, help="instance file, one valuation per line")
    p.add_argument("--seed", type=float, help="single realized seed in [0, 1]")
    p.add_argument("--seed-grid", type=int, help="evaluate midpoints of this many seed cells")
    p.add_argument("--algo", choices=["cppm", "r-static", "d-dynamic", "r-dynamic"],
                   default="cppm")
    p.add_argument("--runs", type=int, help="Monte Carlo runs (baselines)")
    p.add_argument("--rng", type=int, help="Monte Carlo rng seed (required with --runs)")
    p.add_argument("--trace", action="store_true",
                   help="per-buyer trace CSV instead of per-seed welfare")
    _add_market_args_optional(p)
    p.add_argument("--grid-size", type=int, default=2000,
                   help="grid size for baseline profiles built on the fly")
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="ratio report OPT/CVaR over instances")
    p.add_argument("--profile", required=True)
    p.add_argument("--instance", action="append", default=[],
                   help="instance file (repeatable)")
    p.add_argument("--hard-family", action="store_true",
                   help="evaluate every truncation of the staircase family")
    p.add_argument("--eps", type=float, help="staircase step (default (U-L)/200)")
    p.add_argument("--delta", type=float, help="tail probability (default: profile's)")
    p.add_argument("--m-seeds", type=int, default=evaluation.DEFAULT_SEED_CELLS)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="exhaustive structural property checks")
    p.add_argument("--profile", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--which", choices=["monotonicity", "floor", "rounding", "all"],
                   default="all")
    p.add_argument("--resolution", type=int, default=evaluation.DEFAULT_LEMMA_RESOLUTION)

    p = sub.add_parser("reproduce", help="figure-sweep CSV bundles")
    p.add_argument("--figure", required=True, choices=["fig1", "fig3", "fig4"])
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--grid-size", type=int, default=4000)
    p.add_argument("--runs", type=int, default=10_000, help="fig1 Monte Carlo runs")
    p.add_argument("--rng", type=int, help="fig1 rng seed (required)")
    return parser


def _add_market_args_optional(p: argparse.ArgumentParser) -> None:
    p.add_argument("--L", type=float)
    p.add_argument("--U", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--delta", type=float, default=1.0)


def _parse_policy(text: str):
    if text in ("even-split", "ceil-first"):
        return text
    try:
        return tuple(int(tok) for tok in text.split(","))
    except ValueError:
        raise ValueError(f"bad reservation policy: {text!r}") from None


def _cmd_design(args) -> int:
    cap = args.cap
    if cap is None:
        cap = {"static": 0, "fully-dynamic": args.k - 1}.get(args.mode)
        if cap is None:
            raise ValueError("--cap is required for this mode")
    params = model.MarketParams(L=args.L, U=args.U, k=args.k, delta_cap=cap,
                                delta_risk=args.delta)
    req = pricing.DesignRequest(params=params, reservation_policy=_parse_policy(args.policy),
                                grid_size=args.grid_size, alpha_tolerance=args.alpha_tol)
    designer = {
        "neutral": pricing.design_risk_neutral,
        "static": pricing.design_static_risk,
        "fully-dynamic": pricing.design_fully_dynamic,
        "delta-dynamic": pricing.design_delta_dynamic,
    }[args.mode]
    profile = designer(req)
    check = model.validate_profile(profile)
    if not check:
        raise RuntimeError(f"designed profile failed validation: {check.message}")
    model.save_profile(profile, args.out)
    print(f"alpha={profile.alpha:.17g}")
    return 0


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _cmd_simulate(args) -> int:
    instance = model.load_instance(args.instance)
    if args.algo == "cppm":
        if not args.profile:
            raise ValueError("--profile is required for the correlated mechanism")
        profile = model.load_profile(args.profile)
        check = model.validate_profile(profile)
        if not check:
            raise ValueError(f"profile failed validation: {check.message}")
        res = model.validate(profile.params, instance)
        if not res:
            raise ValueError(res.message)
        if args.seed is not None:
            outcome = mechanism.run_cppm(profile, instance, args.seed)
            if args.trace:
                _write_trace(args.out, profile, instance, [outcome])
            else:
                _write_csv(args.out, ["seed_mid", "welfare"],
                           [[f"{args.seed:.17g}", f"{outcome.welfare:.17g}"]])
            return 0
        m = args.seed_grid or evaluation.DEFAULT_SEED_CELLS
        seeds = evaluation.seed_midpoints(m)
        if args.trace:
            outs = [mechanism.run_cppm(profile, instance, float(r)) for r in seeds]
            _write_trace(args.out, profile, instance, outs)
        else:
            welfare, _ = mechanism.run_seed_grid(profile, instance.as_array(), seeds)
            _write_csv(args.out, ["seed_mid", "welfare"],
                       [[f"{r:.17g}", f"{w:.17g}"] for r, w in zip(seeds, welfare)])
        return 0

    # baselines need market parameters
    if args.L is None or args.U is None or args.k is None:
        raise ValueError("baselines need --L --U --k")
    params = model.MarketParams(L=args.L, U=args.U, k=args.k,
                                delta_cap=max(args.k - 1, 0), delta_risk=args.delta)
    if args.algo == "d-dynamic":
        outcome = mechanism.run_d_dynamic(params, instance)
        _write_csv(args.out, ["run", "welfare"], [[1, f"{outcome.welfare:.17g}"]])
        return 0
    if args.runs is None:
        raise ValueError("baselines need --runs")
    if args.rng is None:
        raise ValueError("Monte Carlo needs an explicit --rng seed")
    rng = np.random.Generator(np.random.Philox(args.rng))
    if args.algo == "r-static":
        seeds = rng.random(args.runs)
        prof = mechanism.static_profile(params, args.grid_size)
        welfare, _ = mechanism.run_seed_grid(prof, instance.as_array(), seeds)
    else:  # r-dynamic
        seed_matrix = rng.random((args.runs, params.k))
        welfare = mechanism.run_r_dynamic_grid(params, instance.as_array(), seed_matrix)
    _write_csv(args.out, ["run", "welfare"],
               [[i + 1, f"{w:.17g}"] for i, w in enumerate(welfare)])
    return 0


def _write_trace(path: str, profile: model.PricingProfile, instance: model.Instance,
                 outcomes: list[model.SeedOutcome]) -> None:
    thresholds = profile.level_thresholds()
    rows = []
    for outcome in outcomes:
        y = 0
        for t, (v, x, p) in enumerate(
                zip(instance.valuations, outcome.allocations, outcome.posted_prices),
                start=1):
            j = min(int(np.searchsorted(thresholds[1:], y, side="right")),
                    profile.n_levels - 1)
            y += x
            rows.append([f"{outcome.seed:.17g}", t, f"{v:.17g}", j + 1,
                         f"{p:.17g}", x, y])
    _write_csv(path, ["seed", "t", "v_t", "level", "price", "accepted", "y_after"], rows)


def _cmd_evaluate(args) -> int:
    profile = model.load_profile(args.profile)
    delta = args.delta if args.delta is not None else profile.params.delta_risk
    if args.hard_family:
        eps = args.eps or (profile.params.U - profile.params.L) / 200
        if eps <= 0:
            raise ValueError("degenerate market (L = U) needs an explicit --eps")
        report = evaluation.cvar_cr_hard_family(profile, eps, delta, args.m_seeds)
    elif args.instance:
        insts = [(Path(f).name, model.load_instance(f)) for f in args.instance]
        report = evaluation.cvar_cr(profile, insts, delta, args.m_seeds)
    else:
        raise ValueError("need --hard-family or at least one --instance")
    _write_csv(args.out, ["instance_id", "opt", "cvar", "ratio"],
               [[r.instance_id, f"{r.opt:.17g}", f"{r.cvar:.17g}", f"{r.ratio:.17g}"]
                for r in report.rows])
    print(f"worst_ratio={report.worst_ratio:.10g} designed_alpha={report.designed_alpha:.10g}")
    if report.flagged:
        print(f"flagged={','.join(report.flagged)}")
    return 0


def _cmd_verify(args) -> int:
    profile = model.load_profile(args.profile)
    instance = model.load_instance(args.instance)
    which = (["monotonicity", "floor", "rounding"] if args.which == "all"
             else [args.which])
    if "rounding" in which and any(q != 1 for q in profile.reservation):
        if args.which == "all":
            which.remove("rounding")
        else:
            raise ValueError("rounding check needs a per-unit profile")
    failed = False
    for name in which:
        report = evaluation.verify_lemma(profile, instance, name, args.resolution)
        status = "pass" if report.passed else f"FAIL ({report.detail})"
        print(f"{name}: {status}")
        failed = failed or not report.passed
    return 2 if failed else 0


def _cmd_reproduce(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    L, U = 1.0, 100.0
    if args.figure == "fig3":
        rows = []
        for delta in (0.2, 0.6, 0.9):
            for k in range(3, 101):
                params = model.MarketParams(L=L, U=U, k=k, delta_cap=k - 1,
                                            delta_risk=delta)
                req = pricing.DesignRequest(params=params, grid_size=args.grid_size)
                try:
                    alpha = pricing.design_fully_dynamic(req).alpha
                except (RuntimeError, ValueError) as exc:
                    print(f"fig3 row k={k} delta={delta} failed: {exc}", file=sys.stderr)
                    alpha = math.nan
                rows.append([k, k - 1, delta, L, U,
                             f"{alpha:.17g}", args.grid_size])
        _write_csv(outdir / "fig3.csv",
                   ["k", "delta_cap", "delta_risk", "L", "U", "alpha", "grid_size"], rows)
        print(f"wrote {outdir / 'fig3.csv'} ({len(rows)} rows)")
        return 0
    if args.figure == "fig4":
        k = 40
        rows = []
        for delta in (0.2, 0.4, 0.8):
            for cap in range(1, 40):
                params = model.MarketParams(L=L, U=U, k=k, delta_cap=cap,
                                            delta_risk=delta)
                req = pricing.DesignRequest(params=params, reservation_policy="ceil-first",
                                            grid_size=args.grid_size)
                try:
                    alpha = pricing.design_delta_dynamic(req).alpha
                except (RuntimeError, ValueError) as exc:
                    print(f"fig4 row cap={cap} delta={delta} failed: {exc}", file=sys.stderr)
                    alpha = math.nan
                rows.append([k, cap, delta, L, U, f"{alpha:.17g}", args.grid_size])
        _write_csv(outdir / "fig4.csv",
                   ["k", "delta_cap", "delta_risk", "L", "U", "alpha", "grid_size"], rows)
        print(f"wrote {outdir / 'fig4.csv'} ({len(rows)} rows)")
        return 0
    # fig1
    if args.rng is None:
        raise ValueError("fig1 is Monte Carlo and needs an explicit --rng seed")
    params = model.MarketParams(L=L, U=U, k=5, delta_cap=4, delta_risk=1.0)
    eps = (U - L) / 200
    stop = L + round(((L + U) / 2 - L) / eps) * eps
    instance = evaluation.hard_instance(params, eps, stop)
    vals = instance.as_array()
    rng = np.random.Generator(np.random.Philox(args.rng))
    rows = []
    static_prof = mechanism.static_profile(params, args.grid_size)
    w_static, _ = mechanism.run_seed_grid(static_prof, vals, rng.random(args.runs))
    rows += [["r-static", i + 1, f"{w:.17g}"] for i, w in enumerate(w_static)]
    w_det = mechanism.run_d_dynamic(params, instance).welfare
    rows += [["d-dynamic", i + 1, f"{w_det:.17g}"] for i in range(args.runs)]
    w_dyn = mechanism.run_r_dynamic_grid(params, vals, rng.random((args.runs, params.k)))
    rows += [["r-dynamic", i + 1, f"{w:.17g}"] for i, w in enumerate(w_dyn)]
    _write_csv(outdir / "fig1.csv", ["algo", "run", "welfare"], rows)
    print(f"wrote {outdir / 'fig1.csv'} ({len(rows)} rows)")
    print(FIG1_INSTANCE_NOTE)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse signals usage errors (and -h) this way
        return int(exc.code or 0)
    handlers = {
        "design": _cmd_design,
        "simulate": _cmd_simulate,
        "evaluate": _cmd_evaluate,
        "verify": _cmd_verify,
        "reproduce": _cmd_reproduce,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
