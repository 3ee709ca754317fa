"""Command-line interface.

Subcommands
-----------
validate   check a scenario file and print derived diagnostics
price      curve coefficients, prices, premiums, and leg values at a state
solve      value-function exponents, discriminants, and spot weights
simulate   ensemble run writing ensemble.csv (and optional paths.csv / SVG)
sweep      one-parameter sensitivity sweep with a comparison CSV and report

Exit codes: 0 success, 2 validation failure, 3 numerical-contract failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .curves import AffineCurves
from .errors import NumericsError, ValidationError
from .experiments import SweepSpec, run_base, run_sweep
from .params import (
    ModelParams,
    base_scenario,
    check_gamma_condition,
    lambda0,
    load_scenario,
    save_scenario,
)
from .replication import LegCalculator
from .riccati import solve_riccati, verify_riccati_ode
from .strategy import control_fractions

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICS = 3


def _load(args) -> ModelParams:
    params = load_scenario(args.scenario) if args.scenario else base_scenario()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "dt", None) is not None:
        overrides["dt"] = args.dt
    if getattr(args, "paths", None) is not None:
        overrides["n_paths"] = args.paths
    return params.with_numerics(**overrides) if overrides else params


def _add_common(p: argparse.ArgumentParser, simulation: bool = False) -> None:
    p.add_argument("--scenario", type=Path, help="scenario file (default: built-in base)")
    if simulation:
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override RNG seed")
        p.add_argument("--dt", type=float, help="override simulation step (years)")
        p.add_argument("--paths", type=int, help="override ensemble size")
        p.add_argument("--workers", type=int, default=1, help="worker threads")
        p.add_argument("--svg", action="store_true", help="also render SVG figures")


def cmd_validate(args) -> int:
    params = _load(args)
    cond = check_gamma_condition(params)
    lam0 = lambda0(params.mortality)
    print(f"scenario OK ({args.scenario if args.scenario else 'built-in base'})")
    print(f"lambda0                 = {lam0:.8g}")
    print(f"gamma bound             = {cond.bound:.8g} "
          f"(rate fraction {cond.rate_fraction:.6g}, "
          f"mortality fraction {cond.mortality_fraction:.6g})")
    print(f"gamma = {params.scheme.gamma:g} -> {'ok' if cond.ok else 'VIOLATES bound'}")
    print(f"delta1, delta2          = {cond.delta1:.8g}, {cond.delta2:.8g}")
    print(f"rate Feller margin      = {params.rate.feller_margin:.8g}")
    print(f"mortality margin at t0  = {params.mortality.feller_margin:.8g}")
    print(f"contribution c          = {params.scheme.contribution:g}")
    print(f"instalment pi           = {params.scheme.instalment:g}")
    if not cond.ok:
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_price(args) -> int:
    params = _load(args)
    curves = AffineCurves(params)
    t, T = args.t, args.maturity
    r = args.rate if args.rate is not None else params.rate.r0
    lam = args.mortality if args.mortality is not None else lambda0(params.mortality)
    cum = args.cum_mortality
    tau = T - t
    f0, f1 = float(curves.f0(tau)), float(curves.f1(tau))
    h0, h1 = curves.h_coefficients(t, T)
    bond = float(curves.bond_price(r, t, T))
    lbond = float(curves.longevity_bond_price(r, lam, cum, t, T))
    prem = curves.risk_premiums(r, lam, t)
    rows = [
        ("f0", f0), ("f1", f1), ("h0", h0), ("h1", h1),
        ("bond_price", bond), ("longevity_bond_price", lbond),
        ("premium_bond", prem.bond),
        ("premium_longevity_bond", prem.longevity_bond),
        ("premium_longevity_part", prem.longevity_part),
        ("premium_stock", prem.stock),
    ]
    if args.legs:
        calc = LegCalculator(params, curves)
        d = calc.contributions_pv(r, t)
        g = calc.guarantee_pv(r, lam, cum, t)
        rows += [
            ("D", d.D), ("alpha_B_D", d.alpha_B_D), ("alpha_0_D", d.alpha_0_D),
            ("G", g.G), ("alpha_L_G", g.alpha_L_G), ("alpha_B_G", g.alpha_B_G),
            ("alpha_0_G", g.alpha_0_G), ("annuity_a", g.annuity_a),
        ]
    if args.csv:
        print("quantity,value")
        for name, value in rows:
            print(f"{name},{value!r}")
    else:
        width = max(len(name) for name, _ in rows)
        for name, value in rows:
            print(f"{name:<{width}}  {value:.10g}")
    return EXIT_OK


def cmd_solve(args) -> int:
    params = _load(args)
    curves = AffineCurves(params)
    sol = solve_riccati(params)
    cond = check_gamma_condition(params)
    times = (
        [float(x) for x in args.times.split(",")]
        if args.times
        else list(np.linspace(0.0, params.scheme.T, args.grid_n))
    )
    if args.csv:
        print("t,A0,A1,A2")
        for t in times:
            print(f"{t!r},{sol.A0(t)!r},{float(sol.A1(t))!r},{float(sol.A2(t))!r}")
    else:
        print(f"delta1 = {sol.delta1:.10g}, delta2 = {sol.delta2:.10g}")
        print(f"gamma bound = {cond.bound:.10g} (gamma = {params.scheme.gamma:g})")
        print(f"{'t':>8} {'A0':>14} {'A1':>14} {'A2':>14}")
        for t in times:
            print(f"{t:8.3f} {sol.A0(t):14.8f} {float(sol.A1(t)):14.8f} "
                  f"{float(sol.A2(t)):14.8f}")
    if args.weights_at is not None:
        uB, uL, uS = control_fractions(args.weights_at, sol, curves)
        print(f"surplus fractions at t={args.weights_at:g}: "
              f"uB={float(uB):.8f} uL={float(uL):.8f} uS={float(uS):.8f} "
              f"u0={1 - float(uB) - float(uL) - float(uS):.8f}")
    if args.verify:
        residual = verify_riccati_ode(sol, grid_n=200)
        print(f"max ODE residual on 200-point grid: {residual:.3e}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = _load(args)
    summary, files = run_base(
        params,
        args.out,
        workers=args.workers,
        store_paths=args.paths_csv,
        svg=args.svg,
    )
    print(f"simulated {summary.n_paths} paths, dt={summary.dt:g}, seed={summary.seed}")
    print(f"Y(0)={summary.Y0:.6f} D(0)={summary.D0:.6f} G(0)={summary.G0:.6f}")
    print(f"terminal mean Y={summary.terminal_Y_mean:.4f} "
          f"mean w_L={float(summary.means['wL'][-1]):.4f}")
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    params = _load(args)
    values = tuple(float(x) for x in args.values.split(","))
    spec = SweepSpec(parameter=args.param, values=values, base=params)
    result = run_sweep(spec, args.out, workers=args.workers, svg=args.svg)
    for value, msg in result.failures.items():
        print(f"value {value:g} failed: {msg}", file=sys.stderr)
    for f in result.files:
        print(f"wrote {f}")
    if not result.summaries:
        print("no sweep value produced a run", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_write_scenario(args) -> int:
    save_scenario(base_scenario(), args.path)
    print(f"wrote {args.path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="longevity-hedge",
        description="Longevity-linked pricing and optimal pension investment",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a scenario and print diagnostics")
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("price", help="curve coefficients, prices, and premiums")
    _add_common(p)
    p.add_argument("--t", type=float, default=0.0, help="valuation date (years)")
    p.add_argument("--maturity", type=float, default=10.0, help="contract maturity (years)")
    p.add_argument("--rate", type=float, help="short rate (default: r0)")
    p.add_argument("--mortality", type=float, help="intensity (default: lambda0)")
    p.add_argument("--cum-mortality", type=float, default=0.0,
                   help="realised integral of the intensity up to t")
    p.add_argument("--legs", action="store_true", help="also print D/G legs and holdings")
    p.add_argument("--csv", action="store_true", help="CSV output")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("solve", help="value-function exponents and spot weights")
    _add_common(p)
    p.add_argument("--times", help="comma-separated evaluation dates")
    p.add_argument("--grid-n", type=int, default=11, help="grid size when --times absent")
    p.add_argument("--weights-at", type=float, help="print surplus fractions at a date")
    p.add_argument("--verify", action="store_true", help="check the defining ODEs")
    p.add_argument("--csv", action="store_true", help="CSV output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="ensemble simulation to CSV")
    _add_common(p, simulation=True)
    p.add_argument("--paths-csv", action="store_true", help="also write per-path CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="one-parameter sensitivity sweep")
    _add_common(p, simulation=True)
    p.add_argument("--param", required=True, help="parameter to sweep")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("write-scenario", help="write the built-in base scenario file")
    p.add_argument("path", type=Path)
    p.set_defaults(func=cmd_write_scenario)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericsError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
