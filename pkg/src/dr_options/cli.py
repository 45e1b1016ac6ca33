"""dr-options command line.

Exit codes: 0 success, 2 invalid configuration or violated assumptions,
3 solver failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import options as opt
from . import plotting
from .models import ConfigError, MarketInstance, build_case_study, load_instance, validate_assumptions
from .numerics import DEFAULT_TOL, NumericsError, Tolerances
from .planner import solve_dr, solve_no_dr
from .simulate import monte_carlo, options_bundle, planner_bundle, spot_bundle
from .spot import spot_equilibrium, verify_social_optimality

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_USAGE = 0, 2, 3, 64
TOL_ENV = "DR_OPTIONS_TOL"

# headline values printed in the literature for the case study, shown next to ours
PUBLISHED = {
    "q_ndr": 1.23, "J_ndr": 56.77, "q_dr": 0.84, "J_dr": 53.95,
    "regime_i_end": 20.3, "regime_iii_start": 31.8,
}
PUBLISHED_FIGURE_POINTS = {  # strike: (pi_o, x, q)
    15.0: (11.759, 0.3919, 0.8383),
    24.1: (2.658, 0.4177, 0.8360),
    28.7: (0.0, 0.4567, 1.1857),
    38.0: (0.0, 0.0, 1.2302),
}

log = logging.getLogger("dr_options")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def write_csv(rows, path, header=None) -> None:
    """RFC-4180 CSV with a header row, 12 significant digits and LF line endings.

    ``rows`` holds dataclass instances (header taken from the fields) or
    plain sequences, in which case ``header`` is required.
    """
    rows = list(rows)
    if header is None:
        if rows and dataclasses.is_dataclass(rows[0]):
            header = [f.name for f in dataclasses.fields(rows[0])]
        else:
            raise ValueError("header is required for non-dataclass rows")
    header = list(header)
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                vals = [getattr(r, h) for h in header] if dataclasses.is_dataclass(r) else list(r)
                if len(vals) != len(header):
                    raise ValueError(f"row has {len(vals)} fields, header has {len(header)}")
                w.writerow([_fmt(v) for v in vals])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _sweep_rows(rows):
    return [r.as_tuple() for r in rows]


def _write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o).__name__)


def _clean(d: dict) -> dict:
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


# ---------------------------------------------------------------------------
# argument parsing


def parse_tolerances(text: str, base: Tolerances = DEFAULT_TOL) -> Tolerances:
    """'quad_rel=1e-9,root_abs=1e-12' -> Tolerances."""
    pairs = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"tolerance override {item!r} is not KEY=VALUE")
        pairs[key.strip()] = val.strip()
    return base.updated(**pairs)


def resolve_tolerances(flag: list[str] | None, env: dict | None = None) -> Tolerances:
    """Precedence: --tol flag, then the DR_OPTIONS_TOL variable, then defaults."""
    env = os.environ if env is None else env
    tol = DEFAULT_TOL
    if env.get(TOL_ENV):
        tol = parse_tolerances(env[TOL_ENV], tol)
    for text in flag or []:
        tol = parse_tolerances(text, tol)
    return tol


def parse_sweep(text: str) -> list[float]:
    try:
        a, b, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"sweep must be START:STOP:STEP, got {text!r}") from None
    if step <= 0 or b < a:
        raise argparse.ArgumentTypeError("sweep needs STEP > 0 and STOP >= START")
    n = int(math.floor((b - a) / step + 1e-9))
    return [round(a + i * step, 10) for i in range(n + 1)]


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="JSON", help="market instance file")
    src.add_argument("--case-study", action="store_true", help="use the built-in 3 MWh case study")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory (default: .)")
    common.add_argument("--jobs", type=_positive_int, default=1, help="worker processes for sweeps")
    common.add_argument("--tol", action="append", metavar="KEY=VAL[,KEY=VAL]",
                        help=f"tolerance overrides (quad_rel, root_abs, min_abs, max_iter); "
                             f"beats ${TOL_ENV}")
    common.add_argument("-v", "--verbose", action="store_true", help="log solver warnings")

    p = _Parser(prog="dr-options", description="Demand-response market solvers.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("validate", parents=[common], help="check the modelling assumptions")

    sp = sub.add_parser("planner", parents=[common], help="social-planner benchmark")
    sp.add_argument("--no-dr", action="store_true", help="solve without demand response")

    sub.add_parser("spot", parents=[common], help="spot-market equilibrium")

    for name, helptext in (("options-original", "original options market"),
                           ("options-redesigned", "redesigned options market (q + x = l')")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--strike", type=float, metavar="S", help="single strike price")
        g.add_argument("--sweep", type=parse_sweep, metavar="A:B:STEP", help="strike grid")
        if name == "options-redesigned":
            sp.add_argument("--lprime", type=float, metavar="L",
                            help="offer size l' (default: no-DR day-ahead purchase)")

    sp = sub.add_parser("strike-opt", parents=[common], help="cost-minimizing strike price")
    sp.add_argument("--lprime", type=float, metavar="L",
                    help="offer size l' (default: no-DR day-ahead purchase)")

    sp = sub.add_parser("montecarlo", parents=[common], help="ex-post Monte-Carlo check")
    sp.add_argument("--n", type=_positive_int, default=100_000, help="draws (>= 10000, default 100000)")
    sp.add_argument("--seed", type=int, default=0, help="64-bit seed (default 0)")
    sp.add_argument("--bundle", choices=("planner", "spot", "options"), default="planner",
                    help="decisions to simulate")
    sp.add_argument("--strike", type=float, metavar="S",
                    help="strike for the options bundle (default: optimal strike)")
    sp.add_argument("--lprime", type=float, metavar="L", help="offer size for the options bundle")

    sp = sub.add_parser("report", parents=[common],
                        help="run everything and write fig3..fig10 CSV, PNG and a gnuplot script")
    sp.add_argument("--sweep", type=parse_sweep, metavar="A:B:STEP",
                    help="strike grid (default: phi'(0) to 1.25 x the top mean RT price, step 0.1)")
    return p


# ---------------------------------------------------------------------------
# commands


def _instance(args, required=True) -> MarketInstance:
    if args.config:
        return load_instance(args.config)
    if args.case_study or not required:
        return build_case_study()
    raise UsageError("one of --config or --case-study is required")


def _check(inst) -> bool:
    rep = validate_assumptions(inst)
    for check, line in zip(rep.checks, rep.lines()):
        if not check.passed:
            print(line, file=sys.stderr)
    return rep.passed


def cmd_validate(args, inst, tol, out):
    rep = validate_assumptions(inst)
    for line in rep.lines():
        print(line)
    return EXIT_OK if rep.passed else EXIT_INVALID


def cmd_planner(args, inst, tol, out):
    sol = solve_no_dr(inst, tol) if args.no_dr else solve_dr(inst, tol)
    if sol.warning:
        print(f"warning: {sol.warning}", file=sys.stderr)
    print(f"q = {sol.q:.10g}")
    print(f"expected_cost = {sol.expected_cost:.10g}")
    write_csv(zip(sol.policy.s_nodes, sol.policy.y_nodes, sol.policy.weights),
              out / "planner.csv", ["s", "y", "weight"])
    return EXIT_OK


def cmd_spot(args, inst, tol, out):
    ref = solve_dr(inst, tol)
    eq = spot_equilibrium(inst, tol, planner=ref)
    print(f"q_star = {eq.q_star:.10g}")
    print(f"j_lse = {eq.j_lse:.10g}\nj_agg = {eq.j_agg:.10g}\nj_cp = {eq.j_cp:.10g}")
    for line in verify_social_optimality(eq, ref).lines():
        print(line)
    write_csv(eq.curve(), out / "spot.csv", ["s", "y", "price"])
    return EXIT_OK


def _print_eq(eq):
    for k in opt.SWEEP_COLUMNS:
        print(f"{k} = {getattr(eq, k):.10g}")
    print(f"regime = {eq.regime}")
    if "boundary" in eq.diagnostics:
        print(f"note: boundary equilibrium ({eq.diagnostics['boundary']})")


def _lprime(args, inst, tol):
    return args.lprime if getattr(args, "lprime", None) is not None else opt.default_l_prime(inst, tol)


def _options(args, inst, tol, out, variant):
    lp = _lprime(args, inst, tol) if variant == "redesigned" else None
    name = f"options_{variant}"
    if args.strike is not None:
        if variant == "original":
            eq = opt.solve_original_ce(inst, args.strike, tol)
        else:
            eq = opt.solve_redesigned_ce(inst, lp, args.strike, tol)
        _print_eq(eq)
        write_csv([opt.StrikeSweepRow.from_equilibrium(eq).as_tuple()], out / f"{name}.csv",
                  opt.SWEEP_COLUMNS)
        return EXIT_OK
    rows = opt.strike_sweep(inst, variant, lp, args.sweep, tol, args.jobs)
    write_csv(_sweep_rows(rows), out / f"{name}_sweep.csv", opt.SWEEP_COLUMNS)
    failed = [r for r in rows if r.error]
    for r in failed:
        print(f"strike {r.pi_sp:g}: {r.error}", file=sys.stderr)
    print(f"{len(rows)} strikes, {len(failed)} failed -> {out / (name + '_sweep.csv')}")
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_options_original(args, inst, tol, out):
    return _options(args, inst, tol, out, "original")


def cmd_options_redesigned(args, inst, tol, out):
    return _options(args, inst, tol, out, "redesigned")


def cmd_strike_opt(args, inst, tol, out):
    lp = _lprime(args, inst, tol)
    res = opt.optimal_strike(inst, lp, tol)
    print(f"l_prime = {lp:.10g}")
    print(f"pi_sp_star = {res.pi_sp_star:.10g}")
    print(f"fixed_point = {res.fixed_point:.10g}")
    print(f"fixed_point_residual = {res.residual:.3e}" if not math.isnan(res.residual)
          else "fixed_point_residual = undefined (no partial-exercise states)")
    _print_eq(res.eq)
    payload = _clean({"l_prime": lp, "pi_sp_star": res.pi_sp_star, "fixed_point": res.fixed_point,
                      "residual": res.residual, "bracket": list(res.bracket)})
    payload["equilibrium"] = opt.equilibrium_dict(res.eq)
    _write_json(payload, out / "strike_opt.json")
    return EXIT_OK


def cmd_montecarlo(args, inst, tol, out):
    if args.n < 10_000:
        raise UsageError("--n must be at least 10000")
    if args.bundle == "planner":
        sol = solve_dr(inst, tol)
        bundle, ref = planner_bundle(inst, sol), {"system": sol.expected_cost}
    elif args.bundle == "spot":
        eq = spot_equilibrium(inst, tol)
        bundle = spot_bundle(inst, eq.q_star)
        ref = {"lse": eq.j_lse, "agg": eq.j_agg, "system": eq.j_cp}
    else:
        lp = _lprime(args, inst, tol)
        if args.strike is None:
            eq = opt.optimal_strike(inst, lp, tol).eq
        else:
            eq = opt.solve_redesigned_ce(inst, lp, args.strike, tol)
        bundle = options_bundle(inst, eq)
        ref = {"lse": eq.j_lse, "agg": eq.j_agg, "system": eq.j_cp}
    rep = monte_carlo(inst, bundle, args.n, args.seed, ref, args.jobs)
    print(rep.to_json())
    (out / "montecarlo.json").write_text(rep.to_json() + "\n")
    return EXIT_OK


def _first_strike(rows, pred):
    for r in rows:
        if not r.error and pred(r):
            return r.pi_sp
    return math.nan


def report_strike_grid(inst, step=0.1) -> list[float]:
    """Default strike grid capped where exercise has long stopped."""
    lo = float(inst.disutility.d1(0.0))
    top = float(np.max(inst.rt_price.mean(np.linspace(0.0, 1.0, 101))))
    hi = min(float(inst.disutility.d1(inst.load_l)) + 5.0, math.ceil(1.25 * top))
    return parse_sweep(f"{lo}:{max(hi, lo)}:{step}")


def cmd_report(args, inst, tol, out):
    grid = args.sweep or report_strike_grid(inst)
    ndr = solve_no_dr(inst, tol)
    dr = solve_dr(inst, tol)
    sp = spot_equilibrium(inst, tol, planner=dr)
    lp = ndr.q
    orig = opt.strike_sweep(inst, "original", None, grid, tol, args.jobs)
    red = opt.strike_sweep(inst, "redesigned", lp, grid, tol, args.jobs)
    best = opt.optimal_strike(inst, lp, tol)

    s = np.linspace(0.0, 1.0, 201)
    y_best = opt.exercise_policy_vec(inst, best.eq.q, best.eq.x, best.pi_sp_star, s)
    tables = {
        "fig3": (["s", "y_spot"], list(zip(sp.s, sp.y))),
        "fig4": (["s", "price_spot"], list(zip(sp.s, sp.price))),
        "fig5": (["pi_sp", "pi_o_original", "pi_o_redesigned"],
                 [(a.pi_sp, a.pi_o, b.pi_o) for a, b in zip(orig, red)]),
        "fig6": (["pi_sp", "x_original", "x_redesigned"],
                 [(a.pi_sp, a.x, b.x) for a, b in zip(orig, red)]),
        "fig7": (["pi_sp", "q_original", "q_redesigned"],
                 [(a.pi_sp, a.q, b.q) for a, b in zip(orig, red)]),
        "fig8": (["s", "y_options"], list(zip(s, y_best))),
        "fig9": (["s", "pdf", "cdf"], list(zip(s, inst.info_state.pdf(s), inst.info_state.cdf(s)))),
        "fig10": (["pi_sp", "j_original", "j_redesigned", "j_spot", "j_ndr"],
                  [(a.pi_sp, a.j_cp, b.j_cp, sp.j_cp, ndr.expected_cost) for a, b in zip(orig, red)]),
    }
    for name, (header, rows) in tables.items():
        write_csv(rows, out / f"{name}.csv", header)
        plotting.render(name, header, rows, out)
    (out / "figures.gp").write_text(plotting.gnuplot_script({k: v[0] for k, v in tables.items()}))
    write_csv(_sweep_rows(orig), out / "sweep_original.csv", opt.SWEEP_COLUMNS)
    write_csv(_sweep_rows(red), out / "sweep_redesigned.csv", opt.SWEEP_COLUMNS)

    ours = {
        "q_ndr": ndr.q, "J_ndr": ndr.expected_cost, "q_dr": dr.q, "J_dr": dr.expected_cost,
        "regime_i_end": _first_strike(red, lambda r: r.s1 < 1.0),
        "regime_iii_start": _first_strike(red, lambda r: r.x == 0.0 or r.s2 == 0.0),
    }
    comparison = [(k, ours[k], PUBLISHED[k]) for k in PUBLISHED]
    by_strike = {r.pi_sp: r for r in orig}
    for strike, (po, x, q) in PUBLISHED_FIGURE_POINTS.items():
        r = by_strike.get(strike) or opt._sweep_row(inst, "original", None, tol, strike)
        comparison += [(f"orig_pi_o@{strike:g}", r.pi_o, po), (f"orig_x@{strike:g}", r.x, x),
                       (f"orig_q@{strike:g}", r.q, q)]
    write_csv(comparison, out / "comparison.csv", ["quantity", "computed", "published"])

    print(f"{'quantity':<18}{'computed':>14}{'published':>12}")
    for k, a, b in comparison:
        print(f"{k:<18}{a:>14.6g}{b:>12.6g}")
    print(f"optimal strike {best.pi_sp_star:.6g}, J = {best.eq.j_cp:.8g}, "
          f"welfare gap {best.eq.j_cp - sp.j_cp:.6g}")
    failed = [r for r in orig + red if r.error]
    for r in failed:
        print(f"strike {r.pi_sp:g}: {r.error}", file=sys.stderr)
    print(f"wrote fig3..fig10 (.csv, .png), figures.gp, sweeps and comparison.csv to {out}")
    return EXIT_SOLVER if failed else EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "planner": cmd_planner,
    "spot": cmd_spot,
    "options-original": cmd_options_original,
    "options-redesigned": cmd_options_redesigned,
    "strike-opt": cmd_strike_opt,
    "montecarlo": cmd_montecarlo,
    "report": cmd_report,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        tol = resolve_tolerances(args.tol)
        inst = _instance(args, required=args.command != "report")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command != "validate" and not _check(inst):
            return EXIT_INVALID
        return COMMANDS[args.command](args, inst, tol, out)
    except UsageError as exc:
        print(f"dr-options: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericsError as exc:
        print(f"dr-options: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, ValueError, OSError) as exc:
        print(f"dr-options: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
