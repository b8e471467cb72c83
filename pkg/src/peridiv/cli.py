"""Command line interface.

Every subcommand reads a JSON configuration, writes a delimited table and
a meta.json into the output directory, and renders a matplotlib figure
next to them (the solve command is numbers-only).  Exit codes: 0 success,
2 configuration problem, 3 numerical failure, 4 certification failure.
"""

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, plots
from .barrier import (
    f,
    f_hat,
    f_hat_prime,
    f_prime,
    r_sweep,
    rho_sweep,
    solve_barrier,
)
from .config import load_config
from .errors import CertificationError, ConfigError, NumericError
from .simulator import simulate_bailout, simulate_dividends
from .valuation import (
    KIND_DIVIDENDS,
    classical_limits,
    make_curve,
    make_optimal_curve,
)
from .verification import hjb_check_bailout, hjb_check_dividends

COMMANDS = ("solve", "curve", "fcurve", "hjb", "simulate", "sweep")


def _parser():
    parser = argparse.ArgumentParser(
        prog="peridiv",
        description=(
            "optimal barrier levels, value curves, certification grids and "
            "Monte Carlo checks for periodically observed dividend problems"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    help_text = {
        "solve": "compute the optimal barrier and its diagnostics",
        "curve": "tabulate the optimal value curve and suboptimal barriers",
        "fcurve": "tabulate the barrier equation over candidate levels",
        "hjb": "certify the solution against its optimality equation",
        "simulate": "check the closed form against Monte Carlo paths",
        "sweep": "solve across a list of decision rates or terminal payoffs",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=help_text[name])
        p.add_argument("--config", required=True, help="JSON configuration")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--format", choices=["csv"], default="csv",
                       help="table format (csv)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured simulation seed")
        p.add_argument("--quiet", action="store_true",
                       help="suppress progress output")
    return parser


def _fmt(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def _write_csv(path, comments, names, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for line in comments:
            fh.write("# {}\n".format(line))
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _say(quiet, message):
    if not quiet:
        print(message)


class _Run:
    """Shared bookkeeping for one command invocation."""

    def __init__(self, args):
        self.args = args
        self.cfg = load_config(args.config)
        if args.seed is not None:
            self.cfg = dataclasses.replace(
                self.cfg,
                mc=dataclasses.replace(self.cfg.mc, seed=args.seed),
            )
        self.out_dir = Path(args.out)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        with open(args.config, "rb") as fh:
            self.config_sha = hashlib.sha256(fh.read()).hexdigest()
        self.outputs = []

    def path(self, name):
        self.outputs.append(name)
        return self.out_dir / name

    def comments(self):
        spec = self.cfg.problem
        return [
            "generated by peridiv {}".format(__version__),
            "command: {}".format(self.args.command),
            "config: {} (sha256 {})".format(self.args.config, self.config_sha),
            "problem: kind={} q={:.17g} r={:.17g}".format(
                spec.kind, spec.q, spec.r
            ),
        ]

    def write_meta(self, extras):
        meta = {
            "version": __version__,
            "command": self.args.command,
            "generated_utc": time.strftime(
                "%Y-%m-%dT%H:%M:%SZ", time.gmtime()
            ),
            "config_path": str(self.args.config),
            "config_sha256": self.config_sha,
            "config": self.cfg.raw,
            "format": self.args.format,
            "seed_used": self.cfg.mc.seed,
            "outputs": list(self.outputs),
        }
        meta.update(extras)
        with open(self.out_dir / "meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _solution_dict(sol):
    rep = sol.smoothfit_report
    return {
        "kind": sol.kind,
        "barrier": sol.level,
        "is_zero": sol.is_zero,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "smooth_d1_gap": None if rep is None else rep.d1_gap,
        "smooth_d2_gap": None if rep is None else rep.d2_gap,
        "smooth_d3_gap": None if rep is None else rep.d3_gap,
    }


def _classical_barrier(model, spec):
    try:
        return classical_limits(model, spec).barrier
    except NumericError:
        return None


def _x_upper(run, level, prep):
    if run.cfg.grid.x_max is not None:
        return float(run.cfg.grid.x_max)
    return level + 5.0 / prep.phi_qr


def _cmd_solve(run, quiet):
    model, spec = run.cfg.model, run.cfg.problem
    sol = solve_barrier(model, spec)
    curve = make_optimal_curve(model, spec, sol.level, sol.is_zero)
    classical = _classical_barrier(model, spec)
    info = _solution_dict(sol)
    info["value_at_zero"] = float(curve.value(0.0))
    info["slope_at_zero"] = float(curve.deriv1(0.0))
    info["classical_barrier"] = classical
    nan = float("nan")
    names = list(info)
    rows = [[nan if info[k] is None else info[k] for k in names]]
    _write_csv(run.path("solve.csv"), run.comments(), names, rows)
    if sol.is_zero:
        _say(quiet, "barrier level 0: liquidate at the first opportunity "
             "(barrier equation stays positive, value {:.3e} at 0)".format(
                 sol.residual))
    else:
        _say(quiet, "barrier level {:.12g} (residual {:.3e})".format(
            sol.level, sol.residual))
    run.write_meta({"solution": info})


def _alt_barriers(run, level, prep):
    blist = run.cfg.sweep.b_list
    if blist:
        return [float(b) for b in blist]
    if level > 0.0:
        return [0.0, 0.5 * level, 1.5 * level, 2.0 * level]
    unit = 1.0 / prep.phi_qr
    return [0.5 * unit, unit, 2.0 * unit]


def _cmd_curve(run, quiet):
    model, spec, grid = run.cfg.model, run.cfg.problem, run.cfg.grid
    sol = solve_barrier(model, spec)
    opt = make_optimal_curve(model, spec, sol.level, sol.is_zero)
    xs = np.linspace(0.0, _x_upper(run, sol.level, opt.prep), grid.n_points)
    opt_vals = np.array([float(opt.value(x)) for x in xs])
    columns = [
        ("x", xs),
        ("value", opt_vals),
        ("deriv1", np.array([float(opt.deriv1(x)) for x in xs])),
        ("deriv2", np.array([float(opt.deriv2(x)) for x in xs])),
    ]
    alts = []
    for b_alt in _alt_barriers(run, sol.level, opt.prep):
        if abs(b_alt - sol.level) < 1e-12 and not sol.is_zero:
            continue
        alt = make_curve(model, spec, b_alt)
        vals = np.array([float(alt.value(x)) for x in xs])
        label = "b={:.6g}".format(b_alt)
        columns.append(("value_" + label, vals))
        alts.append((label, vals))
    names = [name for name, _ in columns]
    rows = zip(*[vals for _, vals in columns])
    _write_csv(run.path("curve.csv"), run.comments(), names, rows)
    plots.save_curve_figure(run.path("curve.png"), xs, opt_vals, alts,
                            sol.level, spec.kind)
    _say(quiet, "curve on [0, {:.6g}] with {} alternatives".format(
        xs[-1], len(alts)))
    run.write_meta({"solution": _solution_dict(sol)})


def _cmd_fcurve(run, quiet):
    model, spec, grid = run.cfg.model, run.cfg.problem, run.cfg.grid
    sol = solve_barrier(model, spec)
    if grid.x_max is not None:
        upper = float(grid.x_max)
    elif sol.level > 0.0:
        upper = 2.5 * sol.level
    else:
        upper = 3.0 / model.phi(spec.q)
    bs = np.linspace(0.0, upper, grid.n_points)
    if spec.kind == KIND_DIVIDENDS:
        vals, slopes, label = f(model, spec, bs), f_prime(model, spec, bs), \
            "dividend barrier equation"
    else:
        vals, slopes, label = f_hat(model, spec, bs), \
            f_hat_prime(model, spec, bs), "bail-out barrier equation"
    _write_csv(
        run.path("fcurve.csv"), run.comments(),
        ["b", "equation", "slope"], zip(bs, vals, slopes),
    )
    plots.save_fcurve_figure(run.path("fcurve.png"), bs, vals, sol.level,
                             label)
    _say(quiet, "barrier equation tabulated on [0, {:.6g}]".format(upper))
    run.write_meta({"solution": _solution_dict(sol)})


def _cmd_hjb(run, quiet):
    model, spec = run.cfg.model, run.cfg.problem
    vc = run.cfg.verification
    sol = solve_barrier(model, spec)
    check = (hjb_check_dividends if spec.kind == KIND_DIVIDENDS
             else hjb_check_bailout)
    error = None
    try:
        report = check(
            model, spec, sol,
            n_grid=vc.grid_points,
            x_max=run.cfg.grid.x_max,
            tol=vc.hjb_tol,
            closed_rel_tol=vc.closed_rel_tol,
        )
    except CertificationError as exc:
        error = exc
        report = exc.report
    gen_gap = (report.generator_values - spec.q * report.curve_values
               - report.closed_reference)
    _write_csv(
        run.path("hjb.csv"), run.comments(),
        ["x", "value", "generator", "closed_reference", "max_term",
         "hjb_residual", "generator_gap"],
        zip(report.grid, report.curve_values, report.generator_values,
            report.closed_reference, report.max_term, report.hjb_residual,
            gen_gap),
    )
    plots.save_hjb_figure(run.path("hjb.png"), report.grid,
                          report.hjb_residual, gen_gap, vc.hjb_tol,
                          sol.level)
    worst_x, worst_res = report.worst()
    run.write_meta({
        "solution": _solution_dict(sol),
        "certification": {
            "passed": report.passed,
            "failures": report.failures,
            "worst_x": worst_x,
            "worst_residual": worst_res,
            "tolerances": report.tolerances,
            "extras": report.extras,
        },
    })
    if error is not None:
        raise error
    _say(quiet, "certified: worst residual {:.3e} at x={:.6g}".format(
        worst_res, worst_x))


def _cmd_simulate(run, quiet):
    model, spec = run.cfg.model, run.cfg.problem
    sol = solve_barrier(model, spec)
    opt = make_optimal_curve(model, spec, sol.level, sol.is_zero)
    simulate = (simulate_dividends if spec.kind == KIND_DIVIDENDS
                else simulate_bailout)
    rows = []
    means, stderrs = [], []
    bias_notes = {}
    for x in run.cfg.grid.x_eval:
        est = simulate(model, spec, sol.level, float(x), run.cfg.mc)
        exact = float(opt.value(x))
        z = (est.mean - exact) / est.stderr if est.stderr > 0 else 0.0
        inj = est.components.get("injections", {"mean": float("nan")})
        rows.append([
            float(x), est.mean, est.stderr, exact, est.mean - exact, z,
            est.ruin_fraction, est.components["dividends"]["mean"],
            inj["mean"], est.paths_used,
        ])
        means.append(est.mean)
        stderrs.append(est.stderr)
        bias_notes = est.extras
        _say(quiet, "x={:<6g} mc {:.5f} +- {:.5f}  closed {:.5f}  z={:+.2f}"
             .format(x, est.mean, est.stderr, exact, z))
    _write_csv(
        run.path("simulate.csv"), run.comments(),
        ["x", "mc_mean", "mc_stderr", "closed_form", "error", "z_score",
         "ruin_fraction", "mc_dividends", "mc_injections", "paths"],
        rows,
    )
    xs = np.linspace(0.0, max(run.cfg.grid.x_eval) * 1.15, 200)
    curve_vals = np.array([float(opt.value(x)) for x in xs])
    plots.save_simulate_figure(run.path("simulate.png"), xs, curve_vals,
                               list(run.cfg.grid.x_eval), means, stderrs)
    run.write_meta({
        "solution": _solution_dict(sol),
        "simulation": {
            "paths": run.cfg.mc.paths,
            "seed": run.cfg.mc.seed,
            "antithetic": run.cfg.mc.antithetic,
            "diagnostics": bias_notes,
        },
    })


def _cmd_sweep(run, quiet):
    model, spec, sweep = run.cfg.model, run.cfg.problem, run.cfg.sweep
    if sweep.r_list and sweep.rho_list:
        raise ConfigError(
            "sweep needs exactly one of sweep.r_list or sweep.rho_list"
        )
    if sweep.r_list:
        entries, classical = r_sweep(model, spec, sweep.r_list)
        _write_csv(
            run.path("sweep.csv"), run.comments(),
            ["r", "barrier", "is_zero", "residual", "gap_to_classical"],
            [[e.r, e.level, e.is_zero, e.residual, e.gap_to_classical]
             for e in entries],
        )
        plots.save_sweep_figure(
            run.path("sweep.png"), [e.r for e in entries],
            [e.level for e in entries], "decision rate r", True, classical,
        )
        run.write_meta({"sweep": {
            "variable": "r",
            "classical_barrier": classical,
        }})
        _say(quiet, "swept {} decision rates (classical barrier {:.6g})"
             .format(len(entries), classical))
    elif sweep.rho_list:
        if spec.kind != KIND_DIVIDENDS:
            raise ConfigError("sweep.rho_list applies to dividend runs")
        entries = rho_sweep(model, spec, sweep.rho_list)
        _write_csv(
            run.path("sweep.csv"), run.comments(),
            ["rho", "barrier", "is_zero", "residual", "value_nonmonotone"],
            [[e.rho, e.level, e.is_zero, e.residual, e.value_nonmonotone]
             for e in entries],
        )
        plots.save_sweep_figure(
            run.path("sweep.png"), [e.rho for e in entries],
            [e.level for e in entries], "terminal payoff rho", False,
        )
        run.write_meta({"sweep": {"variable": "rho"}})
        _say(quiet, "swept {} terminal payoffs".format(len(entries)))
    else:
        raise ConfigError(
            "sweep needs sweep.r_list or sweep.rho_list in the config"
        )


_HANDLERS = {
    "solve": _cmd_solve,
    "curve": _cmd_curve,
    "fcurve": _cmd_fcurve,
    "hjb": _cmd_hjb,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
}


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        run = _Run(args)
        _HANDLERS[args.command](run, args.quiet)
    except ConfigError as exc:
        print("config error: {}".format(exc), file=sys.stderr)
        return 2
    except NumericError as exc:
        print("numeric error: {}".format(exc), file=sys.stderr)
        return 3
    except CertificationError as exc:
        print("certification failed: {}".format(exc), file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
