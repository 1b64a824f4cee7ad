"""Command-line front end.

Every subcommand prints ``key,value`` lines on standard output and, when
given ``--out PREFIX``, writes its CSV products plus ``PREFIX_manifest.json``
holding every effective parameter.  ``--manifest PATH`` replays such a file;
flags given on the command line override its values.

Exit codes: 0 success, 2 bad input, 3 analysis failure, 4 internal error.
"""
from __future__ import annotations

import argparse
import os
import sys
import traceback

import numpy as np

from . import __version__
from . import io as sio
from .density import Domain, Kernel, default_ring, default_ripple, make_gridded
from .errors import AnalysisError, EfficiencyError, FitError, ParameterError, QuadratureResolutionError, \
    StatisticalTestError, SwarmCovError
from .extrema import OptimizerSettings, design_sweep, maximize_error, minimize_error, minimize_error_with_delta
from .metric import Partition, abs_difference_integrand, discretization_error, error, error_series, one_sided_error, \
    pitfall_report, reference_error
from .quadrature import QuadratureRule, convergence_study, default_rule, smooth_control
from .statistics import ErrorDistribution, benchmark_controller, estimate_error_distribution, performance_band, \
    relative_error, sample_positions, settling_analysis
from .controller import WalkerSettings, run_walkers

EXIT_OK, EXIT_INPUT, EXIT_ANALYSIS, EXIT_INTERNAL = 0, 2, 3, 4


class CLIError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


# ------------------------------------------------------------------ parsing helpers

def _pair(text: str, sep: str = "x", kind=int) -> tuple:
    parts = text.lower().split(sep)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two values separated by {sep!r}, got {text!r}")
    try:
        return kind(parts[0]), kind(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number in {text!r}") from None


def grid_arg(text):
    return _pair(text, "x", int)


def bounds_arg(text):
    return _pair(text, ",", float)


def int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def tiling_list(text):
    return [grid_arg(t) for t in text.split(",") if t.strip()]


def load_target(spec: str):
    if spec == "ring":
        return default_ring()
    if spec == "ripple":
        return default_ripple()
    if spec.startswith("csv:"):
        return make_gridded(sio.read_gridded(spec[4:]))
    raise CLIError(f"unknown target {spec!r}; use ring, ripple or csv:PATH")


def parse_init(spec: str, n: int | None = None):
    if spec in ("uniform", "annulus"):
        return spec
    if spec.startswith("region:"):
        vals = [float(v) for v in spec[7:].split(",")]
        if len(vals) != 4:
            raise CLIError("region init needs x0,y0,x1,y1")
        return tuple(vals)
    if spec.startswith("file:"):
        cfg = sio.read_swarm(spec[5:])
        if n is not None and cfg.n != n:
            raise CLIError(f"init file holds {cfg.n} robots but --n is {n}")
        return cfg.positions
    raise CLIError(f"unknown init {spec!r}")


def rule_for(args, domain: Domain, delta: float) -> QuadratureRule:
    if args.grid:
        return QuadratureRule.make("rectangle", domain, *args.grid)
    return default_rule(domain, delta)


def emit(args, key: str, value) -> None:
    if isinstance(value, float):
        value = f"{value:.10g}"
    print(f"{key},{value}")


def say(args, text: str) -> None:
    if not args.quiet:
        print(text, file=sys.stderr)


def optimizer_settings(args, **over) -> OptimizerSettings:
    kw = dict(starts=args.starts, seed=args.seed, workers=args.threads)
    if getattr(args, "max_iter", None):
        kw["max_iterations"] = args.max_iter
    if args.grid:
        kw["grid_nodes"] = tuple(args.grid)
    kw.update(over)
    return OptimizerSettings(**kw)


# ------------------------------------------------------------------ commands

def cmd_error(args) -> int:
    cfg = sio.read_swarm(args.config)
    rho = load_target(args.target)
    rule = rule_for(args, rho.domain, cfg.delta)
    e = error(cfg, rho, rule, args.normalization)
    emit(args, "e", e)
    emit(args, "e_hat", one_sided_error(cfg, rho, rule, args.normalization))
    if args.partition:
        emit(args, "mu", discretization_error(cfg, rho, Partition.regular(rho.domain, *args.partition)))
    return EXIT_OK


def _write_records(path, results):
    rows = []
    for res in results:
        for r in res.records:
            rows.append([res.sense, r.index, r.seed, int(r.converged), r.iterations, r.value, r.delta, r.reason])
    sio.write_rows(path, ["mode", "start", "seed", "converged", "iterations", "value", "delta", "reason"], rows)


def cmd_extrema(args) -> int:
    rho = load_target(args.target)
    kernel = Kernel(args.kernel)
    settings = optimizer_settings(args)
    init = parse_init(args.init, args.n)
    results = []
    if args.delta is None:
        res, dstar = minimize_error_with_delta(rho, args.n, settings, args.delta_bounds, init, kernel=kernel)
        results.append(res)
        emit(args, "e_minus", res.value)
        emit(args, "delta_star", dstar)
    else:
        if args.mode in ("both", "min"):
            results.append(minimize_error(rho, args.n, args.delta, settings, init, kernel))
            emit(args, "e_minus", results[-1].value)
        if args.mode in ("both", "max"):
            results.append(maximize_error(rho, args.n, args.delta, settings, init, kernel))
            emit(args, "e_plus", results[-1].value)
    if args.out:
        _write_records(f"{args.out}_result.csv", results)
        for res in results:
            sio.write_swarm(f"{args.out}_arg{res.sense}.csv", res.config)
    failed = [res.sense for res in results if not res.converged]
    if failed:
        say(args, f"no start converged for: {', '.join(failed)}; best values reported anyway")
        return EXIT_ANALYSIS
    return EXIT_OK


def cmd_pdf(args) -> int:
    rho = load_target(args.target)
    rule = rule_for(args, rho.domain, args.delta)
    dist = estimate_error_distribution(rho, args.n, args.delta, Kernel(args.kernel), args.samples, rule,
                                       args.seed, args.normalization, workers=args.threads)
    for key in ("mean", "std", "mu_fit", "sigma_fit", "rms"):
        emit(args, key, getattr(dist, key))
    emit(args, "normal", int(dist.normal))
    if args.out:
        sio.write_values(f"{args.out}_samples.csv", dist.samples)
        sio.write_rows(f"{args.out}_cdf.csv", ["e", "empirical", "fitted"], [list(map(float, r)) for r in dist.cdf_table()])
        sio.write_rows(f"{args.out}_fit.csv", ["mu", "sigma", "rms", "mean", "std", "samples", "n", "delta"],
                       [[dist.mu_fit, dist.sigma_fit, dist.rms, dist.mean, dist.std, int(dist.samples.size), args.n,
                         args.delta]])
    if not dist.normal:
        say(args, f"warning: normal fit residual RMS {dist.rms:.3g} is large; distribution flagged non-normal")
    return EXIT_OK


def _series_from(args):
    if getattr(args, "series", None):
        return sio.read_series(args.series)
    if getattr(args, "trajectory", None):
        traj = sio.read_trajectory(args.trajectory)
        rho = load_target(args.target)
        rule = rule_for(args, rho.domain, traj.delta)
        return traj.times, error_series(traj, rho, rule, args.normalization)
    return None


def cmd_benchmark(args) -> int:
    samples = sio.read_values(f"{args.dist}_samples.csv")
    dist = ErrorDistribution.from_samples(samples)
    if args.controller_errors:
        ctrl = sio.read_values(args.controller_errors)
    else:
        series = _series_from(args)
        if series is None:
            raise CLIError("give --controller-errors, --series or --trajectory")
        t, e = series
        sa = settling_analysis(t, e)
        emit(args, "t_settle", sa.t_settle)
        ctrl = e[t > sa.t_settle]
    verdict = benchmark_controller(ctrl, dist)
    f, tt = verdict.f_test, verdict.t_test
    emit(args, "F", f.statistic)
    emit(args, "F_p", f.p_value)
    emit(args, "t", tt.statistic)
    emit(args, "t_dof", tt.dof)
    emit(args, "t_p", tt.p_value)
    emit(args, "ci_low", tt.ci[0])
    emit(args, "ci_high", tt.ci[1])
    emit(args, "consistent", int(verdict.consistent))
    if args.out:
        sio.write_rows(f"{args.out}_verdict.csv",
                       ["F", "F_dof_num", "F_dof_den", "F_p", "F_reject", "t", "t_dof", "t_p", "t_reject",
                        "diff", "ci_low", "ci_high", "consistent"],
                       [[f.statistic, f.dof_num, f.dof_den, f.p_value, int(f.reject()), tt.statistic, tt.dof,
                         tt.p_value, int(tt.reject()), tt.difference, tt.ci[0], tt.ci[1], int(verdict.consistent)]])
    say(args, verdict.summary())
    return EXIT_OK


def cmd_relerr(args) -> int:
    if args.e_minus is not None and args.e_plus is not None:
        e_minus, e_plus = args.e_minus, args.e_plus
    elif args.extrema:
        e_minus, e_plus = sio.read_extrema_bounds(args.extrema)
    else:
        if args.n is None or args.delta is None:
            raise CLIError("give --extrema PREFIX, --e-minus/--e-plus, or --n and --delta to compute the bounds")
        rho = load_target(args.target)
        settings = optimizer_settings(args)
        e_minus = minimize_error(rho, args.n, args.delta, settings).value
        e_plus = maximize_error(rho, args.n, args.delta, settings).value
    if args.e_observed is not None:
        e_obs = args.e_observed
    else:
        series = _series_from(args)
        if series is None:
            raise CLIError("give --series, --trajectory or --e-observed")
        sa = settling_analysis(*series)
        for key in ("alpha", "beta", "tau", "t_settle", "e_q3"):
            emit(args, key, getattr(sa, key))
        e_obs = sa.e_q3
    rel = relative_error(e_obs, e_minus, e_plus)
    emit(args, "e_minus", e_minus)
    emit(args, "e_plus", e_plus)
    emit(args, "e_rel", rel)
    emit(args, "e_rel_percent", 100.0 * rel)
    emit(args, "band", performance_band(rel))
    if not 0.0 <= rel <= 1.0:
        say(args, "note: observed error lies outside the realizable bounds")
    return EXIT_OK


def cmd_simulate(args) -> int:
    rho = load_target(args.target)
    if args.init.startswith("file:"):
        init = parse_init(args.init, args.n)
    elif args.init in ("uniform", "corner"):
        init = args.init
    else:
        raise CLIError(f"unknown init {args.init!r}; use uniform, corner or file:PATH")
    if args.snap_every < 1 or args.steps < args.snap_every:
        raise CLIError("need steps >= snap-every >= 1")
    ws = WalkerSettings(sigma_step=args.sigma_step, steps_per_snapshot=args.snap_every,
                        snapshots=args.steps // args.snap_every + 1, seed=args.seed, init=init)
    traj = run_walkers(rho, args.n, args.delta, Kernel(args.kernel), ws)
    sio.write_trajectory(args.out, traj)
    emit(args, "snapshots", len(traj))
    if args.series_out:
        e = error_series(traj, rho, rule_for(args, rho.domain, args.delta), args.normalization)
        sio.write_series(args.series_out, traj.times, e)
        emit(args, "final_e", float(e[-1]))
    return EXIT_OK


def cmd_quadstudy(args) -> int:
    rules = [r.strip() for r in args.rules.split(",") if r.strip()]
    if args.m_values:
        ms = args.m_values
    else:
        lo, hi, count = args.m_range
        ms = sorted({int(2 * round(v / 2)) + 1 for v in np.logspace(np.log10(lo), np.log10(hi), int(count))})
    if args.smooth:
        dom = Domain(48.0, 70.0) if args.config is None else load_target(args.target).domain
        f, exact = smooth_control(dom)
        ref = exact if args.reference is None else args.reference
    else:
        if args.config is None:
            raise CLIError("give --config PATH (or --smooth for the control integrand)")
        cfg = sio.read_swarm(args.config)
        rho = load_target(args.target)
        dom = rho.domain
        f = abs_difference_integrand(cfg, rho, args.normalization)
        if args.reference is None:
            say(args, "computing the reference value (this takes a few minutes)")
            ref, est = reference_error(cfg, rho, args.normalization)
            emit(args, "reference_error_estimate", est)
        else:
            ref = args.reference
    study = convergence_study(f, dom, rules, ms, ref)
    emit(args, "reference", ref)
    for kind, (a, b) in study.fits.items():
        emit(args, f"{kind}_a", a)
        emit(args, f"{kind}_b", b)
    if args.out:
        with open(f"{args.out}_study.csv", "w") as fh:
            fh.write(study.to_csv())
    return EXIT_OK


def cmd_sweep(args) -> int:
    rho = load_target(args.target)
    settings = optimizer_settings(args)

    def progress(row):
        say(args, f"N={row.n}: delta*={row.delta_star:.4g}, e_min={row.e_min:.5g}")

    res = design_sweep(rho, args.n_values, settings, args.delta_bounds, warm_start=not args.cold,
                       init=parse_init(args.init), kernel=Kernel(args.kernel), progress=progress)
    emit(args, "exponent", res.exponent)
    emit(args, "prefactor", res.prefactor)
    emit(args, "kde_exponent", res.kde_exponent)
    if args.out:
        with open(f"{args.out}_sweep.csv", "w") as fh:
            fh.write(res.to_csv())
    return EXIT_OK


def cmd_pitfall(args) -> int:
    rho = load_target(args.target)
    if args.config:
        pos = sio.read_swarm(args.config).positions
    elif args.random:
        pos = sample_positions(rho, args.random, args.seed)
    else:
        raise CLIError("give --config PATH or --random N")
    tilings = list(args.tilings)
    if args.shifted:
        tilings += [Partition.shifted(rho.domain, m1, m2) for m1, m2 in args.tilings]
    rows = pitfall_report(pos, rho, tilings)
    for i, r in enumerate(rows):
        tag = "shifted" if i >= len(args.tilings) else "regular"
        emit(args, f"mu_{r.m1}x{r.m2}_{tag}", r.mu)
    if args.out:
        sio.write_rows(f"{args.out}_pitfall.csv", ["m1", "m2", "M", "tiling", "mu"],
                       [[r.m1, r.m2, r.cells, "shifted" if i >= len(args.tilings) else "regular", r.mu]
                        for i, r in enumerate(rows)])
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swarmcov", description="Coverage error metrics and benchmarks for robot swarms.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker processes (default: all cores)")
    p.add_argument("--grid", type=grid_arg, default=None, metavar="M1xM2",
                   help="override the quadrature grid (rectangle rule, node counts per axis)")
    p.add_argument("--quiet", action="store_true", help="suppress commentary on standard error")
    p.add_argument("--manifest", default=None, metavar="PATH", help="replay parameters from a manifest file")
    sub = p.add_subparsers(dest="command")

    def common(sp, target=True, kernel=False, norm=None, out=True):
        if target:
            sp.add_argument("--target", default="ring", help="ring, ripple or csv:PATH")
        if kernel:
            sp.add_argument("--kernel", default="gaussian", choices=("gaussian", "indicator"))
        if norm:
            sp.add_argument("--normalization", default=norm, choices=("domain", "count"))
        if out:
            sp.add_argument("--out", default=None, metavar="PREFIX")

    sp = sub.add_parser("error", help="evaluate the error metric of a swarm configuration")
    sp.add_argument("--config", required=True, metavar="PATH")
    sp.add_argument("--partition", type=grid_arg, default=None, metavar="M1xM2")
    common(sp, norm="domain")
    sp.set_defaults(func=cmd_error)

    sp = sub.add_parser("extrema", help="best local minimum and maximum of the error metric")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--delta", type=float, default=None, help="omit to optimize the blob radius too")
    sp.add_argument("--delta-bounds", type=bounds_arg, default=(0.5, 8.0), metavar="LO,HI")
    sp.add_argument("--starts", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--init", default="uniform", help="uniform, annulus, region:x0,y0,x1,y1 or file:PATH")
    sp.add_argument("--mode", default="both", choices=("both", "min", "max"))
    sp.add_argument("--max-iter", type=int, default=None)
    common(sp, kernel=True)
    sp.set_defaults(func=cmd_extrema)

    sp = sub.add_parser("pdf", help="Monte Carlo sampling distribution of the error metric")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    common(sp, kernel=True, norm="count")
    sp.set_defaults(func=cmd_pdf)

    sp = sub.add_parser("benchmark", help="F and t tests of controller errors against a sampling distribution")
    sp.add_argument("--dist", required=True, metavar="PREFIX", help="prefix of a pdf run")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--controller-errors", metavar="PATH")
    src.add_argument("--trajectory", metavar="PATH")
    src.add_argument("--series", metavar="PATH", help="t,e error series")
    common(sp, norm="count")
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("relerr", help="relative error of a controller between the extrema bounds")
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--series", metavar="PATH")
    src.add_argument("--trajectory", metavar="PATH")
    src.add_argument("--e-observed", type=float, default=None)
    sp.add_argument("--extrema", metavar="PREFIX", default=None)
    sp.add_argument("--e-minus", type=float, default=None)
    sp.add_argument("--e-plus", type=float, default=None)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--delta", type=float, default=None)
    sp.add_argument("--starts", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    common(sp, norm="domain")
    sp.set_defaults(func=cmd_relerr)

    sp = sub.add_parser("simulate", help="run the Metropolis walker controller")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--steps", type=int, default=1000)
    sp.add_argument("--snap-every", type=int, default=10)
    sp.add_argument("--sigma-step", type=float, default=2.0)
    sp.add_argument("--init", default="uniform", help="uniform, corner or file:PATH")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, metavar="PATH", help="trajectory CSV")
    sp.add_argument("--series-out", default=None, metavar="PATH", help="also write the t,e error series")
    common(sp, kernel=True, norm="domain", out=False)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("quadstudy", help="convergence study of the quadrature rules")
    sp.add_argument("--config", default=None, metavar="PATH")
    sp.add_argument("--rules", default="rectangle,trapezoid,simpson")
    sp.add_argument("--m-values", type=int_list, default=None)
    sp.add_argument("--m-range", type=lambda s: tuple(float(v) for v in s.split(",")), default=(17, 2049, 30),
                    metavar="LO,HI,COUNT")
    sp.add_argument("--reference", type=float, default=None)
    sp.add_argument("--smooth", action="store_true", help="use the smooth control integrand cos(x/15) exp(y/40)")
    common(sp, norm="domain")
    sp.set_defaults(func=cmd_quadstudy)

    sp = sub.add_parser("sweep", help="optimal blob radius against swarm size")
    sp.add_argument("--n-values", type=int_list, default=[22, 44, 79, 128, 200, 256])
    sp.add_argument("--delta-bounds", type=bounds_arg, default=(0.5, 8.0), metavar="LO,HI")
    sp.add_argument("--starts", type=int, default=4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--init", default="uniform")
    sp.add_argument("--cold", action="store_true", help="do not warm-start from the previous size")
    sp.add_argument("--max-iter", type=int, default=None)
    common(sp, kernel=True)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("pitfall", help="discretization metric across partitions")
    sp.add_argument("--config", default=None, metavar="PATH")
    sp.add_argument("--random", type=int, default=None, metavar="N", help="draw N positions from the target")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tilings", type=tiling_list, default=[(1, 1), (4, 4), (1024, 1024)])
    sp.add_argument("--shifted", action="store_true", help="add a half-cell-shifted copy of every tiling")
    common(sp)
    sp.set_defaults(func=cmd_pitfall)
    return p


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(name)
    return None


def parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.manifest:
        data = sio.read_manifest(args.manifest)
        if args.command is None:
            if "command" not in data:
                raise CLIError(f"manifest {args.manifest} names no command")
            argv = [*argv, data["command"]]
        command = args.command or data["command"]
        sp = _subparser(parser, command)
        if sp is None:
            raise CLIError(f"unknown command {command!r} in manifest")
        known = {a.dest for a in sp._actions} | {a.dest for a in parser._actions}
        defaults = {k: v for k, v in data.items() if k in known and k not in ("command", "manifest", "func")}
        for key in ("grid", "partition", "delta_bounds"):
            if isinstance(defaults.get(key), list):
                defaults[key] = tuple(defaults[key])
        if isinstance(defaults.get("tilings"), list):
            defaults["tilings"] = [tuple(t) for t in defaults["tilings"]]
        top = {k: v for k, v in defaults.items() if k in {a.dest for a in parser._actions}}
        parser.set_defaults(**top)
        sp.set_defaults(**{k: v for k, v in defaults.items() if k not in top})
        args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        raise CLIError("no command given")
    return args


def _manifest_path(args):
    if args.command == "simulate":
        return f"{os.path.splitext(args.out)[0]}_manifest.json"
    if getattr(args, "out", None):
        return f"{args.out}_manifest.json"
    return None


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
        code = args.func(args)
        path = _manifest_path(args)
        if path:
            params = {k: v for k, v in vars(args).items() if k not in ("func", "manifest")}
            params["version"] = __version__
            sio.write_manifest(path, params)
        return code
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (AnalysisError, FitError, EfficiencyError, StatisticalTestError, QuadratureResolutionError) as exc:
        print(f"analysis failed: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except SwarmCovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
