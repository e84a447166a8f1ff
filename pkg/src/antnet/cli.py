"""``antnet`` command line.

Machine-readable output goes to ``--out`` (or stdout); progress messages go
to stderr. Exit status: 0 success, 1 invalid input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import roadmap as rm
from . import solver, trail, tuner
from .colony import SolverParams
from .trail import ClosedFormTrail, DepositionRule, Rule

log = logging.getLogger("antnet")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _default_seed() -> int:
    env = os.environ.get("ANTNET_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"ANTNET_SEED must be an integer, got {env!r}") from None


def float_list(text: str) -> list[float]:
    """``"0.5:5.0:0.5"`` (inclusive range) or ``"1,1.5,2"``."""
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            return tuner._steps(lo, hi, step)
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:step or a comma list, got {text!r}")


def seed_list(text: str) -> list[int]:
    """``"30"`` means seeds 0..29; ``"3,5,8"`` is taken literally."""
    try:
        if "," in text:
            return [int(v) for v in text.split(",") if v.strip()]
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a count or comma list, got {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("seed count must be >= 1")
    return list(range(n))


def _add_endpoints(p):
    p.add_argument("--map", required=True, type=Path, help="roadmap JSON file")
    p.add_argument("--source", type=int, help="default: city nearest the lower-left corner")
    p.add_argument("--dest", type=int, help="default: city nearest the upper-right corner")


def _add_solver(p, alpha=1.5, beta=4.0, rule="exponential"):
    p.add_argument("--rule", choices=[r.value for r in Rule], default=rule)
    p.add_argument("--alpha", type=float, default=alpha)
    p.add_argument("--beta", type=float, default=beta)
    p.add_argument("--rho", type=float, default=0.1)
    p.add_argument("--q0", type=float, default=1.0)
    p.add_argument("--t-const", type=float, default=10.0, help="exponential time constant T")
    p.add_argument("--e-weight", type=float, default=15.0)
    p.add_argument("--ants", type=int, default=20)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--tau0", type=float, default=trail.DEFAULT_TAU0)


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="default: $ANTNET_SEED or 0")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="antnet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a random connected roadmap")
    p.add_argument("--n-cities", type=int, required=True)
    p.add_argument("--width", type=float, default=200.0)
    p.add_argument("--height", type=float, default=200.0)
    p.add_argument("--degree", type=int, default=4)
    _add_common(p)

    p = sub.add_parser("solve", help="run the elitist ant system once")
    _add_endpoints(p)
    _add_solver(p)
    _add_common(p)
    p.add_argument("--series-csv", type=Path, help="also write iteration,length CSV")

    p = sub.add_parser("sweep-ab", help="sweep alpha and beta")
    _add_endpoints(p)
    _add_solver(p)
    _add_common(p)
    p.add_argument("--alphas", type=float_list, default=tuner.SweepGrid().alphas)
    p.add_argument("--betas", type=float_list, default=tuner.SweepGrid().betas)
    p.add_argument("--seeds", type=seed_list, default=[0])
    p.add_argument("--format", choices=["csv", "json", "table"], default="csv")

    p = sub.add_parser("sweep-t", help="sweep the exponential time constant")
    _add_endpoints(p)
    _add_solver(p)
    _add_common(p)
    p.add_argument("--Ts", type=float_list, default=tuner.SweepGrid().Ts)
    p.add_argument("--seeds", type=seed_list, default=[0])
    p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = sub.add_parser("compare", help="constant vs exponential deposition, paired")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--map", type=Path)
    src.add_argument("--random-maps", type=int, metavar="K",
                     help="generate K maps (seeds seed..seed+K-1) instead of --map")
    p.add_argument("--n-cities", type=int, default=120)
    p.add_argument("--source", type=int)
    p.add_argument("--dest", type=int)
    p.add_argument("--const-alpha", type=float, default=1.0)
    p.add_argument("--const-beta", type=float, default=2.0)
    p.add_argument("--exp-alpha", type=float, default=1.5)
    p.add_argument("--exp-beta", type=float, default=4.0)
    p.add_argument("--t-const", type=float, default=10.0)
    p.add_argument("--rho", type=float, default=0.1)
    p.add_argument("--q0", type=float, default=1.0)
    p.add_argument("--e-weight", type=float, default=15.0)
    p.add_argument("--ants", type=int, default=20)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--tau0", type=float, default=trail.DEFAULT_TAU0)
    p.add_argument("--seeds", type=seed_list, default=[0])
    p.add_argument("--format", choices=["csv", "json"], default="json")
    _add_common(p)

    p = sub.add_parser("stability", help="closed-form trail vs RK4, as CSV")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--rule", choices=[r.value for r in Rule], default="constant")
    p.add_argument("--tau0", type=float, default=0.0)
    p.add_argument("--deposit", type=float, default=1.0, help="total deposit per step")
    p.add_argument("--t-const", type=float, default=10.0)
    p.add_argument("--t-end", type=float, default=50.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--sample-every", type=float, default=1.0)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("refit", help="per-map optimum (alpha, beta) and refitted series")
    p.add_argument("--maps", type=int, default=49, help="number of generated maps")
    p.add_argument("--min-cities", type=int, default=120)
    p.add_argument("--max-cities", type=int, default=240)
    _add_solver(p)
    p.add_argument("--alphas", type=float_list, default=tuner._steps(0.5, 5.0, 0.1))
    p.add_argument("--betas", type=float_list, default=tuner._steps(0.5, 5.0, 0.1))
    p.add_argument("--seeds", type=seed_list, default=[0])
    _add_common(p)

    for name, helptext in (("predict", "recommend (alpha, beta) for a roadmap"),
                           ("features", "environment features of a roadmap")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--map", required=True, type=Path)
        p.add_argument("--out", type=Path)
    return parser


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)
        log.info("wrote %s", out)


def _resolve_endpoints(args, roadmap):
    s, d = rm.corner_endpoints(roadmap)
    source = s if args.source is None else args.source
    dest = d if args.dest is None else args.dest
    return source, dest


def _params(args, *, alpha=None, beta=None, rule=None) -> SolverParams:
    kind = Rule(rule or args.rule)
    return SolverParams(
        alpha=args.alpha if alpha is None else alpha,
        beta=args.beta if beta is None else beta,
        rho=args.rho,
        q0=args.q0,
        e_weight=args.e_weight,
        n_ants=args.ants,
        n_iterations=args.iters,
        rule=DepositionRule(kind, args.t_const),
        seed=args.seed,
    )


def _check_jobs(args):
    if args.jobs < 1:
        raise ValueError(f"--jobs must be >= 1, got {args.jobs}")


def cmd_generate(args):
    _check_jobs(args)
    m = rm.generate_roadmap(args.n_cities, (args.width, args.height), args.degree, args.seed)
    log.info("generated %d cities, %d edges", m.n_cities, len(m.edges))
    _emit(json.dumps(m.to_dict()) + "\n", args.out)


def cmd_solve(args):
    _check_jobs(args)
    m = rm.Roadmap.load(args.map)
    source, dest = _resolve_endpoints(args, m)
    params = _params(args)
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            report = solver.run(m, source, dest, params, args.tau0, executor=pool)
    else:
        report = solver.run(m, source, dest, params, args.tau0)
    log.info("best length %s (optimum %s) at iteration %d", report.best_length,
             report.optimum, report.convergence_iteration)
    _emit(report.to_json() + "\n", args.out)
    if args.series_csv:
        args.series_csv.write_text(report.series_csv())
    if report.status == solver.NOT_FOUND:
        log.warning("no ant reached the destination")


def cmd_sweep_ab(args):
    _check_jobs(args)
    m = rm.Roadmap.load(args.map)
    source, dest = _resolve_endpoints(args, m)
    grid = tuner.SweepGrid(alphas=tuple(args.alphas), betas=tuple(args.betas),
                           seeds=tuple(args.seeds))
    log.info("sweeping %d cells x %d seeds", len(grid.alphas) * len(grid.betas), len(grid.seeds))
    res = tuner.sweep_alpha_beta(m, source, dest, grid, _params(args), args.tau0, args.jobs)
    text = {"csv": res.to_csv, "json": lambda: res.to_json() + "\n",
            "table": res.convergence_table}[args.format]()
    _emit(text, args.out)


def cmd_sweep_t(args):
    _check_jobs(args)
    m = rm.Roadmap.load(args.map)
    source, dest = _resolve_endpoints(args, m)
    params = _params(args, rule="exponential")
    res = tuner.sweep_T(m, source, dest, args.Ts, params, args.seeds, args.tau0, args.jobs)
    log.info("best T: %s", res.best_T)
    _emit(res.to_csv() if args.format == "csv" else res.to_json() + "\n", args.out)


def cmd_compare(args):
    _check_jobs(args)
    if args.map is not None:
        maps = [rm.Roadmap.load(args.map)]
    else:
        if args.random_maps < 1:
            raise ValueError("--random-maps must be >= 1")
        maps = [rm.generate_roadmap(args.n_cities, (200.0, 200.0), 4, args.seed + k)
                for k in range(args.random_maps)]
    instances = []
    for m in maps:
        source, dest = _resolve_endpoints(args, m)
        instances.append((m, source, dest))
    args.rule = "constant"
    pc = _params(args, alpha=args.const_alpha, beta=args.const_beta, rule="constant")
    pe = _params(args, alpha=args.exp_alpha, beta=args.exp_beta, rule="exponential")
    cmp = tuner.compare_on_maps(instances, pc, pe, args.seeds, args.tau0, args.jobs)
    log.info("summary: %s", json.dumps(cmp.summary))
    _emit(cmp.to_csv() if args.format == "csv" else cmp.to_json() + "\n", args.out)


def stability_csv(rho, rule, tau0, deposit, T, t_end, dt=1e-3, sample_every=1.0) -> str:
    cf = ClosedFormTrail(tau0=tau0, rho=rho, deposit_total=deposit, T=T)
    kind = Rule(rule)
    every = int(round(sample_every / dt))
    if every < 1 or not np.isclose(every * dt, sample_every):
        raise ValueError("--sample-every must be a positive multiple of --dt")
    times, rk = trail.integrate_trail_ode(tau0, rho, trail.deposition_signal(cf, kind), t_end, dt)
    times, rk = times[::every], rk[::every]
    exact = trail.closed_form(cf, kind, times)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "closed_form", "rk4", "abs_error"])
    for t, c, r in zip(times.tolist(), exact.tolist(), rk.tolist()):
        w.writerow([f"{t:.10g}", repr(c), repr(r), repr(abs(c - r))])
    return buf.getvalue()


def cmd_stability(args):
    _emit(stability_csv(args.rho, args.rule, args.tau0, args.deposit, args.t_const,
                        args.t_end, args.dt, args.sample_every), args.out)


def cmd_refit(args):
    _check_jobs(args)
    if args.maps < 1 or not 2 <= args.min_cities <= args.max_cities:
        raise ValueError("need --maps >= 1 and 2 <= --min-cities <= --max-cities")
    sizes = np.linspace(args.min_cities, args.max_cities, args.maps).round().astype(int)
    instances = []
    for k, n in enumerate(sizes.tolist()):
        m = rm.generate_roadmap(n, (200.0, 200.0), 4, args.seed + k)
        instances.append((m, *rm.corner_endpoints(m)))
    grid = tuner.SweepGrid(alphas=tuple(args.alphas), betas=tuple(args.betas),
                           seeds=tuple(args.seeds))
    optima = []
    for k, inst in enumerate(instances):
        optima += tuner.level2_optima([inst], grid, _params(args), args.tau0, args.jobs)
        log.info("map %d/%d: %s", k + 1, len(instances), optima[-1])
    alpha_fit, beta_fit = tuner.refit(optima)
    _emit(json.dumps({
        "environments": [o.to_dict() for o in optima],
        "bounds": list(alpha_fit.bounds),
        "alpha_coefficients": list(alpha_fit.coefficients),
        "beta_coefficients": list(beta_fit.coefficients),
    }, indent=2) + "\n", args.out)


def cmd_predict(args):
    m = rm.Roadmap.load(args.map)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", tuner.ExtrapolationWarning)
        pred = tuner.predict_params(m)
    for w in caught:
        print(f"antnet predict: {w.message}", file=sys.stderr)
    _emit(json.dumps(pred.to_dict(), indent=2) + "\n", args.out)


def cmd_features(args):
    f = rm.extract_features(rm.Roadmap.load(args.map))
    _emit(json.dumps({"node_density": f.node_density,
                      "smallest_arc_stddev": f.smallest_arc_stddev}, indent=2) + "\n", args.out)


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "sweep-ab": cmd_sweep_ab,
    "sweep-t": cmd_sweep_t,
    "compare": cmd_compare,
    "stability": cmd_stability,
    "refit": cmd_refit,
    "predict": cmd_predict,
    "features": cmd_features,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    log.propagate = False
    try:
        COMMANDS[args.command](args)
    except (ValueError, rm.RoadmapError, FileNotFoundError) as exc:
        print(f"antnet {args.command}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"antnet {args.command}: runtime failure: {exc}", file=sys.stderr)
        return 2
    finally:
        log.removeHandler(handler)
    return 0


if __name__ == "__main__":
    sys.exit(main())
