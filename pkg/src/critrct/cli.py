"""Command-line entry point: ``python -m critrct <command>``.

Commands
--------
theory      critical initialisation, converged correlation and depth scales
candidates  candidate weight variances for (dropout rate, depth) pairs
design      sample the designs of a preset and write the plan JSON
verify      Monte Carlo check of the mean-field moment predictions
run         train every work item of a preset into a results CSV
analyze     omnibus and post-hoc tests on a results CSV
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import meanfield
from .errors import ConfigurationError, ConstructionError, IncompleteBlockError
from .initgen import generate_candidates, sigma_alpha_bound, sigma_beta_bound
from .presets import PRESETS, resolve
from .runner import default_output_dir, fmt, make_plan, run_experiment


def _json_number(x):
    return None if isinstance(x, float) and math.isinf(x) else x


def _theta(text):
    value = float(text)
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError(f"dropout rate must lie in [0, 1), got {text}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _depth(text):
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"depth must be >= 2, got {text}")
    return value


def theory_report(theta, depth=None, sigma_w_sq=None, nu0=1.0):
    crit = meanfield.critical_init(theta)
    ell_rho = meanfield.correlation_depth_scale(theta)
    report = {
        "theta": theta,
        "critical_sigma_w_sq": crit.sigma_w_sq,
        "critical_sigma_b_sq": crit.sigma_b_sq,
        "rho_star": meanfield.rho_star(theta),
        "ell_rho": ell_rho,
        "max_trainable_depth": None if math.isinf(ell_rho) else math.floor(ell_rho),
    }
    if sigma_w_sq is not None:
        params = meanfield.HyperParams(sigma_w_sq, 0.0, theta)
        report["sigma_w_sq"] = sigma_w_sq
        report["ell_nu"] = meanfield.variance_depth_bound(params, nu0)
    if depth is not None:
        report["depth"] = depth
        report["sigma_w_sq_alpha"] = sigma_alpha_bound(theta, depth, nu0)
        report["sigma_w_sq_beta"] = sigma_beta_bound(theta, depth, nu0)
        report["candidates"] = generate_candidates(theta, depth, nu0=nu0).as_dict()
    return report


def write_theory_curves(path, nu0=1.0):
    """Depth-scale curves: ell_rho against theta, and ell_nu against sigma_w^2 per theta."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["curve", "theta", "x", "value"])
        for theta in np.round(np.arange(0.01, 0.96, 0.01), 2):
            writer.writerow(["ell_rho", fmt(theta), fmt(theta),
                             fmt(meanfield.correlation_depth_scale(float(theta)))])
        for theta in (0.0, 0.1, 0.3, 0.5):
            for sigma in np.round(np.arange(0.1, 4.01, 0.05), 2):
                params = meanfield.HyperParams(float(sigma), 0.0, theta)
                writer.writerow(["ell_nu", fmt(theta), fmt(sigma),
                                 fmt(meanfield.variance_depth_bound(params, nu0))])


def cmd_theory(args):
    report = theory_report(args.theta, args.depth, args.sigma_w_sq, args.nu0)
    if args.curves:
        write_theory_curves(args.curves, args.nu0)
    if args.json:
        print(json.dumps({k: _json_number(v) for k, v in report.items()}, indent=2))
        return 0
    print(f"theta               {report['theta']:g}")
    print(f"critical init       sigma_w^2 = {report['critical_sigma_w_sq']:.6g}, sigma_b^2 = 0")
    print(f"rho*                {report['rho_star']:.6f}")
    ell = report["ell_rho"]
    if math.isinf(ell):
        print("ell_rho             inf")
    else:
        print(f"ell_rho             {ell:.4f} (max trainable depth {report['max_trainable_depth']})")
    if "ell_nu" in report:
        print(f"ell_nu              {report['ell_nu']:.4f} at sigma_w^2 = {report['sigma_w_sq']:g}")
    if "candidates" in report:
        print(f"depth {report['depth']} bounds   ({report['sigma_w_sq_alpha']:.4e}, "
              f"{report['sigma_w_sq_beta']:.4e})")
        for label, value in report["candidates"].items():
            print(f"  {label:<3} {value:.4g}")
    return 0


def cmd_candidates(args):
    rows = []
    for theta, depth in itertools.product(args.theta, args.depth):
        cs = generate_candidates(theta, depth, nu0=args.nu0)
        rows.append({"theta": theta, "depth": depth, **cs.as_dict()})
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        lines = [",".join(rows[0].keys())]
        lines += [",".join(fmt(v) if isinstance(v, float) else str(v) for v in r.values()) for r in rows]
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    return 0


def _emit(text, output):
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_design(args):
    config = resolve(args.preset, args.set)
    plan = make_plan(config, args.seed)
    _emit(plan.dumps(config.sets), args.output)
    print(f"{len(plan.designs)} designs x {len(plan.groups)} groups = {len(plan.assignments)} work items",
          file=sys.stderr)
    return 0


def cmd_verify(args):
    from .netlab.moments import estimate_moments, make_input_pair, moment_spec, theory_trajectory

    rng = np.random.default_rng(args.seed)
    spec = moment_spec(args.width, args.depth, args.theta, args.sigma_w_sq)
    x1, x2 = make_input_pair(spec.input_dim, args.rho0, rng)
    est = estimate_moments(spec, x1, x2, args.draws, rng, method=args.method)
    theory = theory_trajectory(spec, x1, x2)
    worst_nu = worst_rho = 0.0
    print("layer  nu_theory  nu_hat     rel_err   rho_theory  rho_hat   abs_err")
    for l, state in enumerate(theory):
        rel = abs(est.nu1[l] - state.nu1) / state.nu1
        err = abs(est.rho[l] - state.rho)
        worst_nu, worst_rho = max(worst_nu, rel), max(worst_rho, err)
        print(f"{l + 1:>5}  {state.nu1:9.4f}  {est.nu1[l]:9.4f}  {rel:8.4f}  "
              f"{state.rho:10.4f}  {est.rho[l]:8.4f}  {err:7.4f}")
    ok = worst_nu <= args.nu_tol and worst_rho <= args.rho_tol
    print(f"max relative nu error {worst_nu:.4f} (tol {args.nu_tol}), "
          f"max rho error {worst_rho:.4f} (tol {args.rho_tol}): {'ok' if ok else 'FAILED'}")
    return 0 if ok else 1


def cmd_run(args):
    config = resolve(args.preset, args.set)
    out = Path(args.output_dir) if args.output_dir else default_output_dir() / f"{args.preset}-{args.seed}"

    def progress(done, total):
        if args.verbose:
            print(f"\r{done}/{total}", end="" if done < total else "\n", file=sys.stderr, flush=True)

    path = run_experiment(config, args.seed, out, workers=args.workers, resume=not args.no_resume,
                          progress=progress)
    print(path)
    return 0


def cmd_analyze(args):
    from .analysis import analyze_results

    out = Path(args.output_dir) if args.output_dir else Path(args.results).parent
    report, _ = analyze_results(args.results, args.metric, args.control, args.gamma, out, args.bins)
    print(json.dumps(report.to_json(), indent=2))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="critrct", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="mean-field quantities for one dropout rate")
    p.add_argument("--theta", type=_theta, required=True)
    p.add_argument("--depth", type=_depth)
    p.add_argument("--sigma-w-sq", type=float)
    p.add_argument("--nu0", type=float, default=1.0)
    p.add_argument("--curves", help="write depth-scale curve data to this CSV")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("candidates", help="candidate initialisations per (theta, depth)")
    p.add_argument("--theta", type=_theta, nargs="+", required=True)
    p.add_argument("--depth", type=_depth, nargs="+", required=True)
    p.add_argument("--nu0", type=float, default=1.0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output")
    p.set_defaults(func=cmd_candidates)

    p = sub.add_parser("design", help="sample designs and write the plan JSON")
    p.add_argument("--preset", choices=PRESETS, default="desk-scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--output")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("verify", help="compare sampled moments with the mean-field recurrence")
    p.add_argument("--theta", type=_theta, default=0.0)
    p.add_argument("--width", type=_positive_int, default=800)
    p.add_argument("--depth", type=_positive_int, default=10)
    p.add_argument("--draws", type=_positive_int, default=500)
    p.add_argument("--sigma-w-sq", type=float, help="defaults to the critical value")
    p.add_argument("--rho0", type=float, default=0.5)
    p.add_argument("--method", choices=("forward", "projection"), default="projection")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nu-tol", type=float, default=0.05)
    p.add_argument("--rho-tol", type=float, default=0.02)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="train all work items of a preset")
    p.add_argument("--preset", choices=PRESETS, default="desk-scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--output-dir", help="defaults to $CRITRCT_OUTPUT_DIR/<preset>-<seed>")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--no-resume", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="statistical tests on a results CSV")
    p.add_argument("results")
    p.add_argument("--metric", choices=("tau_s", "tau_g"), default="tau_g")
    p.add_argument("--control", default="C")
    p.add_argument("--gamma", type=float, default=0.95)
    p.add_argument("--bins", type=_positive_int, default=20)
    p.add_argument("--output-dir", help="defaults to the directory of the results CSV")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IncompleteBlockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigurationError, ConstructionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
