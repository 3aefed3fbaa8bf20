"""Command line interface: ``censtail {estimate,km,bootstrap-ci,simulate}``.

Every run writes a JSON manifest (subcommand, fully resolved settings,
seed, SHA-256 of the input file, tool version) next to its output, or to
stderr when the output goes to stdout. Two runs with equal manifests
produce byte-identical output.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical degeneracy.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .bootstrap import BootstrapConfig, Gamma2Estimator, KMode, bootstrap_ci, coverage_experiment
from .errors import DataError
from .estimators import DEFAULT_RHO_GRID, EstimatorSpec, Family, KMWeights, Target, estimator_path
from .kaplan_meier import SurvivalTarget, km_survival
from .rng import THREADS_ENV, resolve_workers
from .sample import order, read_csv
from .simulation import SCENARIOS, load_scenario_file, mc_bias_rmse, parse_k_grid

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _digest(path) -> str | None:
    if path is None:
        return None
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError:
        raise DataError(f"cannot read {path}") from None


def _emit(args, text: str, config: dict, seed=None) -> None:
    manifest = {
        "subcommand": args.command,
        "config": config,
        "seed": seed,
        "input_digest": _digest(getattr(args, "input", None)),
        "version": __version__,
    }
    mtext = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="\n")
        manifest_path = args.manifest or f"{args.output}.manifest.json"
    else:
        sys.stdout.write(text)
        manifest_path = args.manifest
    if manifest_path:
        Path(manifest_path).write_text(mtext, encoding="utf-8", newline="\n")
    else:
        sys.stderr.write(mtext)


def _load(args):
    return order(read_csv(args.input))


# -- estimate ---------------------------------------------------------------


def _specs_from_args(args) -> list[EstimatorSpec]:
    family = Family(args.family)
    rhos = args.rho
    needs_rho = family in (Family.EP, Family.EP_SHRINK, Family.BR_WORMS, Family.BR_WORMS_SHRINK)
    if needs_rho and not rhos:
        rhos = list(DEFAULT_RHO_GRID)
    kw = {"target": Target(args.target)}
    if args.km_weights != KMWeights.AT_RANK.value:
        kw["km_weights"] = KMWeights(args.km_weights)
    if family in (Family.EP_SHRINK, Family.BR_WORMS_SHRINK):
        kw["omega"] = args.omega
    if family in (Family.BAYES_MEAN, Family.BAYES_MODE):
        kw.update(a=args.a, b=args.b)
    if needs_rho:
        return [EstimatorSpec(family, rho=r, **kw) for r in rhos]
    if rhos:
        raise UsageError(f"family {family.value} takes no --rho")
    return [EstimatorSpec(family, **kw)]


def cmd_estimate(args) -> int:
    specs = _specs_from_args(args)
    ordered = _load(args)
    k_max = args.k_max if args.k_max is not None else ordered.n - 1
    paths = [estimator_path(ordered, s, args.k_min, k_max) for s in specs]
    if len(paths) == 1:
        text = paths[0].to_tsv()
    else:
        lines = ["estimator\tk\testimate\tdefined"]
        for p in paths:
            lines += [f"{p.spec.label}\t{row}" for row in p.to_tsv().splitlines()[1:]]
        text = "\n".join(lines) + "\n"
    config = {"estimators": [s.label for s in specs], "k_min": args.k_min, "k_max": k_max}
    _emit(args, text, config)
    return EXIT_OK


# -- km ---------------------------------------------------------------------


def cmd_km(args) -> int:
    ordered = _load(args)
    curve = km_survival(ordered, SurvivalTarget(args.target))
    lines = ["rank\tz\tsurvival"]
    lines += [f"{i + 1}\t{float(z)!r}\t{float(s)!r}" for i, (z, s) in enumerate(zip(ordered.z, curve.values))]
    _emit(args, "\n".join(lines) + "\n", {"target": args.target})
    return EXIT_OK


# -- bootstrap-ci -----------------------------------------------------------


def _boot_config(args, seed: int) -> BootstrapConfig:
    return BootstrapConfig(
        rho1=args.rho1, rho2=args.rho2, omega=args.omega, epsilon=args.epsilon,
        n_boot=args.N, alpha=args.alpha, k_mode=KMode(args.k_mode), k1=args.k1, k2=args.k2,
        seed=seed, gamma2_estimator=Gamma2Estimator(args.gamma2_estimator),
        km_weights=KMWeights(args.km_weights),
    )


def cmd_bootstrap_ci(args) -> int:
    config = _boot_config(args, args.seed)
    ordered = _load(args)
    ci = bootstrap_ci(ordered, config, workers=resolve_workers(args.threads))
    rec = ci.to_record()
    level = 100 * (1 - config.alpha)
    text = (
        f"# k1 = {ci.k1}, k2 = {ci.k2} ({config.k_mode.value})\n"
        f"# gamma1_hat = {ci.gamma1_hat:.6g}, gamma2_hat = {ci.gamma2_hat:.6g}\n"
        f"# {level:g}% bootstrap interval for gamma1: ({ci.lower:.6g}, {ci.upper:.6g})"
        f" from {config.n_boot} replicates, {ci.redraws} redraws\n"
        + json.dumps(rec, sort_keys=True) + "\n"
    )
    _emit(args, text, config.to_dict(), seed=config.seed)
    return EXIT_OK


# -- simulate ---------------------------------------------------------------

DEFAULT_SIM_ESTIMATORS = (
    "censored-hill", "worms", "worms-km",
    "br-worms:rho=-1", "br-worms-shrink:rho=-1,omega=1",
)


def cmd_simulate(args) -> int:
    if args.scenario_file:
        scenario, specs, k_grid = load_scenario_file(args.scenario_file)
    elif args.scenario:
        scenario, specs, k_grid = SCENARIOS[args.scenario], [], ()
    else:
        raise UsageError("one of --scenario or --scenario-file is required")
    changes = {k: v for k, v in (("replications", args.reps), ("seed", args.seed), ("n", args.n))
               if v is not None}
    scenario = scenario.with_(**changes)
    if args.estimator:
        specs = [EstimatorSpec.parse(t) for t in args.estimator]
    if not specs:
        specs = [EstimatorSpec.parse(t) for t in DEFAULT_SIM_ESTIMATORS]
    if args.k_grid:
        k_grid = parse_k_grid(args.k_grid)
    if not k_grid:
        k_grid = tuple(range(5, scenario.n // 2 + 1, 5))
    workers = resolve_workers(args.threads)
    base = {
        "x": str(scenario.x_dist), "c": str(scenario.c_dist), "n": scenario.n,
        "gamma1": scenario.gamma1, "gamma2": scenario.gamma2, "p": scenario.p,
    }
    if args.mode == "coverage":
        config = _boot_config(args, scenario.seed)
        report = coverage_experiment(scenario, config, args.datasets or scenario.replications,
                                     workers=workers)
        text = report.to_json()
        cfg = dict(base, datasets=len(report.intervals), bootstrap=config.to_dict())
    else:
        table = mc_bias_rmse(scenario, specs, k_grid, workers=workers)
        text = table.to_tsv()
        cfg = dict(base, replications=scenario.replications,
                   estimators=[s.label for s in specs], k_grid=list(k_grid))
    _emit(args, text, cfg, seed=scenario.seed)
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _add_common(p, with_input=True):
    if with_input:
        p.add_argument("input", help="CSV file with header z,delta")
    p.add_argument("-o", "--output", help="write the table here instead of stdout")
    p.add_argument("--manifest", help="manifest path (default: OUTPUT.manifest.json)")


def _add_bootstrap_flags(p):
    p.add_argument("--rho1", type=float, default=-1.0)
    p.add_argument("--rho2", type=float, default=-1.0)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--N", type=int, default=1000, help="bootstrap replicates")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--k-mode", choices=[m.value for m in KMode], default="adaptive")
    p.add_argument("--k1", type=int)
    p.add_argument("--k2", type=int)
    p.add_argument("--gamma2-estimator", choices=[g.value for g in Gamma2Estimator], default="worms")
    _add_km_weights(p)
    p.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")


def _add_km_weights(p):
    p.add_argument("--km-weights", choices=[w.value for w in KMWeights], default="at-rank",
                   help="Kaplan-Meier weighting of the log-spacings (default at-rank)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="censtail", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"censtail {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="estimator path over k")
    _add_common(p)
    p.add_argument("--family", choices=[f.value for f in Family], default="worms")
    p.add_argument("--rho", type=float, action="append",
                   help="second-order parameter; repeat for a sweep "
                        f"(default grid {', '.join(map(str, DEFAULT_RHO_GRID))})")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--target", choices=[t.value for t in Target], default="gamma1")
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int)
    _add_km_weights(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("km", help="Kaplan-Meier curve at the order statistics")
    _add_common(p)
    p.add_argument("--target", choices=[t.value for t in SurvivalTarget], default="event")
    p.set_defaults(func=cmd_km)

    p = sub.add_parser("bootstrap-ci", help="parametric bootstrap interval for gamma1")
    _add_common(p)
    _add_bootstrap_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bootstrap_ci)

    p = sub.add_parser("simulate", help="Monte Carlo bias/RMSE or bootstrap coverage")
    _add_common(p, with_input=False)
    p.add_argument("--scenario", choices=sorted(SCENARIOS))
    p.add_argument("--scenario-file")
    p.add_argument("--mode", choices=["bias-rmse", "coverage"], default="bias-rmse")
    p.add_argument("--reps", type=int, help="replications (coverage: datasets)")
    p.add_argument("--datasets", type=int, help="datasets for --mode coverage")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--estimator", action="append",
                   help="e.g. br-worms-shrink:rho=-2,omega=1 (repeatable)")
    p.add_argument("--k-grid", help="start:stop:step or comma list")
    _add_bootstrap_flags(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"censtail: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ArithmeticError as exc:
        print(f"censtail: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError, KeyError) as exc:
        print(f"censtail: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
