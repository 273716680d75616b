"""Command-line entry point: ``privopt <command> ...``."""

from __future__ import annotations

import argparse
import sys
import warnings

import numpy as np

from . import baselines, harness, noise
from .core import FunctionClassSpec, InvalidArgument, PrivacyParams, RegimeError, Unsupported, make_rng, validate_spec
from .mechanisms import Mode, Route, select_params, theoretical_bound
from .sensitivity import class_sensitivity, regularized_sensitivity

EXIT_OK, EXIT_CONFIG, EXIT_REGIME, EXIT_DOMINANCE = 0, 2, 3, 4

CLASS_ROUTES = {"f": Route.SC, "h": Route.SMOOTH_SC, "g": Route.CONVEX, "j": Route.SMOOTH_CONVEX}


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _vec(w) -> str:
    return ",".join(repr(float(x)) for x in np.atleast_1d(w))


def _emit(pairs):
    for key, value in pairs:
        print(f"{key}: {value}")


def cmd_noise_sample(args) -> int:
    privacy = PrivacyParams(args.eps, args.delta)
    if args.kind == "gamma":
        if not privacy.pure:
            raise InvalidArgument("gamma noise is the delta = 0 law; pass --delta 0")
        spec = noise.NoiseSpec(noise.NoiseKind.GAMMA_NORM, args.d, args.sens / args.eps, args.eps, 0.0, args.sens)
    else:
        spec = noise.NoiseSpec(noise.NoiseKind.GAUSSIAN, args.d, noise.gaussian_sigma(privacy, args.sens), args.eps, args.delta, args.sens)
    draws = noise.sample(spec, make_rng(args.seed), size=args.count)
    for row in draws:
        print(_vec(row))
    return EXIT_OK


def cmd_bound(args) -> int:
    route = CLASS_ROUTES[args.cls]
    spec = validate_spec(FunctionClassSpec(L=args.L, mu=args.mu, beta=args.beta, R=args.R, n=args.n, d=args.d, erm=args.erm))
    privacy = PrivacyParams(args.eps, args.delta)
    mode = Mode.POPULATION if args.population else Mode.EMPIRICAL
    params = select_params(spec, privacy, route, mode=mode, force=args.force)
    if route in (Route.CONVEX, Route.SMOOTH_CONVEX):
        sens = regularized_sensitivity(spec, params.lam)
    else:
        sens = class_sensitivity(spec)
    pairs = [
        ("class", args.cls), ("route", route.value), ("mode", mode.value),
        ("sensitivity", repr(float(sens))), ("sensitivity_rule", sens.rule),
        ("ratio", repr(params.ratio)), ("regime_ok", params.regime_ok),
        ("lambda", repr(params.lam)), ("alpha", repr(params.alpha)),
        ("T", ",".join(f"{k}={v}" for k, v in sorted(params.T.items())) or "-"),
        ("bound_conceptual", repr(float(theoretical_bound(spec, privacy, route, mode, force=args.force)))),
    ]
    if mode is Mode.EMPIRICAL or route in (Route.SC, Route.SMOOTH_SC):
        pairs.append(("bound_implementation", repr(float(theoretical_bound(spec, privacy, route, mode, implementation=True, force=args.force)))))
    _emit(pairs)
    return EXIT_OK


def cmd_privatize(args) -> int:
    obj, _, X = harness.load_objective(args.objective)
    privacy = PrivacyParams(args.eps, args.delta)
    with warnings.catch_warnings():
        # the audit warning is printed below in plain form
        warnings.simplefilter("ignore", UserWarning)
        setup = harness.prepare_route(obj, X, privacy, args.route, args.method, args.mode, args.force, args.trace, args.audit)
    out = setup.release.release(make_rng(args.seed))
    spec = setup.release.noise_spec
    pairs = [
        ("route", Route(args.route).value), ("w_private", _vec(out.w_private)),
        ("epsilon", repr(spec.epsilon)), ("delta", repr(spec.delta)),
        ("sensitivity", repr(spec.sensitivity)), ("noise", spec.kind.value), ("noise_scale", repr(spec.scale)),
        ("lambda", repr(setup.lam)), ("alpha", repr(setup.alpha)), ("T", setup.T), ("method", setup.method.value),
        ("projected", setup.release.project), ("theory_bound", repr(float(setup.bound))),
    ]
    if args.audit:
        print("warning: audit mode keeps the pre-noise point; this output is NOT private", file=sys.stderr)
        pairs.append(("pre_noise_point", _vec(out.pre_noise_point)))
    _emit(pairs)
    return EXIT_OK


def cmd_baseline(args) -> int:
    obj, _, X = harness.load_objective(args.objective)
    rng = make_rng(args.seed)
    f_star = harness.reference_minimum(obj, X)
    if args.kind == "expmech":
        grid = baselines.GridSpec(obj.d, args.grid, obj.spec.R)
        w = baselines.exponential_mechanism(obj, X, grid, args.eps, rng)
        pairs = [("mechanism", "expmech"), ("w_private", _vec(w)), ("epsilon", repr(args.eps)), ("grid_points", len(grid.points())),
                 ("grid_spacing", repr(grid.spacing))]
    else:
        draw = baselines.exp_plus_localization(obj, X, args.eps, rng, args.grid, force=args.force)
        w = draw.w
        pairs = [("mechanism", "exploc"), ("w_private", _vec(w)), ("epsilon", repr(draw.epsilon)),
                 ("epsilon_split", _vec(draw.epsilon_parts)), ("xi", repr(draw.xi)),
                 ("local_center", _vec(draw.grid.center)), ("local_radius", repr(draw.grid.radius)),
                 ("discretization_error", repr(draw.discretization_error))]
    pairs.append(("excess_risk", repr(obj.eval(w, X) - f_star)))
    _emit(pairs)
    return EXIT_OK


def cmd_run(args) -> int:
    config = harness.load_config(args.config)
    if args.output:
        config.output = args.output
    if args.workers:
        config.workers = args.workers
    report = harness.run_experiment(config)
    if not config.output:
        sys.stdout.write(report.to_csv())
    for row in report.dominance_failures:
        print(f"note: bound exceeded at eps={row['eps']} delta={row['delta']} (ratio {row['bound_ratio']:.3f})", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    report, checks = harness.verify(args.seed, args.quick)
    failed = False
    for check in checks:
        print(f"{'PASS' if check.passed else 'FAIL'} {check.name}: {check.detail}", file=sys.stderr)
        failed |= not check.passed
    for row in report.rows:
        ok = row["bound_ratio"] <= 1.0
        print(f"{'PASS' if ok else 'FAIL'} {row['route']} eps={row['eps']} delta={row['delta']}: ratio {row['bound_ratio']:.4f}", file=sys.stderr)
        failed |= not ok
    if args.output:
        report.write(args.output)
    else:
        sys.stdout.write(report.to_csv())
    return EXIT_DOMINANCE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="privopt", description="Differentially private convex optimization by output perturbation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_noise = sub.add_parser("noise", help="noise utilities")
    noise_sub = p_noise.add_subparsers(dest="noise_command", required=True)
    p = noise_sub.add_parser("sample", help="draw calibrated noise vectors")
    p.add_argument("--kind", choices=["gamma", "gauss"], required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--sens", type=float, default=1.0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_noise_sample)

    p = sub.add_parser("bound", help="sensitivity, parameters and excess-risk bounds for a function class")
    p.add_argument("--class", dest="cls", choices=sorted(CLASS_ROUTES), required=True,
                   help="f: strongly convex, h: smooth strongly convex, g: convex, j: smooth convex")
    p.add_argument("--erm", type=_bool, default=True)
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--population", action="store_true", help="report population-loss bounds")
    p.add_argument("--force", action="store_true", help="evaluate outside the regime; the bound becomes L R")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("privatize", help="release one private minimizer")
    p.add_argument("--route", choices=[r.value for r in Route], required=True)
    p.add_argument("--objective", required=True, metavar="CONFIG")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", default=None)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.EMPIRICAL.value)
    p.add_argument("--trace", default=None, metavar="PATH", help="write the optimizer trace as CSV")
    p.add_argument("--audit", action="store_true", help="also print the pre-noise point (not private)")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_privatize)

    p = sub.add_parser("baseline", help="grid exponential mechanism baselines (d <= 2)")
    p.add_argument("kind", choices=["expmech", "exploc"])
    p.add_argument("--objective", required=True, metavar="CONFIG")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("run", help="run an experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output", default=None)
    p.add_argument("--workers", type=int, default=0)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="invariant checks plus the bound-dominance sweep")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    p.add_argument("--quick", action="store_true", help="fewer Monte-Carlo trials")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RegimeError as exc:
        print(f"regime error: {exc} (use --force to report the trivial bound)", file=sys.stderr)
        return EXIT_REGIME
    except (InvalidArgument, Unsupported) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
