"""Command-line entry point ``ratelift``.

Exit codes: 0 on success, 1 when a bound or certification check fails, 2 on
usage errors (bad flags, invalid configs, unsupported rate cells).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import rates as R
from .harness import ConfigError, EnvelopeScenario, certify_scenario, load_config, run_experiment
from .problems import GrowthDescriptor, SmoothnessDescriptor, problem_from_spec, verify_growth, verify_smoothness

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return "%.12g" % x


def _add_query_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", required=True, choices=R.METHODS)
    p.add_argument("--regime", required=True, choices=R.REGIMES)
    p.add_argument("--delta0", type=float, default=1.0, help="initial gap f(x0) - f_star")
    p.add_argument("--eps", type=float, default=1e-3, help="target accuracy")
    p.add_argument("--alpha", type=float, default=1.0, help="growth modulus")
    p.add_argument("--p", type=float, default=1.0, help="growth exponent")
    p.add_argument("--q", type=float, default=None, help="exponent of the weaker growth actually held")
    p.add_argument("--L", type=float, default=1.0, help="Lipschitz / Hölder constant")
    p.add_argument("--eta", type=float, default=0.0, help="Hölder exponent")
    p.add_argument("--D", type=float, default=1.0, help="initial distance to the minimizer set")
    p.add_argument("--rho", type=float, default=1.0, help="proximal parameter")
    p.add_argument("--json", action="store_true", help="print a JSON record instead of the number")


def _query(args) -> R.RateQuery:
    return R.RateQuery(delta0=args.delta0, epsilon=args.eps, alpha=args.alpha, p=args.p, q=args.q,
                       L=args.L, eta=args.eta, D=args.D, rho=args.rho)


def _print_bound(args, bound: R.RateBound, **extra) -> int:
    if args.json:
        print(json.dumps({**bound.to_dict(), **extra}, sort_keys=True))
    else:
        print(_fmt(bound.iterations))
        if bound.asymptotic_only:
            print("note: order-of-magnitude cell, constant taken as 1", file=sys.stderr)
    return EXIT_OK


def _load_problem(text: str) -> dict:
    path = Path(text)
    if path.exists():
        text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--problem is neither a JSON file nor JSON text: {exc}") from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_rate(args) -> int:
    K = R.table_rate(args.method, args.regime)
    return _print_bound(args, K(_query(args)))


def cmd_lift(args) -> int:
    K = R.table_rate(args.method, args.regime)
    lift = R.lift_general if args.theorem == 1 else R.lift_growth
    return _print_bound(args, lift(K, _query(args)))


def cmd_restart_bound(args) -> int:
    K = R.table_rate(args.method, args.regime)
    q = _query(args)
    total = R.restart_sum_general if args.corollary == 1 else R.restart_sum_growth
    return _print_bound(args, total(K, q), epochs=R.restart_count(q.delta0, q.epsilon))


def cmd_solve(args) -> int:
    try:
        cfg = load_config(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    if args.output_dir:
        cfg = type(cfg).from_dict({**cfg.to_dict(), "output_dir": args.output_dir})
    result = run_experiment(cfg)
    meta = result.run.metadata()
    if args.json:
        print(json.dumps({"run": meta, "comparisons": [c.to_dict() for c in result.comparisons],
                          "envelope": result.envelope, "output_dir": str(result.output_dir)},
                         sort_keys=True, indent=2))
    else:
        print(f"terminated={meta['terminated']} iterations={meta['iterations_used']} "
              f"final_gap={_fmt(meta['final_gap'])}")
        for c in result.comparisons:
            verdict = {True: "respected", False: "VIOLATED", None: "informational"}[c.bound_respected]
            print(f"{c.label}: observed {c.observed_iterations} vs predicted "
                  f"{_fmt(c.predicted_bound)} (ceil {c.predicted_ceiling}) -> {verdict}")
        print(f"artifacts: {result.output_dir}")
    return EXIT_OK if result.ok else EXIT_FAIL


def cmd_envelope_check(args) -> int:
    model = None
    if (args.model_L is None) != (args.model_eta is None):
        raise UsageError("--model-L and --model-eta go together")
    if args.model_L is not None:
        model = (args.model_L, args.model_eta)
    sc = EnvelopeScenario(
        problem=_load_problem(args.problem), solver=args.solver, x0=args.x0, steps=args.steps,
        p=args.p, target=args.target, rho=args.rho, model=model, epsilon=args.eps,
        alpha_scale=args.alpha_scale, grid_count=args.grid_count,
    )
    out = certify_scenario(sc)
    if args.csv:
        Path(args.csv).write_text(out.envelope.to_csv(problem_from_spec(sc.problem)))
    print(json.dumps(out.to_dict(), sort_keys=True, indent=2))
    return EXIT_OK if out.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    f = problem_from_spec(_load_problem(args.problem))
    s = f.smoothness
    if args.L is not None or args.eta is not None:
        s = SmoothnessDescriptor(args.L if args.L is not None else s.L,
                                 args.eta if args.eta is not None else s.eta)
    reports = {"smoothness": verify_smoothness(f, s, sample_count=args.samples, seed=args.seed)}
    growth = f.growth
    if args.alpha is not None or args.p is not None:
        if growth is None and (args.alpha is None or args.p is None):
            raise UsageError("instance has no growth descriptor; give both --alpha and --p")
        growth = GrowthDescriptor(args.alpha if args.alpha is not None else growth.alpha,
                                  args.p if args.p is not None else growth.p)
    if growth is not None:
        reports["growth"] = verify_growth(f, growth)
    print(json.dumps({k: v.to_dict() for k, v in reports.items()}, sort_keys=True, indent=2))
    return EXIT_OK if all(r.passed for r in reports.values()) else EXIT_FAIL


def cmd_suite(args) -> int:
    from .acceptance import run_all

    results = run_all()
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ratelift", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("solve", help="run a solver from a JSON experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", default=None, help="override the config's output directory")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("rate", help="evaluate an iteration-count formula")
    _add_query_flags(p)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("lift", help="evaluate a rate after a growth-lifting substitution")
    p.add_argument("--theorem", type=int, choices=(1, 2), required=True,
                   help="1: alpha -> eps/D^p (no growth needed); 2: alpha -> alpha^(p/q) eps^(1-p/q)")
    _add_query_flags(p)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("restart-bound", help="total iterations of the gap-halving restart scheme")
    p.add_argument("--corollary", type=int, choices=(1, 2), required=True,
                   help="1: epochs lifted with eps_n/D^p; 2: epochs lifted from (alpha, q) growth")
    _add_query_flags(p)
    p.set_defaults(func=cmd_restart_bound)

    p = sub.add_parser("envelope-check", help="certify a short 1-D trace through its envelope")
    p.add_argument("--problem", required=True, help="problem spec as JSON text or a JSON file")
    p.add_argument("--solver", required=True,
                   choices=("proximal_point", "polyak_subgradient", "holder_gradient_descent"))
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--steps", type=int, default=3, help="number of iterates T")
    p.add_argument("--p", type=float, required=True, help="growth exponent to certify")
    p.add_argument("--target", choices=("general", "growth"), default="general")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--model-L", type=float, default=None)
    p.add_argument("--model-eta", type=float, default=None)
    p.add_argument("--eps", type=float, default=None,
                   help="accuracy (default: 0.9 x smallest candidate gap)")
    p.add_argument("--alpha-scale", type=float, default=1.0)
    p.add_argument("--grid-count", type=int, default=4001)
    p.add_argument("--csv", default=None, help="write the envelope CSV here")
    p.set_defaults(func=cmd_envelope_check)

    p = sub.add_parser("verify", help="sample-check an instance's smoothness and growth claims")
    p.add_argument("--problem", required=True, help="problem spec as JSON text or a JSON file")
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("suite", help="run the acceptance battery")
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for field, msg in sorted(exc.errors.items()):
            print(f"config error: {field}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ValueError, KeyError) as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
