"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 invalid configuration, 3 numerical
non-convergence. Data goes to stdout (or ``--out``); the resolved config and
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .constants import conjugate, limit_constants
from .exceptions import ConfigError, ConvergenceError, DomainError
from .experiments import (ExperimentConfig, _json_value, default_shards, run_experiment)
from .rates import solve_ldp_rate, write_rate_csv
from .rng import RngStream
from .sampling import DistributionModel, sample_pairs, write_samples

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _grid(cast):
    def parse(text):
        try:
            values = tuple(cast(v) for v in text.split(",") if v.strip())
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
        if not values:
            raise argparse.ArgumentTypeError("grid is empty")
        return values
    return parse


def _int(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value != int(value):
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    return int(value)


_EPILOG = "exit codes: 0 ok, 1 usage, 2 invalid config, 3 non-convergence"


def _add_p(sp):
    sp.add_argument("--p", type=float, default=2.0,
                    help="Hölder exponent p > 1; q = p/(p-1) is derived (default: %(default)s)")


def _add_model(sp, n_default=1000, samples_default=10000):
    sp.add_argument("--model", choices=("ball", "cone", "surface"), default="cone",
                    help="distribution model (default: %(default)s)")
    sp.add_argument("--surface-method", choices=("reject", "weight"), default=None,
                    help="surface sampler (default: weight for n > 1000, else reject)")
    sp.add_argument("--n", type=_int, default=n_default,
                    help="dimension (default: %(default)s)")
    sp.add_argument("--num-samples", type=_int, default=samples_default,
                    help="Monte Carlo sample size N (default: %(default)s)")
    sp.add_argument("--seed", type=_int, default=0, help="64-bit seed (default: %(default)s)")
    sp.add_argument("--stream-id", type=_int, default=0,
                    help="64-bit stream id (default: %(default)s)")


def _add_run(sp):
    sp.add_argument("--shards", type=_int, default=None,
                    help="worker processes (default: CPU count, THREADS overrides)")
    sp.add_argument("--out", default=None,
                    help="output directory for CSV/JSON files (default: stdout)")
    sp.add_argument("--timing", action="store_true",
                    help="record wall-clock runtime in the JSON envelope (default: off, "
                         "keeping output byte-reproducible)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="holderprob", description="Hölder-ratio constants, simulations "
                     "and rate functions.", epilog=_EPILOG)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    sp = sub.add_parser("constants", help="limit constants as JSON", epilog=_EPILOG)
    _add_p(sp)

    sp = sub.add_parser("sample", help="draw pairs (binary dump or CSV)", epilog=_EPILOG)
    _add_p(sp)
    _add_model(sp, n_default=10, samples_default=100)
    sp.add_argument("--out", default=None,
                    help="binary dump path (default: CSV rows on stdout)")

    sp = sub.add_parser("clt", help="distribution of sqrt(n)(R - m)", epilog=_EPILOG)
    _add_p(sp)
    _add_model(sp)
    sp.add_argument("--bins", type=_int, default=80,
                    help="histogram bins over +-5 sigma (default: %(default)s)")
    _add_run(sp)

    sp = sub.add_parser("reverse-holder", help="P[R >= m + t/sqrt(n)] per t", epilog=_EPILOG)
    _add_p(sp)
    _add_model(sp)
    sp.add_argument("--t-grid", type=_grid(float), default=None,
                    help="comma-separated t values (default: 0,0.5,1,2)")
    _add_run(sp)

    sp = sub.add_parser("berry-esseen", help="Kolmogorov distance across n", epilog=_EPILOG)
    _add_p(sp)
    _add_model(sp)
    sp.add_argument("--n-grid", type=_grid(_int), default=None,
                    help="comma-separated dimensions (default: 50,200,1000,10000)")
    _add_run(sp)

    sp = sub.add_parser("ldp-rate", help="LDP rate I(x) as CSV", epilog=_EPILOG)
    _add_p(sp)
    sp.add_argument("--x", "--x-grid", dest="x", type=_grid(float), required=True,
                    help="comma-separated ratio values x")
    sp.add_argument("--out", default=None, help="CSV path (default: stdout)")

    sp = sub.add_parser("ldp-tail", help="direct MC (1/n) log P[R >= x] vs -I(x)",
                        epilog=_EPILOG)
    _add_p(sp)
    _add_model(sp)
    sp.add_argument("--x-grid", type=_grid(float), default=None,
                    help="comma-separated thresholds x (default: 0.75)")
    sp.add_argument("--n-grid", type=_grid(_int), default=None,
                    help="comma-separated dimensions (default: 20,40,80)")
    _add_run(sp)

    sp = sub.add_parser("mdp", help="moderate deviations at speed n^(2 beta)", epilog=_EPILOG)
    _add_p(sp)
    _add_model(sp)
    sp.add_argument("--t-grid", type=_grid(float), default=None,
                    help="comma-separated t values; negative t uses the lower tail "
                         "(default: +-0.5 sigma)")
    sp.add_argument("--beta", type=float, default=0.25,
                    help="b_n = n^beta with beta in (0, 0.5) (default: %(default)s)")
    _add_run(sp)

    sp = sub.add_parser("compare-measures", help="cone vs surface ratio laws across n",
                        epilog=_EPILOG)
    _add_p(sp)
    sp.add_argument("--num-samples", type=_int, default=50000,
                    help="sample size per arm (default: %(default)s)")
    sp.add_argument("--seed", type=_int, default=0, help="64-bit seed (default: %(default)s)")
    sp.add_argument("--stream-id", type=_int, default=0,
                    help="64-bit stream id (default: %(default)s)")
    sp.add_argument("--n-grid", type=_grid(_int), default=None,
                    help="comma-separated dimensions (default: 25,100,400)")
    _add_run(sp)
    return parser


def _echo(config: dict) -> None:
    print("# config " + json.dumps(_json_value(config), sort_keys=True), file=sys.stderr)


def _model(args) -> DistributionModel:
    try:
        return DistributionModel.parse(args.model, args.surface_method)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _experiment_config(args) -> ExperimentConfig:
    shards = args.shards if args.shards is not None else default_shards()
    common = dict(experiment=args.command, p=args.p, num_samples=args.num_samples,
                  seed=args.seed, stream_id=args.stream_id, shards=shards)
    if args.command == "compare-measures":
        common["model"] = DistributionModel()
        common["n"] = max(args.n_grid) if args.n_grid else 400
    else:
        common["model"] = _model(args)
        common["n"] = args.n
    for name in ("t_grid", "n_grid", "x_grid", "beta", "bins"):
        value = getattr(args, name, None)
        if value is not None:
            common[name] = value
    return ExperimentConfig(**common)


def _cmd_constants(args) -> int:
    consts = limit_constants(conjugate(args.p))
    _echo({"command": "constants", "p": consts.pair.p, "q": consts.pair.q})
    print(json.dumps(consts.to_dict(), indent=2))
    return EXIT_OK


def _cmd_sample(args) -> int:
    pair = conjugate(args.p)
    model = _model(args)
    if args.n < 1 or args.num_samples < 1:
        raise ConfigError("--n and --num-samples must be positive")
    stream = RngStream(args.seed, args.stream_id)
    _echo({"command": "sample", "p": pair.p, "q": pair.q, "model": model.label(args.n),
           "n": args.n, "num_samples": args.num_samples, "seed": args.seed,
           "stream_id": args.stream_id, "out": args.out})
    batch = sample_pairs(model, args.n, pair, stream, args.num_samples)
    if args.out:
        write_samples(args.out, batch, p=pair.p, model=model.label(args.n), seed=args.seed,
                      stream_id=args.stream_id)
        return EXIT_OK
    n = args.n
    header = [f"x{i}" for i in range(1, n + 1)] + [f"y{i}" for i in range(1, n + 1)] + ["weight"]
    out = sys.stdout
    out.write(",".join(header) + "\r\n")
    for i in range(len(batch)):
        vals = list(batch.x[i]) + list(batch.y[i]) + [batch.weight[i]]
        out.write(",".join(repr(float(v)) for v in vals) + "\r\n")
    return EXIT_OK


def _cmd_ldp_rate(args) -> int:
    pair = conjugate(args.p)
    _echo({"command": "ldp-rate", "p": pair.p, "q": pair.q, "x": list(args.x),
           "out": args.out})
    results = [solve_ldp_rate(x, pair) for x in args.x]
    write_rate_csv(args.out if args.out else sys.stdout, results)
    stalled = [r.x for r in results if not r.converged]
    if stalled:
        print(f"non-convergence at x = {stalled}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def _cmd_experiment(args) -> int:
    cfg = _experiment_config(args).validate()
    _echo(cfg.to_dict())
    res = run_experiment(cfg)
    print(f"# runtime_seconds {res.runtime_seconds:.3f}", file=sys.stderr)
    if args.out:
        for path in res.write(args.out, timing=args.timing):
            print(f"# wrote {path}", file=sys.stderr)
    else:
        res.to_csv(sys.stdout)
        sys.stdout.write(res.to_json(timing=args.timing))
    return EXIT_OK


_COMMANDS = {"constants": _cmd_constants, "sample": _cmd_sample, "ldp-rate": _cmd_ldp_rate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    handler = _COMMANDS.get(args.command, _cmd_experiment)
    try:
        return handler(args)
    except (ConfigError, DomainError) as exc:
        print(f"holderprob: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"holderprob: did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
