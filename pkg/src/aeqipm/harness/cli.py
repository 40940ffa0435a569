"""
Command-line entry point: ``aeqipm {solve, bench-scaling, regress}``.

Exit codes: 0 on success, 1 on usage or input errors, 2 on solver errors
or non-convergence.  ``QIPM_SEED`` supplies the oracle seed when
``--seed`` is not given.
"""
import argparse
import csv
import json
import os
import sys

import numpy as np

from ..errors import MPSParseError, QIPMError
from ..generators import generate_centered_instance
from ..oracle import OracleConfig
from .bench import bench_scaling
from .mps import read_mps
from .pipeline import ALGOS, solve_pipeline
from .regress import least_squares, linf_regression

__all__ = ["main", "build_parser", "cmd_solve", "cmd_bench_scaling", "cmd_regress"]

EXIT_OK, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2


class UsageError(Exception):
    pass


def _default_seed():
    env = os.environ.get("QIPM_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"QIPM_SEED must be an integer, got {env!r}") from None


def _triple(text):
    try:
        n, m, seed = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected n,m,seed") from None
    return n, m, seed


def _int_list(text):
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="aeqipm", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one instance")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="MPS file")
    src.add_argument("--generate", type=_triple, metavar="N,M,SEED",
                     help="random centered instance")
    p.add_argument("--algo", choices=ALGOS, default="ae")
    p.add_argument("--backend", choices=("exact", "perturbed", "cg"), default="exact")
    p.add_argument("--theta", type=float)
    p.add_argument("--t", type=int, default=4)
    p.add_argument("--eps", type=float, help="gap target for ae/oss")
    p.add_argument("--zeta", type=float, default=1e-8)
    p.add_argument("--zeta-tilde", type=float, default=1e-2)
    p.add_argument("--seed", type=int)
    p.add_argument("--precision", choices=("f64", "extended"), default="f64")
    p.add_argument("--report")
    p.add_argument("--instrument", action="store_true")

    b = sub.add_parser("bench-scaling", help="iteration/query scaling sweep")
    b.add_argument("--sizes", type=_int_list, default=[16, 32, 64, 128, 256])
    b.add_argument("--seeds", type=int, default=5)
    b.add_argument("--algo", choices=ALGOS, default="ae")
    b.add_argument("--backend", choices=("exact", "perturbed", "cg"), default="exact")
    b.add_argument("--eps", type=float, default=1e-8)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--csv", help="write the per-run CSV here (default: stdout)")
    b.add_argument("--fits", help="write fitted exponents as JSON here")

    r = sub.add_parser("regress", help="regression through the normal equations")
    r.add_argument("--design", required=True, help="CSV of the design matrix")
    r.add_argument("--obs", required=True, help="CSV of the observations")
    r.add_argument("--backend", choices=("exact", "perturbed", "cg"), default="exact")
    r.add_argument("--eps", type=float, default=1e-12)
    r.add_argument("--mode", choices=("l2", "linf"), default="l2")
    r.add_argument("--seed", type=int)
    r.add_argument("--report")
    return parser


def _load_problem(args):
    if args.input:
        if not os.path.exists(args.input):
            raise UsageError(f"no such file: {args.input}")
        try:
            problem, _ = read_mps(args.input)
        except MPSParseError as exc:
            raise UsageError(str(exc)) from None
        return problem, None, None
    n, m, seed = args.generate
    if not 1 <= m < n:
        raise UsageError("--generate needs 1 <= m < n")
    problem, start = generate_centered_instance(n, m, seed=seed)
    return problem, start, seed


def cmd_solve(args, out=sys.stdout):
    """Run one pipeline; returns ``(exit_code, report)``."""
    seed = args.seed if args.seed is not None else _default_seed()
    problem, start, inst_seed = _load_problem(args)
    x0 = start.mu / start.s if start is not None else None
    report = solve_pipeline(problem, algo=args.algo, backend=args.backend,
                            precision=args.precision, theta=args.theta, t=args.t, eps=args.eps,
                            zeta=args.zeta, zeta_tilde=args.zeta_tilde, seed=seed,
                            instrument=args.instrument, start=start, x0=x0,
                            instance_seed=inst_seed)
    if args.report:
        report.write(args.report)
    s = report.summary
    status = report.outcome["status"]
    if status == "error":
        print(f"error: {report.outcome['error_kind']}: {report.outcome['message']}", file=out)
    else:
        print(f"{status} objective={s.get('objective')!r} gap={s.get('gap')!r} "
              f"iterations={report.totals['iterations']} "
              f"outer={report.totals['outer_iterations']} queries={report.totals['queries']}",
              file=out)
    return (EXIT_OK if report.converged else EXIT_SOLVER), report


def cmd_bench_scaling(args, out=sys.stdout):
    result = bench_scaling(args.sizes, seeds=args.seeds, algo=args.algo, backend=args.backend,
                           eps=args.eps, jobs=args.jobs)
    text = result.csv(args.csv)
    if not args.csv:
        out.write(text)
    fits = {k: (v.to_dict() if v is not None else None) for k, v in result.fits.items()}
    if args.fits:
        with open(args.fits, "w") as fh:
            json.dump(fits, fh, indent=2)
    for key, fit in fits.items():
        line = "absent (fewer than two sizes)" if fit is None else \
            f"{fit['exponent']:.3f} [{fit['ci_low']:.3f}, {fit['ci_high']:.3f}]"
        print(f"# exponent {key}: {line}", file=out)
    return EXIT_OK, result


def _read_matrix(path):
    if not os.path.exists(path):
        raise UsageError(f"no such file: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    try:
        return np.array([[float(v) for v in r] for r in rows])
    except ValueError:
        # tolerate a header line
        return np.array([[float(v) for v in r] for r in rows[1:]])


def cmd_regress(args, out=sys.stdout):
    X = _read_matrix(args.design)
    y = _read_matrix(args.obs).ravel()
    if X.shape[0] != y.shape[0]:
        raise UsageError(f"design has {X.shape[0]} rows but {y.shape[0]} observations")
    seed = args.seed if args.seed is not None else _default_seed()
    config = OracleConfig(backend=args.backend, seed=seed)
    if args.mode == "l2":
        result = least_squares(X, y, eps=args.eps, oracle=config)
        print(f"beta={result.beta.tolist()} residual_norm={result.residual_norm!r} "
              f"iterations={result.iterations} queries={result.queries}", file=out)
    else:
        result = linf_regression(X, y, oracle=config)
        print(f"beta={[float(v) for v in result.beta]} max_residual={result.max_residual!r} "
              f"objective={result.objective} queries={result.queries}", file=out)
    if args.report:
        with open(args.report, "w") as fh:
            json.dump({"schema": 1, "mode": args.mode, **result.to_dict()}, fh)
    return EXIT_OK, result


COMMANDS = {"solve": cmd_solve, "bench-scaling": cmd_bench_scaling, "regress": cmd_regress}


def main(argv=None, out=None):
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        code, _ = COMMANDS[args.command](args, out=out)
        return code
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QIPMError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
