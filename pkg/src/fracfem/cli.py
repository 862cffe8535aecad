"""``fracfem`` command-line entry point.

Exit codes: 0 on success, 1 for invalid arguments, 2 for numerical failures.
"""

from __future__ import annotations

import argparse
import sys

from .analysis import convergence_study
from .coefficients import parse_coefficient
from .experiments import emit_plot_data, monte_carlo, write_report
from .fem import SingularSystemError, setup_problem, write_solution_csv
from .geometry import cantor_extremes, format_microstructure, similarity_dimension

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _stage_range(text: str) -> tuple[int, int]:
    try:
        a, b = text.split("..")
        lo, hi = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"invalid stage range {text!r}")
    return lo, hi


def _ratios(text: str) -> list[float]:
    from fractions import Fraction

    try:
        return [float(Fraction(t)) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad ratio list {text!r}") from None


def _coeff(text: str):
    try:
        return parse_coefficient(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _stage(text: str) -> int:
    n = int(text)
    if not 0 <= n <= 12:
        raise argparse.ArgumentTypeError("stage must be between 0 and 12")
    return n


def _add_model_args(p, need_coeff=True):
    if need_coeff:
        p.add_argument("--coeff", type=_coeff, required=True,
                       help="constant:A | scaled:A:L:EPS | geometric:R | random:LO:HI")
    p.add_argument("--bc", choices=("dn", "dd"), default="dn")
    p.add_argument("--endpoint", choices=("include", "exclude"), default="include")
    p.add_argument("--no-forcing", action="store_true",
                   help="drop the interface forcing f")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="fracfem",
        description="Finite elements on fractal interface microstructures.",
        epilog="exit codes: 0 success, 1 invalid arguments, 2 numerical failure",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("develop", help="print the Cantor-extremes microstructure")
    p.add_argument("--stage", type=_stage, required=True)

    p = sub.add_parser("dimension", help="similarity dimension of an IFS")
    p.add_argument("--ratios", type=_ratios, required=True)
    p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("solve", help="solve one stage and write the solution CSV")
    p.add_argument("--stage", type=_stage, required=True)
    _add_model_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", metavar="PREFIX", help="also write plot data files")

    p = sub.add_parser("study", help="Cauchy convergence table over a stage range")
    p.add_argument("--stages", type=_stage_range, required=True, help="A..B")
    _add_model_args(p)
    p.add_argument("--h1", choices=("full", "semi"), default="full")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("montecarlo", help="random storage coefficient experiments")
    p.add_argument("--stage", type=_stage, required=True)
    _add_model_args(p)
    p.add_argument("--realizations", type=int, required=True)
    p.add_argument("--experiments", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--h1", choices=("full", "semi"), default="full")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _run(args) -> None:
    if args.command == "develop":
        sys.stdout.write(format_microstructure(cantor_extremes(args.stage)))
    elif args.command == "dimension":
        if len(args.ratios) < 2 or not all(0 < c < 1 for c in args.ratios):
            raise UsageError("need at least two ratios in (0, 1)")
        if args.tol <= 0:
            raise UsageError("--tol must be positive")
        print(repr(similarity_dimension(args.ratios, args.tol)))
    elif args.command == "solve":
        if args.coeff.is_random:
            raise UsageError("solve needs a deterministic coefficient; use montecarlo")
        prob = setup_problem(args.stage, args.coeff, not args.no_forcing, None,
                             args.bc, args.endpoint)
        sol = prob.solve()
        write_solution_csv(sol, args.out)
        if args.plot:
            emit_plot_data(sol, prob.micro.points(args.stage), args.plot)
    elif args.command == "study":
        if args.coeff.is_random:
            raise UsageError("study needs a deterministic coefficient; use montecarlo")
        if args.stages[1] > 12:
            raise UsageError("stages above 12 are not supported")
        report = convergence_study(range(args.stages[0], args.stages[1] + 1), args.coeff,
                                   args.bc, args.endpoint, not args.no_forcing, None,
                                   args.h1)
        write_report(report, args.out, args.format)
    elif args.command == "montecarlo":
        if not args.coeff.is_random:
            raise UsageError("montecarlo needs --coeff random:LO:HI")
        if args.realizations < 1 or args.experiments < 1:
            raise UsageError("--realizations and --experiments must be >= 1")
        if not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        report = monte_carlo(args.stage, args.coeff, args.realizations, args.experiments,
                             args.seed, args.bc, args.endpoint, not args.no_forcing,
                             args.h1)
        report.metadata["example"] = "random"
        write_report(report, args.out, args.format)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _run(args)
    except UsageError as exc:
        print(f"fracfem: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularSystemError, FloatingPointError, ArithmeticError) as exc:
        print(f"fracfem: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"fracfem: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
