"""Command line entry point: run, list, verify, rho, delta, zeta.

Exit codes: 0 success, 1 usage, 2 numeric failure, 3 verification mismatch.
"""
import argparse
import sys

from . import __version__
from .asym import zeta_real
from .dickman import build_dickman_table, default_table, delta, dickman_rho
from .errors import DomainError, NumericError, ResourceError, UsageError
from .experiments import ExperimentConfig, compare_reports, list_experiments, run_experiment, write_report

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_MISMATCH = 0, 1, 2, 3

_RUN_KEYS = ("experiment", "limit", "checkpoints", "rho", "alpha", "L", "lambdas", "r", "out", "format", "threads")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def read_config_file(path):
    """Plain key=value lines; blank lines and '#' comments are skipped."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{n}: expected key=value")
        values[key.strip()] = val.strip()
    return values


def build_parser():
    ap = _Parser(prog="additive-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one experiment and write its report")
    run.add_argument("--experiment")
    run.add_argument("--limit")
    run.add_argument("--checkpoints", help="geometric:<k> or a comma separated list")
    run.add_argument("--rho")
    run.add_argument("--alpha")
    run.add_argument("--L", dest="L", help="const:A | logpow:alpha | loglog | explogpow:theta | karamata:A:eta[:x0]")
    run.add_argument("--lambdas", help="comma separated lambda set for E9")
    run.add_argument("--r")
    run.add_argument("--out")
    run.add_argument("--format", choices=["csv", "json"])
    run.add_argument("--threads")
    run.add_argument("--config", help="key=value file; command line flags win")

    ls = sub.add_parser("list", help="list experiments")
    ls.add_argument("--format", choices=["text", "json"], default="text")

    ver = sub.add_parser("verify", help="compare the data rows of two reports")
    ver.add_argument("report_a")
    ver.add_argument("report_b")

    rho = sub.add_parser("rho", help="print the Dickman function rho(u)")
    rho.add_argument("u", type=float)
    rho.add_argument("--u-max", type=float, default=None)

    dl = sub.add_parser("delta", help="print delta(x)")
    dl.add_argument("x", type=float)

    z = sub.add_parser("zeta", help="print zeta(s) for real s > 1")
    z.add_argument("s", type=float)
    return ap


def _cmd_run(args, out):
    values = read_config_file(args.config) if args.config else {}
    for key in _RUN_KEYS:
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    cfg = ExperimentConfig.from_mapping(values)
    report = run_experiment(cfg)
    text = write_report(report, cfg.format, cfg.out)
    if not cfg.out:
        out.write(text)
    return EXIT_OK


def _cmd_verify(args, out):
    diff = compare_reports(args.report_a, args.report_b)
    if diff is None:
        out.write("ok\n")
        return EXIT_OK
    i, a, b = diff
    out.write(f"mismatch at data row {i}\n< {a}\n> {b}\n")
    return EXIT_MISMATCH


def _cmd_rho(args, out):
    table = default_table()
    if args.u_max is not None or args.u > table.u_max:
        table = build_dickman_table(u_max=max(args.u_max or 0.0, args.u))
    out.write(f"{dickman_rho(args.u, table):.17g}\n")
    return EXIT_OK


def main(argv=None, out=None):
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if args.command == "run":
            return _cmd_run(args, out)
        if args.command == "list":
            out.write(list_experiments(args.format))
            return EXIT_OK
        if args.command == "verify":
            return _cmd_verify(args, out)
        if args.command == "rho":
            return _cmd_rho(args, out)
        if args.command == "delta":
            out.write(f"{delta(args.x).value:.17g}\n")
            return EXIT_OK
        out.write(f"{zeta_real(args.s):.17g}\n")
        return EXIT_OK
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, OverflowError, ResourceError, MemoryError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
