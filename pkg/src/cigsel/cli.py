"""Command-line entry point ``cigsel``.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import harness, io
from .bounds import bound_report
from .errors import CigselError
from .process import ProcessSpec, printed_fano_coefficient, sample
from .selector import select_graph
from .verify import run_verification

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_CONFIG = 0, 1, 2


def _cmd_gen(args) -> int:
    spec = ProcessSpec.from_json(io.read_json(args.spec))
    io.write_samples(args.out, sample(spec, args.n, args.seed))
    return EXIT_OK


def _cmd_select(args) -> int:
    X = io.read_samples(args.inp)
    result = select_graph(X, args.rho_min, args.b)
    text = io.dump_json(result.to_json(), args.out)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_bounds(args) -> int:
    rep = bound_report(args.p, args.rho_min, args.b, args.delta, args.n)
    out = {"input": {"p": args.p, "rho_min": args.rho_min, "b": args.b, "delta": args.delta, "n": args.n}}
    out.update(rep.to_json())
    sys.stdout.write(io.dump_json(out))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = harness.SweepConfig.from_json(io.read_json(args.config))
    if args.workers is not None:
        config = replace(config, workers=args.workers)
    rows = harness.sweep(config)
    text = harness.sweep_csv(rows, fano=config.process == "fano")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_verify(args) -> int:
    coef = printed_fano_coefficient if args.ensemble_constant == "printed" else None
    results = run_verification(args.level, coef)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cigsel", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="draw N+1 samples of a process spec to CSV")
    g.add_argument("--spec", required=True, help="ProcessSpec JSON")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen)

    s = sub.add_parser("select", help="run the selector on a sample CSV")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--rho-min", type=float, required=True)
    s.add_argument("--b", type=float, required=True)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_select)

    b = sub.add_parser("bounds", help="print the bound report as JSON")
    b.add_argument("--p", type=int, required=True)
    b.add_argument("--rho-min", type=float, required=True)
    b.add_argument("--b", type=float, default=3.0)
    b.add_argument("--delta", type=float, default=0.05)
    b.add_argument("--n", type=int, default=1, help="sample size for the MI / Fano fields")
    b.set_defaults(func=_cmd_bounds)

    w = sub.add_parser("sweep", help="Monte Carlo sweep to CSV")
    w.add_argument("--config", required=True)
    w.add_argument("--out")
    w.add_argument("--workers", type=int)
    w.set_defaults(func=_cmd_sweep)

    v = sub.add_parser("verify", help="run the oracle verification suites")
    v.add_argument("--level", choices=("fast", "full"), default="fast")
    v.add_argument("--ensemble-constant", choices=("corrected", "printed"), default="corrected",
                   help=argparse.SUPPRESS)
    v.set_defaults(func=_cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CigselError, OSError, ValueError, KeyError) as exc:
        print(f"cigsel: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
