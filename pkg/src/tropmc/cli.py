"""Command-line entry point.

Subcommands: tables, sample, estimate-phi3, estimate-beta-prim, oracle,
series.  Dimensions are accepted as decimal or `p/q` rational text; the
oracle and series paths use exact rationals throughout.  Identical
invocations (same flags, seed, workers) print identical bytes; wall-clock
timing only goes into `--out` append records.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

from . import hepp, loopeq, montecarlo, tables
from .errors import InvalidSectorError, NonGenericDimensionError, TableFormatError
from .graphs import GraphError, to_text
from .sampler import GraphSampler, to_projective


def _dimension(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"cannot parse dimension {text!r}") from exc


def _default_workers() -> int:
    env = os.environ.get("TROPMC_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="tropmc")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tables", help="build coefficient tables and write them to a file")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--dim", type=_dimension, required=True)
    p.add_argument("--mode", choices=["plain", "positive"], default="plain")
    p.add_argument("--loops", type=int, required=True)
    p.add_argument("--legs", type=int, default=4)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sample", help="emit metric graphs drawn from the tropical measure")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--dim", type=_dimension, required=True)
    p.add_argument("--mode", choices=["plain", "positive"], default="plain")
    p.add_argument("--loops", type=int, required=True)
    p.add_argument("--legs", type=int, required=True)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beaded", action="store_true", help="draw beaded instead of 1PI graphs")
    p.add_argument("--projective", action="store_true", help="normalize the largest coordinate to 1")

    for name in ("estimate-phi3", "estimate-beta-prim"):
        p = sub.add_parser(name, help=f"run the {name.split('-', 1)[1]} estimator")
        p.add_argument("--loops", type=int, required=True)
        if name == "estimate-phi3":
            p.add_argument("--legs", type=int, default=3)
        p.add_argument("--samples", type=int, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--chunk-size", type=int, default=1_000_000)
        p.add_argument("--tables", dest="tables_file", default=None)
        p.add_argument("--out", default=None, help="append the full run record to this file")
        p.add_argument("--format", choices=["structured-text", "csv"], default="structured-text")
        p.add_argument("--mass-ratio", type=float, default=1.0,
                       help="m^2/mu^2 (only 1 is supported by the estimators)")

    p = sub.add_parser("oracle", help="exact ensemble sum by configuration enumeration")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--dim", type=_dimension, required=True)
    p.add_argument("--loops", type=int, required=True)
    p.add_argument("--legs", type=int, required=True)
    p.add_argument("--mode", choices=["plain", "positive"], default="plain")
    p.add_argument("--max-vertices", type=int, default=hepp.DEFAULT_MAX_VERTICES)

    p = sub.add_parser("series", help="solve the loop equation in exact arithmetic")
    p.add_argument("--dim", type=_dimension, required=True)
    p.add_argument("--couplings", default="3", help="comma-separated vertex degrees, e.g. 3,4,5,6")
    p.add_argument("--max-weight", type=int, required=True,
                   help="interaction-weight truncation sum_k m_k (k-2)")
    p.add_argument("--max-loops", type=int, default=None)
    return top


def _cmd_tables(args) -> int:
    tab = tables.build(args.k, args.dim, args.mode, args.loops, args.legs)
    tab.save(args.out)
    print(f"wrote tables k={args.k} dimension={args.dim} mode={args.mode} "
          f"l_max={args.loops} n_max={args.legs} to {args.out}")
    return 0


def _cmd_sample(args) -> int:
    tab = tables.build(args.k, args.dim, args.mode, args.loops, args.legs)
    sampler = GraphSampler(tab, args.seed)
    for _ in range(args.samples):
        if args.beaded:
            samp = sampler.sample_beaded(args.loops, args.legs)
        else:
            samp = sampler.sample_one_pi(args.loops, args.legs)
        if args.projective and samp.coords.coords:
            samp = to_projective(samp)
        coords = ",".join(repr(c) for c in samp.coords.coords)
        print(f"{to_text(samp.graph)} X={coords}")
    return 0


def _cmd_estimate(args, kind: str) -> int:
    workers = args.workers if args.workers is not None else _default_workers()
    if args.mass_ratio != 1.0:
        raise InvalidSectorError("estimators are defined at mass ratio 1")
    if kind == "phi3":
        report = montecarlo.estimate_phi3_vertex(
            args.loops, args.samples, seed=args.seed, workers=workers,
            legs=args.legs, chunk_size=args.chunk_size, tables_file=args.tables_file,
        )
    else:
        report = montecarlo.estimate_beta_prim(
            args.loops, args.samples, seed=args.seed, workers=workers,
            chunk_size=args.chunk_size, tables_file=args.tables_file,
        )
    if args.format == "csv":
        print(montecarlo.CSV_HEADER)
        print(report.csv_row())
    else:
        line = report.record()
        # drop the wall-time field on stdout so identical runs print identical bytes
        print(" ".join(tok for tok in line.split() if not tok.startswith("seconds=")))
    if args.out:
        montecarlo.append_report(args.out, report)
    return 0


def _cmd_oracle(args) -> int:
    value = hepp.ensemble_sum_oracle(
        args.k, args.dim, args.loops, args.legs, args.mode, max_vertices=args.max_vertices
    )
    print(f"{value.numerator}/{value.denominator}")
    return 0


def _cmd_series(args) -> int:
    couplings = tuple(int(x) for x in args.couplings.split(","))
    series = loopeq.solve_gamma_tr(couplings, args.dim, args.max_weight, args.max_loops)
    print(loopeq.format_series(series))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "tables":
            return _cmd_tables(args)
        if args.command == "sample":
            return _cmd_sample(args)
        if args.command == "estimate-phi3":
            return _cmd_estimate(args, "phi3")
        if args.command == "estimate-beta-prim":
            return _cmd_estimate(args, "beta")
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "series":
            return _cmd_series(args)
        raise AssertionError(f"unhandled command {args.command}")
    except (InvalidSectorError, NonGenericDimensionError, TableFormatError,
            GraphError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
