"""Command line front end: ``fmextreme test|batch|simulate``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys

from . import __version__
from .ci import confidence_interval
from .core import FMError, InputError, NumericalError, as_margin, validate_counts
from .inference import z_statistic
from .sim import Alternative, SimConfig, simulate

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3

_INT_RE = re.compile(r"[+-]?[0-9]+")
_DEC_RE = re.compile(r"[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)")


def parse_int(text: str) -> int:
    text = text.strip()
    if not _INT_RE.fullmatch(text):
        raise ValueError(f"not a plain integer: {text!r}")
    return int(text)


def parse_decimal(text: str) -> float:
    text = text.strip()
    if not _DEC_RE.fullmatch(text):
        raise ValueError(f"not a plain decimal number: {text!r}")
    return float(text)


def _argtype(parser):
    def convert(text):
        try:
            return parser(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    convert.__name__ = parser.__name__.replace("parse_", "")
    return convert


def _encode(obj) -> str:
    # floats at 17 significant digits; non-finite values become null
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, float):
        return format(obj, ".17g") if math.isfinite(obj) else "null"
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj) -> str:
    return _encode(obj)


def analyse(r1, n1, r2, n2, margin, level, alternative) -> dict:
    """Full test + interval document for one table; raises FMError subclasses."""
    counts = validate_counts(r1, n1, r2, n2)
    margin = as_margin(margin)
    result = z_statistic(counts, margin)
    ci = confidence_interval(counts, level)
    return {
        "inputs": {
            "r1": r1, "n1": n1, "r2": r2, "n2": n2,
            "margin": float(margin.s0), "level": level,
            "alternative": str(Alternative(alternative)),
        },
        "mle": {"p1d": result.mle.p1d, "p2d": result.mle.p2d, "case": result.mle.case_tag.value},
        "v0": result.v0,
        "z": result.z,
        "p_lower": result.p_lower,
        "p_upper": result.p_upper,
        "p_two_sided": result.p_two_sided,
        "ci": {
            "lower": ci.lower,
            "upper": ci.upper,
            "method_lower": ci.method_lower.value,
            "method_upper": ci.method_upper.value,
        },
    }


def _fail(exc: Exception) -> int:
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_NUMERICAL if isinstance(exc, NumericalError) else EXIT_INPUT


def cmd_test(args) -> int:
    try:
        doc = analyse(args.r1, args.n1, args.r2, args.n2, args.margin, args.level, args.alternative)
    except FMError as exc:
        return _fail(exc)
    print(dumps(doc))
    return EXIT_OK


_REQUIRED = ["r1", "n1", "r2", "n2", "margin"]


def cmd_batch(args) -> int:
    try:
        fh = open(args.input, newline="", encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            print("error: empty file, header expected", file=sys.stderr)
            return EXIT_INPUT
        header = [h.strip() for h in header]
        if header not in (_REQUIRED, _REQUIRED + ["level"]):
            print(f"error: bad header {header!r}; expected r1,n1,r2,n2,margin[,level]",
                  file=sys.stderr)
            return EXIT_INPUT
        for row_index, fields in enumerate(reader):
            if not fields:
                continue
            if len(fields) != len(header):
                print(f"error: row {row_index} has {len(fields)} fields, expected {len(header)}",
                      file=sys.stderr)
                return EXIT_INPUT
            print(dumps(_batch_row(row_index, dict(zip(header, fields)), args.alternative)),
                  flush=True)
    return EXIT_OK


def _batch_row(row_index: int, row: dict, alternative) -> dict:
    try:
        r1, n1, r2, n2 = (parse_int(row[k]) for k in ("r1", "n1", "r2", "n2"))
        margin = parse_decimal(row["margin"])
        level_text = row.get("level", "").strip()
        level = parse_decimal(level_text) if level_text else 0.95
    except ValueError as exc:
        return {"row": row_index, "error": "ParseError", "message": str(exc)}
    try:
        doc = analyse(r1, n1, r2, n2, margin, level, alternative)
    except FMError as exc:
        return {"row": row_index, "error": type(exc).__name__, "message": str(exc)}
    return {"row": row_index, **doc}


def cmd_simulate(args) -> int:
    try:
        config = SimConfig(
            n1=args.n1, n2=args.n2, p1_true=args.p1, p2_true=args.p2, s0=args.margin,
            level=args.level, alternative=args.alternative,
            replicates=args.replicates, seed=args.seed,
        )
    except FMError as exc:
        return _fail(exc)
    result = simulate(config, workers=args.workers)
    print(dumps({
        "config": {
            "n1": config.n1, "n2": config.n2, "p1": config.p1_true, "p2": config.p2_true,
            "margin": float(config.s0.s0), "level": config.level,
            "alternative": config.alternative.value,
            "replicates": config.replicates, "seed": config.seed,
        },
        **result.to_dict(),
    }))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    integer, decimal = _argtype(parse_int), _argtype(parse_decimal)
    alternatives = [a.value for a in Alternative]

    parser = argparse.ArgumentParser(
        prog="fmextreme",
        description="Farrington-Manning score test for a difference of two proportions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test one 2x2 table and report the confidence interval")
    for name in ("r1", "n1", "r2", "n2"):
        p.add_argument(f"--{name}", type=integer, required=True)
    p.add_argument("--margin", type=decimal, required=True, help="null difference p1 - p2")
    p.add_argument("--alternative", choices=alternatives, required=True)
    p.add_argument("--level", type=decimal, default=0.95)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("batch", help="process a CSV of tables, one JSON line per row")
    p.add_argument("--input", required=True, help="CSV with header r1,n1,r2,n2,margin[,level]")
    p.add_argument("--alternative", choices=alternatives, required=True)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("simulate", help="Monte Carlo rejection rate and CI coverage")
    p.add_argument("--n1", type=integer, required=True)
    p.add_argument("--n2", type=integer, required=True)
    p.add_argument("--p1", type=decimal, required=True)
    p.add_argument("--p2", type=decimal, required=True)
    p.add_argument("--margin", type=decimal, required=True)
    p.add_argument("--level", type=decimal, default=0.95)
    p.add_argument("--alternative", choices=alternatives, required=True)
    p.add_argument("--replicates", type=integer, required=True)
    p.add_argument("--seed", type=integer, default=0)
    p.add_argument("--workers", type=integer, default=1, help="worker processes (result unchanged)")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
