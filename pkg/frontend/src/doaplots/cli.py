"""Command-line figure generation from harness CSV files."""

from __future__ import annotations

import argparse
import sys

from .data import MissingSeriesError, SchemaError
from .figures import KINDS, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doa-plot",
        description="Render figures from sparsedoa sweep / bound / weight CSVs",
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument(
        "--in", dest="inputs", required=True, nargs="+", help="input CSV file(s)"
    )
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument(
        "--series",
        nargs="*",
        default=(),
        help="series names to draw (default: all found)",
    )
    parser.add_argument(
        "--linear-y",
        action="store_true",
        help="linear instead of logarithmic y axis",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        inputs=tuple(args.inputs),
        kind=args.kind,
        output=args.out,
        series=tuple(args.series),
        log_y=not args.linear_y,
    )
    try:
        render(spec)
    except (SchemaError, MissingSeriesError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
