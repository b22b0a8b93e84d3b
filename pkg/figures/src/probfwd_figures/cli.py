"""Command line wrapper: `render <figure-id> --in <csv...> --out <path>`."""

from __future__ import annotations

import argparse
import sys

from .recipes import FIGURE_IDS, FigureError, FigureRecipe, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render", description="Render probfwd CSV outputs as figures")
    parser.add_argument("figure_id", choices=FIGURE_IDS, help="which figure to draw")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        help="input CSV path(s), order per figure")
    parser.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    recipe = FigureRecipe(figure_id=args.figure_id, inputs=tuple(args.inputs),
                          output=args.out)
    try:
        result = render(recipe)
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for label, count in result.point_counts.items():
        print(f"{result.output}: {label}: {count} points")
    return 0


if __name__ == "__main__":
    sys.exit(main())
