"""CLI: ``plot fig3|fig4|regret --in DIR --out FILE.png [--x-axis frames|time]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from plot_companion.artifacts import SchemaError
from plot_companion.figures import PlotSpec, render


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise SchemaError(f"{message}\n{self.format_usage()}")


def build_parser() -> _Parser:
    parser = _Parser(prog="plot", description=__doc__)
    parser.add_argument("kind", choices=["fig3", "fig4", "regret"])
    parser.add_argument("--in", dest="inputs", type=Path, required=True,
                        help="experiment output directory (or its parent for multi-run figures)")
    parser.add_argument("--out", type=Path, required=True, help="output image path (.png)")
    parser.add_argument("--x-axis", choices=["frames", "time"], default="frames")
    parser.add_argument("--dpi", type=int, default=120)
    return parser


def cli(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        out = render(
            PlotSpec(kind=args.kind, inputs=args.inputs, output=args.out,
                     x_axis=args.x_axis, dpi=args.dpi)
        )
        print(out)
        return 0
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
