"""Command-line figure rendering.

    plotkit render --kind esp-curve --in success.csv --out esp.png

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 malformed input
(missing named columns, empty data, unknown kind).
"""
from __future__ import annotations

import argparse
import sys

from .errors import EmptyData, MissingColumn, PlotkitError, UnknownKind
from .figures import KINDS, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render jointly-sparse-recovery experiment CSVs as figures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser(
        "render", formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        help="render one figure from CSV inputs",
    )
    p.add_argument("--kind", required=True, choices=KINDS, help="figure kind")
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   metavar="CSV", help="input CSV file(s)")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--dpi", type=int, default=110, help="raster resolution")
    p.add_argument("--cmap", default=None,
                   help="matplotlib colormap for heatmaps and images")
    p.add_argument("--title", default=None, help="figure title")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    style = {"dpi": args.dpi}
    if args.cmap:
        style["cmap"] = args.cmap
    if args.title:
        style["title"] = args.title
    try:
        out = render(args.kind, args.inputs, args.out, **style)
    except (MissingColumn, EmptyData, UnknownKind) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (PlotkitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
