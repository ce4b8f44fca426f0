"""render_figures <figure-id|all> --in <dir> --out <dir>"""

from __future__ import annotations

import argparse
import sys

from risfigures.render import SchemaError, render, render_all
from risfigures.specs import SPECS


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="render_figures", description=__doc__)
    ap.add_argument("figure", help="figure id (fig4..fig16) or 'all'")
    ap.add_argument("--in", dest="in_dir", required=True, help="directory with CSV outputs")
    ap.add_argument("--out", dest="out_dir", required=True, help="directory for images")
    ap.add_argument("--no-overlay", action="store_true", help="suppress oracle overlays")
    args = ap.parse_args(argv)
    overlay = False if args.no_overlay else None

    if args.figure == "all":
        written, skipped = render_all(args.in_dir, args.out_dir, overlay)
        for p in written:
            print(p)
        for fid, reason in sorted(skipped.items()):
            print(f"skipped {fid}: {reason}", file=sys.stderr)
        return 0 if written else 2

    spec = SPECS.get(args.figure)
    if spec is None:
        print(f"unknown figure {args.figure!r}; known: {', '.join(sorted(SPECS))}", file=sys.stderr)
        return 1
    try:
        for p in render(spec, args.in_dir, args.out_dir, overlay):
            print(p)
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
