"""Command-line entry: ``dreamer-convert convert <mat-path> <out-dir> [--verify]``."""

from __future__ import annotations

import argparse
import sys

from .converter import StructuralMismatch, convert, verify


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dreamer-convert",
        description="Convert the DREAMER MATLAB container to the emoscale-v1 "
        "interchange format.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_convert = sub.add_parser("convert", help="run the conversion")
    p_convert.add_argument("mat_path", help="path to the distributed .mat container")
    p_convert.add_argument("out_dir", help="directory for manifest + binaries")
    p_convert.add_argument(
        "--verify", action="store_true",
        help="re-read both sides afterwards and compare counts, scores, and "
        "per-channel checksums",
    )
    args = parser.parse_args(argv)

    try:
        manifest, report = convert(args.mat_path, args.out_dir)
        print(report.summary())
        print(manifest)
        if args.verify:
            check = verify(manifest, args.mat_path)
            print(check.summary())
            if not check.clean:
                return 1
        return 0
    except (StructuralMismatch, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
