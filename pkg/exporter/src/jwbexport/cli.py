"""jwb-export: convert a Keras HDF5 checkpoint to JWB1 and optionally verify it.

Exit codes: 0 success (verification passing when requested), 1 conversion or
verification failure, 2 usage/I-O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .crosscheck import cross_check
from .detect import Detection, UnrecognizedArchitecture
from .export import export


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="jwb-export",
        description="Convert framework checkpoints of the supported segmentation "
                    "architectures into the engine's JWB1 weight format",
    )
    parser.add_argument("--in", dest="checkpoint", required=True, help="source .h5 checkpoint")
    parser.add_argument("--out", required=True, help="destination .jwb file")
    parser.add_argument("--manifest", help="JSON-lines manifest path (default: <out>.manifest.jsonl)")
    parser.add_argument("--verify", metavar="CUBE.hsc",
                        help="HSC1 cube of random inputs for a dual-engine comparison")
    parser.add_argument("--tolerance", type=float, default=1e-4,
                        help="max |delta| allowed between engines during --verify")
    args = parser.parse_args(argv)

    try:
        manifest = export(args.checkpoint, args.out)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (UnrecognizedArchitecture, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    manifest_path = args.manifest or f"{args.out}.manifest.jsonl"
    manifest.write(manifest_path)
    print(f"exported {manifest.architecture} ({manifest.in_channels} channels, "
          f"{manifest.classes} classes): {len(manifest.records)} records -> {args.out}")

    if args.verify:
        if not Path(args.verify).exists():
            print(f"error: verification cube {args.verify} not found", file=sys.stderr)
            return 2
        detection = Detection(manifest.architecture, manifest.in_channels, manifest.classes)
        try:
            result = cross_check(
                args.checkpoint, args.out, args.verify, detection, args.tolerance
            )
        except (RuntimeError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        status = "PASS" if result.passed else "FAIL"
        print(f"cross-check over {result.inputs} pixels: max |delta| = "
              f"{result.max_abs_diff:.3e} (tolerance {result.tolerance:g}) {status}")
        if not result.passed:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
