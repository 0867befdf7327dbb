"""Command line front end: text file in, fixed-width little-endian suffix array out."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .dcx import DCXConfig, suffix_array
from .difference_cover import SUPPORTED_X, builtin_cover
from .metrics import emit_metrics
from .oracle import verify_sa

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
INT_WIDTHS = (5, 8)

log = logging.getLogger("dcx_sa")


def write_sa(sa: np.ndarray, path, width: int = 8) -> None:
    """n little-endian unsigned integers of `width` bytes, no header."""
    if width not in INT_WIDTHS:
        raise ValueError(f"int width must be one of {INT_WIDTHS}")
    sa = np.ascontiguousarray(sa, dtype="<u8")
    if width < 8 and len(sa) and int(sa.max()) >= 1 << (8 * width):
        raise ValueError(f"index {int(sa.max())} does not fit in {width} bytes")
    raw = sa.view(np.uint8).reshape(-1, 8)[:, :width]
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(raw).tobytes())


def read_sa(path, width: int = 8) -> np.ndarray:
    """Inverse of write_sa."""
    if width not in INT_WIDTHS:
        raise ValueError(f"int width must be one of {INT_WIDTHS}")
    raw = np.fromfile(path, dtype=np.uint8)
    if len(raw) % width:
        raise ValueError(f"file size {len(raw)} is not a multiple of {width}")
    full = np.zeros((len(raw) // width, 8), dtype=np.uint8)
    full[:, :width] = raw.reshape(-1, width)
    return full.view("<u8").ravel().astype(np.int64)


def _int_list(value: str) -> tuple[int, ...]:
    try:
        out = tuple(int(v) for v in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("bucket counts must be positive")
    return out


def _positive(value: str) -> int:
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dcx-sa", description="Distributed DCX suffix array construction on simulated PEs."
    )
    ap.add_argument("--input", required=True, type=Path, help="raw byte text (must not contain byte 0)")
    ap.add_argument("--out", type=Path, help="suffix array output file")
    ap.add_argument("--x", type=int, default=21, choices=SUPPORTED_X, help="difference cover modulus")
    ap.add_argument("--pes", type=_positive, default=4, help="number of simulated PEs")
    ap.add_argument("--buckets", type=_int_list, default=(32, 8, 1), help="phase-3 buckets per level")
    ap.add_argument("--sample-buckets", type=_int_list, default=(1,), help="phase-1 buckets per level")
    ap.add_argument("--chunk-size", type=_positive, default=512)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--pack", choices=("auto", "off", "fit", "fill"), default="auto")
    ap.add_argument("--discard", choices=("auto", "off", "on"), default="auto")
    ap.add_argument("--redistribute", choices=("level", "per-sort", "off"), default="level")
    ap.add_argument("--base-case-size", type=int, default=4096)
    ap.add_argument("--int-width", type=int, choices=INT_WIDTHS, default=8)
    ap.add_argument("--metrics", type=Path, help="write a JSON metrics report here")
    ap.add_argument("--verify", action="store_true", help="check the result by direct suffix comparison")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        data = args.input.read_bytes()
    except OSError as exc:
        print(f"error: cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_IO
    if b"\0" in data:
        print(f"error: {args.input} contains byte 0, which is reserved for the sentinel", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = DCXConfig(
            buckets=args.buckets,
            sample_buckets=args.sample_buckets,
            chunk_size=args.chunk_size,
            seed=args.seed,
            packing=args.pack,
            discarding=args.discard,
            redistribute=args.redistribute,
            base_case_size=args.base_case_size,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    result = suffix_array(data, p=args.pes, config=config, cover=builtin_cover(args.x))
    sa = result.sa
    log.info("n=%d recursion depth=%d", len(sa), result.metrics.recursion_depth)

    status = EXIT_OK
    verdict = None
    if args.verify:
        verdict = verify_sa(data + b"\0", sa)
        if not verdict:
            print(f"verification failed at {verdict.position}: {verdict.reason}", file=sys.stderr)
            status = EXIT_VERIFY
        else:
            log.info("verification passed")

    try:
        if args.out is not None:
            write_sa(sa, args.out, args.int_width)
        if args.metrics is not None:
            result.metrics.params.update(
                int_width=args.int_width, byte_order="little", output=str(args.out) if args.out else None
            )
            if verdict is not None:
                result.metrics.params["verified"] = bool(verdict)
            emit_metrics(result.metrics, args.metrics)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
