"""Peak phase-3 tuples materialized per PE for several bucket counts."""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from dcx_sa.experiments import space_report


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mb", type=float, default=8, help="input size in MiB of random bytes")
    ap.add_argument("--sigma", type=int, default=255)
    ap.add_argument("--pes", type=int, default=8)
    ap.add_argument("--x", type=int, default=21)
    ap.add_argument("--buckets", type=int, nargs="+", default=[1, 4, 32])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="write the results here")
    args = ap.parse_args()

    n = int(args.mb * 2**20)
    text = np.random.default_rng(args.seed).integers(1, args.sigma + 1, n).astype(np.uint8).tobytes()
    rows = []
    for q in args.buckets:
        start = time.perf_counter()
        report, _ = space_report(text, x=args.x, p=args.pes, q=q)
        rows.append(
            {
                "q": q,
                "peak": report.peak,
                "bound_2n_over_pq": report.bound,
                "held_per_pe": report.single_bucket_peak,
                "reduction": report.reduction,
                "seconds": time.perf_counter() - start,
            }
        )
        r = rows[-1]
        print(
            f"q={q:3d} peak={r['peak']:>10d} 2n/(pq)={r['bound_2n_over_pq']:>12.0f} "
            f"held={r['held_per_pe']:>10d} reduction={r['reduction']:.1f}x ({r['seconds']:.1f}s)"
        )
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"n": n + 1, "p": args.pes, "x": args.x, "rows": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
