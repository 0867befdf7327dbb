"""Per-PE per-bucket loads of a bucketed sort on pre-sorted input, with and
without random chunk redistribution."""

from __future__ import annotations

import argparse

import numpy as np

from dcx_sa.experiments import load_experiment, load_trial


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1 << 18)
    ap.add_argument("--pes", type=int, default=8)
    ap.add_argument("--buckets", type=int, default=8)
    ap.add_argument("--chunk-size", type=int, default=64)
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--seeds", type=int, default=200)
    args = ap.parse_args()

    exp = load_experiment(args.n, args.pes, args.buckets, args.chunk_size, args.gamma, range(args.seeds))
    maxima = np.array([t.max_load for t in exp.trials])
    print(f"n={exp.n} p={exp.p} q={exp.q} c={exp.c} gamma={exp.gamma}")
    print(f"precondition n >= {exp.required_n:.0f}: {exp.n >= exp.required_n}")
    print(f"expected load n/(pq) = {exp.expected:.1f}, bound 2n/(pq) = {exp.bound:.1f}")
    print(f"mean load {exp.mean_load:.1f}; max load over seeds: min {maxima.min()} median {np.median(maxima):.0f} max {maxima.max()}")
    print(
        f"trials reaching the bound: {exp.violations}/{len(exp.trials)} "
        f"(95% upper limit {exp.violation_upper_bound():.4f}, claim <= {1 / exp.p ** exp.gamma:.4f})"
    )
    plain = load_trial(args.n, args.pes, args.buckets, args.chunk_size, 0, redistribute_chunks=False)
    print(f"without chunking: max load {plain.max_load} (local block n/p = {args.n // args.pes})")


if __name__ == "__main__":
    main()
