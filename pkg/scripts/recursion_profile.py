"""Per-level recursion statistics (sample counts, uniqueness, discarding) for a text file or a synthetic input."""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from dcx_sa.dcx import DCXConfig, suffix_array


def synthetic(kind: str, n: int, seed: int) -> bytes:
    rng = np.random.default_rng(seed)
    if kind == "periodic":
        return (b"ab" * (n // 2 + 1))[:n]
    if kind == "dna":
        return bytes(rng.choice(list(b"ACGT"), n).tolist())
    if kind == "repeats":
        block = rng.integers(1, 256, max(n // 10, 1)).astype(np.uint8)
        filler = rng.integers(1, 256, n).astype(np.uint8)
        filler[n // 3 : n // 3 + len(block)] = block[: n - n // 3]
        filler[2 * n // 3 : 2 * n // 3 + len(block)] = block[: n - 2 * n // 3]
        return filler.tobytes()
    return rng.integers(1, 256, n).astype(np.uint8).tobytes()


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--input", type=Path)
    ap.add_argument("--kind", choices=("random", "periodic", "dna", "repeats"), default="repeats")
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--x", type=int, default=7)
    ap.add_argument("--pes", type=int, default=4)
    args = ap.parse_args()

    text = args.input.read_bytes() if args.input else synthetic(args.kind, args.n, 0)
    for mode in ("off", "on"):
        res = suffix_array(text, x=args.x, p=args.pes, config=DCXConfig(discarding=mode))
        print(f"discarding={mode}")
        for lv in res.metrics.levels:
            keys = ("n", "samples", "all_unique", "discardable", "reduced_input_size", "base_case")
            print("  depth", lv["depth"], {k: lv[k] for k in keys if k in lv})


if __name__ == "__main__":
    main()
