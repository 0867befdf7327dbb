"""Desk-scale experiments on load balance and materialization.

Both are used by tests/test_acceptance.py and by the scripts in scripts/.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chunking import ChunkedText, load_bound_min_n, make_chunks, redistribute
from .dcx import DCXConfig, suffix_array
from .dsort import ArraySource, LexOrder, bucketed_sort
from .runtime import PeContext, Topology, spawn
from .text import split_text


@dataclass(frozen=True)
class LoadTrial:
    seed: int
    loads: np.ndarray  # (p, q) materialized records per PE per bucket

    @property
    def max_load(self) -> int:
        return int(self.loads.max())


def load_trial(n: int, p: int, q: int, c: int, seed: int, redistribute_chunks: bool = True) -> LoadTrial:
    """Bucketed sort of an already sorted key sequence 1..n after chunking.

    Splitters are exact quantiles (every key is sampled), so the only source of
    imbalance is the placement of chunks on PEs.
    """
    keys = np.arange(1, n + 1, dtype=np.int64)
    slices = split_text(keys, p)

    def program(ctx: PeContext):
        text = slices[ctx.rank]
        if redistribute_chunks:
            chunks = redistribute(ctx, make_chunks(ctx, text, c, 0), seed)
            local = ChunkedText(chunks).reassemble()
        else:
            local = text.local_chars
        loads = []
        with ctx.metrics.phase(0, "load"):
            source = ArraySource(local.reshape(-1, 1))
            for _, _ in bucketed_sort(ctx, source, q, LexOrder(), oversampling=n):
                pass
            loads = list(ctx.metrics.phases[(0, "load")].bucket_local)
        return loads

    rows = spawn(Topology(p, seed), program)
    return LoadTrial(seed, np.array(rows, dtype=np.int64))


@dataclass(frozen=True)
class LoadExperiment:
    n: int
    p: int
    q: int
    c: int
    gamma: float
    trials: list[LoadTrial]

    @property
    def bound(self) -> float:
        return 2 * self.n / (self.p * self.q)

    @property
    def expected(self) -> float:
        return self.n / (self.p * self.q)

    @property
    def required_n(self) -> float:
        return load_bound_min_n(self.p, self.q, self.c, self.gamma)

    @property
    def violations(self) -> int:
        return sum(t.max_load >= self.bound for t in self.trials)

    @property
    def mean_load(self) -> float:
        return float(np.mean([t.loads.mean() for t in self.trials]))

    def violation_upper_bound(self, confidence: float = 0.95) -> float:
        """One-sided Clopper-Pearson upper limit on the violation probability."""
        return binomial_upper(self.violations, len(self.trials), confidence)


def binomial_upper(k: int, trials: int, confidence: float = 0.95) -> float:
    """Exact one-sided upper confidence limit for a binomial proportion."""
    if k >= trials:
        return 1.0
    alpha = 1 - confidence
    lo, hi = k / trials, 1.0
    for _ in range(100):
        mid = (lo + hi) / 2
        # P(X <= k | mid)
        cdf = sum(math.comb(trials, i) * mid**i * (1 - mid) ** (trials - i) for i in range(k + 1))
        if cdf > alpha:
            lo = mid
        else:
            hi = mid
    return hi


def load_experiment(
    n: int, p: int = 8, q: int = 8, c: int = 64, gamma: float = 1.0, seeds: range = range(200)
) -> LoadExperiment:
    return LoadExperiment(n, p, q, c, gamma, [load_trial(n, p, q, c, s) for s in seeds])


@dataclass(frozen=True)
class SpaceReport:
    n: int
    p: int
    q: int
    peak_per_pe: list[int]  # max records materialized in one phase-3 bucket
    local_per_pe: list[int]  # all phase-3 records held per PE (what q = 1 materializes)

    @property
    def peak(self) -> int:
        return max(self.peak_per_pe)

    @property
    def single_bucket_peak(self) -> int:
        return max(self.local_per_pe)

    @property
    def bound(self) -> float:
        return 2 * self.n / (self.p * self.q)

    @property
    def reduction(self) -> float:
        return self.single_bucket_peak / max(self.peak, 1)


def space_report(text, x: int = 21, p: int = 8, q: int = 32, config: DCXConfig | None = None):
    """Top-level phase-3 materialization of one suffix array run.

    Chunk placement does not depend on q, so the records a PE holds in phase 3
    (the sum of its per-bucket counts) are exactly what a single-bucket run
    materializes at once.
    """
    base = config or DCXConfig()
    cfg = DCXConfig(**{**base.__dict__, "buckets": (q,) + tuple(base.buckets[1:])})
    result = suffix_array(text, x=x, p=p, config=cfg)
    ph = result.metrics.phase(0, "phase3")
    report = SpaceReport(
        n=ph.elements,
        p=p,
        q=q,
        peak_per_pe=ph.max_materialized,
        local_per_pe=[sum(b) for b in ph.bucket_loads],
    )
    return report, result
