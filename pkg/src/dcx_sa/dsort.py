"""Distributed sorting primitives.

Records are 2-D ``int64`` arrays (one row per record). An *order* decides how
rows compare; it only has to provide three vectorized operations:

``argsort(recs)``
    a permutation sorting ``recs``;
``count_less(ref, query)``
    for each query row, how many rows of ``ref`` are strictly smaller;
``equal_rows(a, b)``
    row-wise equality of two equally long arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Protocol, Sequence

import numpy as np

from .runtime import PeContext

DEFAULT_OVERSAMPLING = 16
DEFAULT_BATCH = 1 << 18


class EmptyInputError(ValueError):
    pass


class Order(Protocol):
    def argsort(self, recs: np.ndarray) -> np.ndarray: ...

    def count_less(self, ref: np.ndarray, query: np.ndarray) -> np.ndarray: ...

    def equal_rows(self, a: np.ndarray, b: np.ndarray) -> np.ndarray: ...


def as_records(data, width: int | None = None) -> np.ndarray:
    arr = np.asarray(data, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if width in (None, 1) else arr.reshape(-1, width)
    if arr.ndim != 2:
        raise ValueError(f"records must be 1-D or 2-D, got shape {arr.shape}")
    return arr


def _concat(parts: Sequence[np.ndarray], width: int) -> np.ndarray:
    parts = [p for p in parts if len(p)]
    if not parts:
        return np.empty((0, width), dtype=np.int64)
    return np.concatenate(parts) if len(parts) > 1 else parts[0]


class LexOrder:
    """Lexicographic order on a subset of columns (all columns by default)."""

    def __init__(self, columns: Sequence[int] | None = None):
        self.columns = None if columns is None else tuple(columns)

    def _cols(self, recs: np.ndarray) -> tuple[int, ...]:
        return self.columns if self.columns is not None else tuple(range(recs.shape[1]))

    def argsort(self, recs: np.ndarray) -> np.ndarray:
        cols = self._cols(recs)
        if len(cols) == 1:
            return np.argsort(recs[:, cols[0]], kind="stable")
        return np.lexsort(tuple(recs[:, c] for c in reversed(cols)))

    def count_less(self, ref: np.ndarray, query: np.ndarray) -> np.ndarray:
        cols = self._cols(query if len(query) else ref)
        if len(ref) == 0 or len(query) == 0:
            return np.zeros(len(query), dtype=np.int64)
        if len(cols) == 1:
            return np.searchsorted(np.sort(ref[:, cols[0]]), query[:, cols[0]], side="left")
        both = np.concatenate([ref[:, cols], query[:, cols]])
        # Query rows sort before equal ref rows, so only strictly smaller refs precede them.
        flag = np.concatenate([np.ones(len(ref), np.int8), np.zeros(len(query), np.int8)])
        perm = np.lexsort((flag,) + tuple(both[:, i] for i in reversed(range(len(cols)))))
        is_ref = perm < len(ref)
        before = np.cumsum(is_ref) - is_ref
        out = np.empty(len(query), dtype=np.int64)
        out[perm[~is_ref] - len(ref)] = before[~is_ref]
        return out

    def equal_rows(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        cols = list(self._cols(a))
        return np.all(a[:, cols] == b[:, cols], axis=1)


@dataclass(frozen=True)
class SplitterSet:
    q: int
    splitters: np.ndarray  # (q - 1, width), non-decreasing under the order


def select_splitters(
    ctx: PeContext,
    local_keys,
    q: int,
    oversampling: int = DEFAULT_OVERSAMPLING,
    order: Order | None = None,
) -> SplitterSet:
    """Pick q-1 splitters from a global random sample of oversampling*q keys per PE.

    Splitter i is the floor(i*N/q)-th smallest of the N gathered samples, so with
    exhaustive sampling bucket k (s_k < e <= s_{k+1}) receives about N/q keys.
    """
    if q < 1:
        raise ValueError(f"bucket count must be >= 1, got {q}")
    order = order or LexOrder()
    keys = as_records(local_keys)
    want = oversampling * q
    if want >= len(keys):
        sample = keys
    else:
        sample = keys[np.sort(ctx.rng.choice(len(keys), size=want, replace=False))]
    gathered = ctx.all_gather(sample)
    width = keys.shape[1]
    pool = _concat(gathered, width)
    if q == 1:
        return SplitterSet(1, np.empty((0, width), dtype=np.int64))
    if len(pool) == 0:
        raise EmptyInputError("cannot select splitters: no PE holds any keys")
    pool = pool[order.argsort(pool)]
    n = len(pool)
    idx = np.maximum(np.arange(1, q) * n // q - 1, 0)
    return SplitterSet(q, pool[idx].copy())


def assign_buckets(splitters: SplitterSet, recs: np.ndarray, order: Order) -> np.ndarray:
    """Bucket index per record: number of splitters strictly below it (ties go down)."""
    if splitters.q == 1 or len(recs) == 0:
        return np.zeros(len(recs), dtype=np.int64)
    return order.count_less(splitters.splitters, recs)


def global_sort(
    ctx: PeContext,
    local_records,
    order: Order | None = None,
    oversampling: int = DEFAULT_OVERSAMPLING,
) -> np.ndarray:
    """Single-level sample sort. Output slices concatenated over ranks are sorted."""
    order = order or LexOrder()
    recs = as_records(local_records)
    recs = recs[order.argsort(recs)]
    if ctx.p == 1:
        return recs
    total = ctx.all_reduce_sum(len(recs))
    if total == 0:
        return recs
    splitters = select_splitters(ctx, recs, ctx.p, oversampling, order)
    dest = assign_buckets(splitters, recs, order)
    bounds = np.searchsorted(dest, np.arange(ctx.p + 1), side="left")
    incoming = ctx.all_to_all([recs[bounds[d] : bounds[d + 1]] for d in range(ctx.p)])
    merged = _concat(incoming, recs.shape[1])
    return merged[order.argsort(merged)]


def run_boundaries(ctx: PeContext, sorted_records: np.ndarray, order: Order):
    """Global run structure of a globally sorted distributed array.

    Returns (run_start, eq_prev, eq_next): global position where each record's
    run of equal records starts, and whether it equals its global predecessor /
    successor. Empty PEs are skipped when looking across borders.
    """
    recs = sorted_records
    m = len(recs)
    eq_prev = np.zeros(m, dtype=bool)
    if m > 1:
        eq_prev[1:] = order.equal_rows(recs[1:], recs[:-1])
    info = ctx.all_gather((m, recs[:1].copy(), recs[-1:].copy()))
    me = ctx.rank
    offset = sum(info[r][0] for r in range(me))
    prev_last = next((info[r][2] for r in range(me - 1, -1, -1) if info[r][0]), None)
    next_first = next((info[r][1] for r in range(me + 1, ctx.p) if info[r][0]), None)
    if m and prev_last is not None:
        eq_prev[0] = bool(order.equal_rows(recs[:1], prev_last)[0])
    eq_next = np.zeros(m, dtype=bool)
    if m > 1:
        eq_next[:-1] = eq_prev[1:]
    if m and next_first is not None:
        eq_next[-1] = bool(order.equal_rows(recs[-1:], next_first)[0])

    pos = offset + np.arange(m, dtype=np.int64)
    starts = np.maximum.accumulate(np.where(eq_prev, -1, pos)) if m else pos
    last = int(starts[-1]) if m else -1
    carries = ctx.all_gather(last)
    carry = max(carries[:me], default=-1)
    starts = np.maximum(starts, carry)
    return starts, eq_prev, eq_next


def dense_rank(ctx: PeContext, sorted_records, order: Order | None = None) -> np.ndarray:
    """1 + number of globally strictly smaller records; equal records share a rank."""
    order = order or LexOrder()
    starts, _, _ = run_boundaries(ctx, as_records(sorted_records), order)
    return starts + 1


class ElementSource(Protocol):
    """Space-efficient elements that can be materialized on demand."""

    def __len__(self) -> int: ...

    def materialize(self, ids: np.ndarray) -> np.ndarray: ...


class ArraySource:
    def __init__(self, records):
        self.records = as_records(records)

    def __len__(self) -> int:
        return len(self.records)

    def materialize(self, ids: np.ndarray) -> np.ndarray:
        return self.records[ids]


def bucketed_sort(
    ctx: PeContext,
    source,
    q: int,
    order: Order | None = None,
    bucket_order: Order | None = None,
    oversampling: int = DEFAULT_OVERSAMPLING,
    batch_size: int = DEFAULT_BATCH,
) -> Iterator[tuple[int, np.ndarray]]:
    """Sort one splitter-delimited bucket at a time.

    Yields (k, locally held slice of sorted bucket k) for k = 0..q-1. Only the
    bucket currently being sorted is materialized; a compact bucket id per
    element is kept between passes. `bucket_order` (default: `order`) decides
    bucket membership and must be coarser than or equal to `order`.
    """
    order = order or LexOrder()
    bucket_order = bucket_order or order
    if not hasattr(source, "materialize"):
        source = ArraySource(source)
    n_local = len(source)
    total = ctx.all_reduce_sum(n_local)
    if q > 1 and total > 0:
        want = min(oversampling * q, n_local)
        if want:
            picks = np.sort(ctx.rng.choice(n_local, size=want, replace=False))
        else:
            picks = np.empty(0, dtype=np.int64)
        sample = source.materialize(picks)
        splitters = select_splitters(ctx, sample, q, oversampling, bucket_order)
        ids_dtype = np.uint8 if q <= 256 else np.int32
        bucket_of = np.empty(n_local, dtype=ids_dtype)
        for lo in range(0, n_local, batch_size):
            ids = np.arange(lo, min(lo + batch_size, n_local))
            bucket_of[lo : lo + len(ids)] = assign_buckets(
                splitters, source.materialize(ids), bucket_order
            )
    else:
        q = max(q, 1)
        bucket_of = None

    for k in range(q):
        if bucket_of is None:
            ids = np.arange(n_local)
        else:
            ids = np.flatnonzero(bucket_of == k)
        recs = source.materialize(ids)
        out = global_sort(ctx, recs, order, oversampling)
        ctx.metrics.record_bucket(len(recs), len(out))
        del recs
        yield k, out
