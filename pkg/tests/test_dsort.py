from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcx_sa.dsort import (
    ArraySource,
    LexOrder,
    bucketed_sort,
    dense_rank,
    global_sort,
    select_splitters,
)
from dcx_sa.runtime import Topology, spawn, spawn_with_metrics


def distribute(values, p):
    arr = np.asarray(values, dtype=np.int64)
    bounds = np.arange(p + 1) * len(arr) // p
    return [arr[bounds[i] : bounds[i + 1]] for i in range(p)]


def run_sort(parts, **kw):
    out = spawn(Topology(len(parts)), lambda ctx: global_sort(ctx, parts[ctx.rank], **kw))
    return np.concatenate(out).reshape(-1, out[0].shape[1] if out[0].ndim == 2 else 1)


def test_lex_order_count_less():
    ref = np.array([[1, 2], [1, 3], [0, 9], [2, 0]])
    query = np.array([[1, 3], [0, 0], [5, 5]])
    assert LexOrder().count_less(ref, query).tolist() == [2, 0, 4]
    assert LexOrder([0]).count_less(ref, query).tolist() == [1, 0, 4]


def test_splitters_q1_empty():
    out = spawn(Topology(2), lambda ctx: select_splitters(ctx, np.arange(10), 1))
    assert out[0].splitters.shape[0] == 0


def test_splitters_exhaustive_quantiles():
    keys = np.arange(1, 101)
    out = spawn(Topology(1), lambda ctx: select_splitters(ctx, keys, 4, oversampling=100))
    assert out[0].splitters[:, 0].tolist() == [25, 50, 75]


def test_splitters_union_equivalence():
    keys = np.random.default_rng(3).integers(0, 1000, 40)
    two = spawn(Topology(2), lambda ctx: select_splitters(ctx, keys, 4, oversampling=100))
    one = spawn(Topology(1), lambda ctx: select_splitters(ctx, np.concatenate([keys, keys]), 4, oversampling=100))
    assert np.array_equal(two[0].splitters, one[0].splitters)
    assert np.array_equal(two[1].splitters, one[0].splitters)


def test_global_sort_examples():
    assert run_sort([np.array([3, 1]), np.array([2, 0])])[:, 0].tolist() == [0, 1, 2, 3]
    assert sorted(run_sort(distribute([7] * 9, 3))[:, 0].tolist()) == [7] * 9
    vals = np.random.default_rng(0).integers(-(10**9), 10**9, 10_000)
    assert np.array_equal(run_sort(distribute(vals, 8))[:, 0], np.sort(vals))


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.tuples(st.integers(0, 5), st.integers(-3, 3)), max_size=200),
    st.integers(1, 6),
)
def test_global_sort_property(rows, p):
    recs = np.array(rows, dtype=np.int64).reshape(-1, 2)
    got = run_sort(distribute(recs, p)) if len(recs) else np.empty((0, 2))
    assert got.tolist() == sorted(map(list, rows))


def ranks(parts):
    return np.concatenate(spawn(Topology(len(parts)), lambda ctx: dense_rank(ctx, parts[ctx.rank].reshape(-1, 1))))


def test_dense_rank_examples():
    assert ranks([np.array([1, 1]), np.array([2])]).tolist() == [1, 1, 3]
    assert ranks([np.array([1]), np.array([2, 3])]).tolist() == [1, 2, 3]
    assert ranks([np.array([4, 4]), np.array([4, 4])]).tolist() == [1, 1, 1, 1]
    assert ranks([np.array([4]), np.array([], dtype=np.int64), np.array([4, 5])]).tolist() == [1, 1, 3]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 6), max_size=80), st.integers(1, 5))
def test_dense_rank_counting(values, p):
    srt = np.sort(np.array(values, dtype=np.int64))
    got = ranks(distribute(srt, p))
    assert got.tolist() == [1 + int(np.sum(srt < v)) for v in srt]


def bucketed(parts, q, **kw):
    def program(ctx):
        out = [recs for _, recs in bucketed_sort(ctx, ArraySource(parts[ctx.rank].reshape(-1, 1)), q, **kw)]
        return out

    per_pe = spawn(Topology(len(parts)), program)
    return np.concatenate([per_pe[r][k] for k in range(q) for r in range(len(parts))])[:, 0]


@pytest.mark.parametrize("q", [1, 2, 4, 16])
def test_bucketed_equals_global(q):
    vals = np.random.default_rng(q).integers(0, 5000, 10_000)
    parts = distribute(vals, 4)
    assert np.array_equal(bucketed(parts, q), run_sort(parts)[:, 0])


def test_bucketed_duplicates_stay_together():
    vals = np.repeat(np.arange(5), 50)
    np.random.default_rng(1).shuffle(vals)
    assert np.array_equal(bucketed(distribute(vals, 3), 8), np.sort(vals))


def test_bucketed_sorted_input_without_chunking_materializes_everything():
    # The first PE owns all keys of the first bucket on globally sorted input.
    p = q = 4
    parts = distribute(np.arange(4000), p)

    def program(ctx):
        with ctx.metrics.phase(0, "sort"):
            for _ in bucketed_sort(ctx, ArraySource(parts[ctx.rank].reshape(-1, 1)), q, oversampling=4000):
                pass

    _, pes = spawn_with_metrics(Topology(p), program)
    first_bucket = pes[0].phases[(0, "sort")].bucket_local[0]
    assert first_bucket == len(parts[0])
