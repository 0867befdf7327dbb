"""Distributed DCX suffix array construction with bucketing, random chunking,
discarding and packing.

One recursion level works like this on every PE:

1. sort the X-prefixes of the difference-cover sample and name them by dense rank;
2. if names collide, build the reduced text T' of names (ordered by residue
   class, then position), suffix-sort it recursively and read unique ranks
   back from its suffix array;
3. build one tuple per suffix (X-prefix, |D| sample ranks, index) and sort all
   of them bucket by bucket with the rank-inducing comparison.

Ranks are >= 1; rank 0 stands for "past the end of the text".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chunking import ChunkedText, block_chunk, make_chunks, redistribute
from .difference_cover import DifferenceCover, builtin_cover
from .dsort import LexOrder, bucketed_sort, run_boundaries
from .metrics import RunMetrics
from .packing import PackingScheme, bits_for_alphabet, pack_matrix
from .runtime import PeContext, Topology, spawn_with_metrics
from .text import DistText, block_bounds, owner_of, split_text

REDISTRIBUTE_MODES = ("level", "per-sort", "off")
PACKING_CHOICES = ("auto", "off", "fit", "fill")
DISCARD_CHOICES = ("auto", "on", "off")
_MATERIALIZE_BATCH = 1 << 16


@dataclass(frozen=True)
class DCXConfig:
    buckets: tuple[int, ...] = (32, 8, 1)  # phase-3 buckets per recursion depth
    sample_buckets: tuple[int, ...] = (1,)  # phase-1 buckets per recursion depth
    chunk_size: int = 512
    seed: int = 0
    packing: str = "auto"
    word_bits: int = 63
    discarding: str = "auto"
    discard_min_fraction: float = 0.01
    redistribute: str = "level"
    base_case_size: int = 4096
    oversampling: int = 16
    gamma: float = 1.0
    batch_size: int = 1 << 18

    def __post_init__(self):
        if self.redistribute not in REDISTRIBUTE_MODES:
            raise ValueError(f"redistribute must be one of {REDISTRIBUTE_MODES}")
        if self.packing not in PACKING_CHOICES:
            raise ValueError(f"packing must be one of {PACKING_CHOICES}")
        if self.discarding not in DISCARD_CHOICES:
            raise ValueError(f"discarding must be one of {DISCARD_CHOICES}")
        if not self.buckets or min(self.buckets) < 1:
            raise ValueError("bucket schedule needs positive entries")
        if not self.sample_buckets or min(self.sample_buckets) < 1:
            raise ValueError("sample bucket schedule needs positive entries")
        if self.chunk_size < 1:
            raise ValueError("chunk size must be >= 1")

    def buckets_at(self, depth: int) -> int:
        return self.buckets[min(depth, len(self.buckets) - 1)]

    def sample_buckets_at(self, depth: int) -> int:
        return self.sample_buckets[min(depth, len(self.sample_buckets) - 1)]


# --------------------------------------------------------------------------
# tuples and the rank-inducing comparison


@dataclass(frozen=True)
class SampleTuple:
    prefix: tuple[int, ...]
    global_index: int


@dataclass(frozen=True)
class MergeTuple:
    residue: int
    chars: tuple[int, ...]
    ranks: tuple[int, ...]
    global_index: int


@dataclass(frozen=True)
class RankEntries:
    """Sample ranks held by the home PE of each index (sorted by index)."""

    index: np.ndarray
    rank: np.ndarray
    unique: np.ndarray | None = None


def make_merge_tuple(text: Sequence[int], rank: Sequence[int], j: int, cover: DifferenceCover) -> MergeTuple:
    """Tuple for suffix j of a full text; `rank[i]` is the sample rank of i (i < n)."""
    n, x = len(text), cover.x
    chars = tuple(int(text[i]) if i < n else 0 for i in range(j, j + x))
    ranks = tuple(int(rank[j + d]) if j + d < n else 0 for d in cover.rank_offsets(j % x))
    return MergeTuple(j % x, chars, ranks, j)


def compare_tuples(a: MergeTuple, b: MergeTuple, cover: DifferenceCover) -> int:
    """-1/0/1 order of two suffixes from l characters plus the ranks at offset l."""
    l = cover.shift(a.residue, b.residue)
    ca, cb = a.chars[:l], b.chars[:l]
    if ca != cb:
        return -1 if ca < cb else 1
    ra = a.ranks[cover.rank_offsets(a.residue).index(l)]
    rb = b.ranks[cover.rank_offsets(b.residue).index(l)]
    if ra != rb:
        return -1 if ra < rb else 1
    return (a.global_index > b.global_index) - (a.global_index < b.global_index)


class DCXOrder:
    """Vectorized rank-inducing order on merge records.

    Record columns: residue, W prefix words, |D| ranks, global index.

    Records with different prefixes are ordered by the prefix, which covers at
    least X > shift characters. Within one residue class r every rank slot is a
    common sample offset, so sorting the class by (prefix group, rank in any
    slot) yields its true order, and the key of every slot is then monotone
    along that order. Comparing class a against class b only needs the keys
    for slot(a, b) and slot(b, a), so counting reduces to searchsorted calls
    on sorted arrays.
    """

    def __init__(self, cover: DifferenceCover, nwords: int):
        self.cover = cover
        self.nwords = nwords
        self.slots = cover.slot_table()
        self.rank_col = 1 + nwords

    @property
    def width(self) -> int:
        return 1 + self.nwords + self.cover.size + 1

    def _groups(self, *arrays: np.ndarray) -> list[np.ndarray]:
        """Dense ids of the prefix words, shared across the given arrays."""
        w = self.nwords
        pre = np.concatenate([a[:, 1 : 1 + w] for a in arrays])
        if w == 1:
            _, gid = np.unique(pre[:, 0], return_inverse=True)
        else:
            perm = np.lexsort(tuple(pre[:, i] for i in range(w - 1, -1, -1)))
            srt = pre[perm]
            new = np.ones(len(srt), dtype=np.int64)
            new[1:] = np.any(srt[1:] != srt[:-1], axis=1)
            gid = np.empty(len(srt), dtype=np.int64)
            gid[perm] = np.cumsum(new) - 1
        gid = gid.astype(np.int64, copy=False).ravel()
        out, lo = [], 0
        for a in arrays:
            out.append(gid[lo : lo + len(a)])
            lo += len(a)
        return out

    def _classes(self, recs: np.ndarray, gid: np.ndarray, radix: int) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        """residue -> (row ids in true order, (rows, |D|) sorted slot keys)."""
        rc, v = self.rank_col, self.cover.size
        res = recs[:, 0]
        out = {}
        for r in np.unique(res):
            rows = np.flatnonzero(res == r)
            keys = gid[rows, None] * radix + recs[rows, rc : rc + v]
            order = np.argsort(keys[:, 0], kind="stable")
            out[int(r)] = (rows[order], keys[order])
        return out

    def _radix(self, *arrays: np.ndarray) -> tuple[int, int]:
        rc, v = self.rank_col, self.cover.size
        radix = max(int(a[:, rc : rc + v].max()) for a in arrays if len(a)) + 1
        groups = sum(len(a) for a in arrays)
        if groups * radix >= 2**62:
            raise OverflowError("combined DCX key exceeds 62 bits")
        return radix, groups

    def count_less(self, ref: np.ndarray, query: np.ndarray) -> np.ndarray:
        out = np.zeros(len(query), dtype=np.int64)
        if len(ref) == 0 or len(query) == 0:
            return out
        gid_ref, gid_q = self._groups(ref, query)
        radix, _ = self._radix(ref, query)
        ref_cls = self._classes(ref, gid_ref, radix)
        for a, (rows_a, keys_a) in self._classes(query, gid_q, radix).items():
            count = np.zeros(len(rows_a), dtype=np.int64)
            for b, (_, keys_b) in ref_cls.items():
                count += np.searchsorted(
                    keys_b[:, int(self.slots[b, a])], keys_a[:, int(self.slots[a, b])], side="left"
                )
            out[rows_a] = count
        return out

    def argsort(self, recs: np.ndarray) -> np.ndarray:
        if len(recs) == 0:
            return np.empty(0, dtype=np.int64)
        (gid,) = self._groups(recs)
        radix, _ = self._radix(recs)
        cls = self._classes(recs, gid, radix)
        pos = np.zeros(len(recs), dtype=np.int64)
        for a, (rows_a, keys_a) in cls.items():
            count = np.arange(len(rows_a), dtype=np.int64)
            for b, (_, keys_b) in cls.items():
                if b != a:
                    count += np.searchsorted(
                        keys_b[:, int(self.slots[b, a])], keys_a[:, int(self.slots[a, b])], side="left"
                    )
            pos[rows_a] = count
        perm = np.empty(len(recs), dtype=np.int64)
        perm[pos] = np.arange(len(recs), dtype=np.int64)
        return perm

    def equal_rows(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.all(a == b, axis=1)


# --------------------------------------------------------------------------
# element sources over the chunks held by a PE


def _gather_prefixes(buffer: np.ndarray, pos: np.ndarray, length: int, scheme: PackingScheme) -> np.ndarray:
    chars = buffer[pos[:, None] + np.arange(length)].astype(np.int64, copy=False)
    return pack_matrix(chars, scheme)


class SampleSource:
    """Difference-cover sample positions of the held chunks; rows are (prefix words, index)."""

    def __init__(self, ct: ChunkedText, cover: DifferenceCover, length: int, scheme: PackingScheme):
        self.ct, self.cover, self.length, self.scheme = ct, cover, length, scheme
        self.first = cover.sample_count_below(ct.starts)
        counts = cover.sample_count_below(ct.starts + ct.lens) - self.first
        self.off = np.zeros(len(counts) + 1, dtype=np.int64)
        np.cumsum(counts, out=self.off[1:])
        self.nwords = scheme.num_words(cover.x)

    def __len__(self) -> int:
        return int(self.off[-1])

    def materialize(self, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        out = np.empty((len(ids), self.nwords + 1), dtype=np.int64)
        for lo in range(0, len(ids), _MATERIALIZE_BATCH):
            part = ids[lo : lo + _MATERIALIZE_BATCH]
            k = np.searchsorted(self.off, part, side="right") - 1
            j = self.cover.nth_sample(self.first[k] + part - self.off[k])
            pos = self.ct.buf_off[k] + (j - self.ct.starts[k])
            out[lo : lo + len(part), :-1] = _gather_prefixes(self.ct.buffer, pos, self.length, self.scheme)
            out[lo : lo + len(part), -1] = j
        return out


class MergeSource:
    """All owned positions of the held chunks as merge records."""

    def __init__(self, ct: ChunkedText, cover: DifferenceCover, length: int, scheme: PackingScheme):
        self.ct, self.cover, self.length, self.scheme = ct, cover, length, scheme
        self.nwords = scheme.num_words(cover.x)
        self.offsets = cover.offset_table()

    def __len__(self) -> int:
        return self.ct.total

    def materialize(self, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        w, v = self.nwords, self.cover.size
        out = np.empty((len(ids), 1 + w + v + 1), dtype=np.int64)
        for lo in range(0, len(ids), _MATERIALIZE_BATCH):
            part = ids[lo : lo + _MATERIALIZE_BATCH]
            j, pos = self.ct.locate(part)
            res = j % self.cover.x
            rows = slice(lo, lo + len(part))
            out[rows, 0] = res
            out[rows, 1 : 1 + w] = _gather_prefixes(self.ct.buffer, pos, self.length, self.scheme)
            out[rows, 1 + w : 1 + w + v] = self.ct.annotations[pos[:, None] + self.offsets[res]]
            out[rows, -1] = j
        return out


# --------------------------------------------------------------------------
# layout helpers


def _route(ctx: PeContext, dest: np.ndarray, *columns: np.ndarray) -> list[np.ndarray]:
    """Send row i of the given columns to PE dest[i]; returns received columns."""
    order = np.argsort(dest, kind="stable")
    dest = dest[order]
    cols = np.stack([np.asarray(c, dtype=np.int64)[order] for c in columns], axis=1) if len(columns) else None
    bounds = np.searchsorted(dest, np.arange(ctx.p + 1), side="left")
    incoming = ctx.all_to_all([cols[bounds[d] : bounds[d + 1]] for d in range(ctx.p)])
    got = np.concatenate(incoming) if incoming else np.empty((0, len(columns)), np.int64)
    return [got[:, i] for i in range(len(columns))]


def _layout(ctx: PeContext, local_len: int) -> np.ndarray:
    lens = ctx.all_gather(local_len)
    return np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)


@dataclass(frozen=True)
class SampleLayout:
    """Position t of sample j in T': residue classes of D in increasing order,
    positions ascending within a class."""

    cover: DifferenceCover
    n: int
    class_off: np.ndarray = field(repr=False)
    class_of_residue: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, cover: DifferenceCover, n: int) -> "SampleLayout":
        x = cover.x
        counts = [(n - d + x - 1) // x if d < n else 0 for d in cover.d]
        off = np.zeros(len(counts) + 1, dtype=np.int64)
        np.cumsum(counts, out=off[1:])
        cls_of = np.full(x, -1, dtype=np.int64)
        for i, d in enumerate(cover.d):
            cls_of[d] = i
        return cls(cover, n, off, cls_of)

    @property
    def size(self) -> int:
        return int(self.class_off[-1])

    def t_of(self, j: np.ndarray) -> np.ndarray:
        j = np.asarray(j, dtype=np.int64)
        return self.class_off[self.class_of_residue[j % self.cover.x]] + j // self.cover.x

    def j_of(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.int64)
        ci = np.searchsorted(self.class_off, t, side="right") - 1
        return np.array(self.cover.d, dtype=np.int64)[ci] + (t - self.class_off[ci]) * self.cover.x


# --------------------------------------------------------------------------
# phases


def _prepare_alphabet(ctx: PeContext, text: DistText, config: DCXConfig, depth: int):
    """Packing scheme for this level; at the top level the alphabet is compacted
    (order-preserving) so that b = ceil(log2 sigma) is as small as possible."""
    if depth > 0 or config.packing == "off":
        return text, PackingScheme(1, 64, "off")
    symbols = np.unique(np.concatenate([np.unique(s) for s in ctx.all_gather(np.unique(text.local_chars))]))
    codes = np.searchsorted(symbols, text.local_chars).astype(np.uint8 if len(symbols) <= 256 else np.int64)
    compact = DistText(codes, text.global_offset, text.global_len, len(symbols))
    b = bits_for_alphabet(len(symbols))
    mode = "fill" if config.packing == "fill" else "fit"
    scheme = PackingScheme(b, config.word_bits, mode)
    if scheme.chars_per_word < 2 or b * scheme.chars_per_word > 63:
        return compact, PackingScheme(1, 64, "off")
    return compact, scheme


def _distribute(ctx, text: DistText, overlap: int, annotations, config: DCXConfig, depth: int, phase: int):
    if config.redistribute == "off":
        return block_chunk(ctx, text, overlap, annotations)
    chunks = make_chunks(ctx, text, config.chunk_size, overlap, annotations)
    salt = 4 * depth + (0 if config.redistribute == "level" else phase)
    return redistribute(ctx, chunks, config.seed, salt)


def select_sample(
    ctx: PeContext, text: DistText, cover: DifferenceCover, scheme: PackingScheme | None = None
) -> np.ndarray:
    """Sample rows (prefix words..., global index) for the local slice, no chunking."""
    scheme = scheme or PackingScheme(1, 64, "off")
    length = scheme.prefix_length(cover.x)
    ct = ChunkedText(block_chunk(ctx, text, length))
    src = SampleSource(ct, cover, length, scheme)
    return src.materialize(np.arange(len(src)))


def rank_samples(
    ctx: PeContext,
    samples,
    nwords: int,
    home_bounds: np.ndarray,
    q: int = 1,
    oversampling: int = 16,
    batch_size: int = 1 << 18,
) -> tuple[RankEntries, bool]:
    """Sort sample prefixes, name them by dense rank and send names home.

    Buckets are cut on the prefix alone so equal prefixes never straddle a
    bucket, and names stay globally consistent across buckets.
    """
    order = LexOrder(range(nwords + 1))
    prefix_order = LexOrder(range(nwords))
    idx_parts, name_parts, uniq_parts = [], [], []
    offset = 0
    for _, recs in bucketed_sort(ctx, samples, q, order, prefix_order, oversampling, batch_size):
        starts, eq_prev, eq_next = run_boundaries(ctx, recs, prefix_order)
        idx_parts.append(recs[:, -1].copy())
        name_parts.append(offset + starts + 1)
        uniq_parts.append(~(eq_prev | eq_next))
        offset += ctx.all_reduce_sum(len(recs))
    idx = np.concatenate(idx_parts) if idx_parts else np.empty(0, np.int64)
    names = np.concatenate(name_parts) if name_parts else np.empty(0, np.int64)
    uniq = np.concatenate(uniq_parts) if uniq_parts else np.empty(0, bool)
    all_unique = not ctx.all_reduce_bool_or(not bool(uniq.all()))
    got_idx, got_name, got_uniq = _route(ctx, owner_of(home_bounds, idx), idx, names, uniq)
    order_home = np.argsort(got_idx, kind="stable")
    return (
        RankEntries(got_idx[order_home], got_name[order_home], got_uniq[order_home].astype(bool)),
        all_unique,
    )


def build_recursive_text(
    ctx: PeContext, entries: RankEntries, cover: DifferenceCover, n: int
) -> tuple[DistText, np.ndarray]:
    """T' = sample names ordered by (j mod X class, j div X) plus a 0 sentinel.

    Returns the local slice of T' (balanced layout) and the uniqueness flags of
    its sample positions (the sentinel slot excluded).
    """
    layout = SampleLayout.build(cover, n)
    m = layout.size
    tb = block_bounds(m + 1, ctx.p)
    t = layout.t_of(entries.index)
    uniq = entries.unique if entries.unique is not None else np.zeros(len(t), bool)
    got_t, got_name, got_uniq = _route(ctx, owner_of(tb, t), t, entries.rank, uniq)
    lo, hi = int(tb[ctx.rank]), int(tb[ctx.rank + 1])
    chars = np.zeros(hi - lo, dtype=np.int64)
    chars[got_t - lo] = got_name
    unique = np.zeros(min(hi, m) - lo if hi > lo else 0, dtype=bool)
    unique[got_t - lo] = got_uniq.astype(bool)
    return DistText(chars, lo, m + 1, m + 1), unique


def invert_recursive_sa(
    ctx: PeContext, sa_block: np.ndarray, cover: DifferenceCover, n: int, home_bounds: np.ndarray
) -> RankEntries:
    """Sample ranks from the suffix array of T': rank of t = its SA position.

    Position 0 of SA' is the sentinel, so real ranks start at 1.
    """
    layout = SampleLayout.build(cover, n)
    m = layout.size
    sb = block_bounds(m + 1, ctx.p)
    g = sb[ctx.rank] + np.arange(len(sa_block), dtype=np.int64)
    real = sa_block != m
    j = layout.j_of(sa_block[real])
    got_j, got_rank = _route(ctx, owner_of(home_bounds, j), j, g[real])
    order = np.argsort(got_j, kind="stable")
    return RankEntries(got_j[order], got_rank[order])


def _prev_flag(ctx: PeContext, flags: np.ndarray, default: bool) -> bool:
    """Last flag of the nearest non-empty PE before this one."""
    lasts = ctx.all_gather(bool(flags[-1]) if len(flags) else None)
    for r in range(ctx.rank - 1, -1, -1):
        if lasts[r] is not None:
            return lasts[r]
    return default


def discard_plan(ctx: PeContext, tprime: DistText, unique: np.ndarray) -> np.ndarray:
    """Positions of T' to keep: every non-unique one, plus a unique position
    directly following a non-unique one (it terminates the run)."""
    prev = np.empty(len(unique), dtype=bool)
    if len(unique):
        prev[0] = _prev_flag(ctx, unique, True)
        prev[1:] = unique[:-1]
    else:
        _prev_flag(ctx, unique, True)
    return ~unique | ~prev


def recurse_with_discarding(
    ctx: PeContext,
    tprime: DistText,
    unique: np.ndarray,
    keep: np.ndarray,
    cover: DifferenceCover,
    n: int,
    home_bounds: np.ndarray,
    config: DCXConfig,
    depth: int,
) -> RankEntries:
    """Recurse only on kept positions of T' and rebuild unique ranks for all samples.

    Within a group of equal names the reduced suffix array gives the relative
    order, so final rank = name + (position in reduced SA - start of the group).
    Unique names already are final ranks.
    """
    layout = SampleLayout.build(cover, n)
    lo = tprime.global_offset
    names = tprime.local_chars[: len(unique)]
    t_local = lo + np.arange(len(unique), dtype=np.int64)

    kept_t, kept_name = t_local[keep], names[keep]
    u0 = ctx.prefix_sum(len(kept_t))
    reduced_len = ctx.all_reduce_sum(len(kept_t))
    rb = block_bounds(reduced_len + 1, ctx.p)
    u = u0 + np.arange(len(kept_t), dtype=np.int64)
    got_u, got_name, got_t = _route(ctx, owner_of(rb, u), u, kept_name, kept_t)
    r_lo, r_hi = int(rb[ctx.rank]), int(rb[ctx.rank + 1])
    chars = np.zeros(r_hi - r_lo, dtype=np.int64)
    orig_t = np.zeros(r_hi - r_lo, dtype=np.int64)
    chars[got_u - r_lo] = got_name
    orig_t[got_u - r_lo] = got_t
    ctx.metrics.record_level(depth, reduced_input_size=reduced_len + 1)
    reduced = DistText(chars, r_lo, reduced_len + 1, int(tprime.alphabet_size))
    sa_block = _level(ctx, reduced, cover, config, depth + 1)

    # Ask the owner of each reduced position for its T' position and name.
    g = rb[ctx.rank] + np.arange(len(sa_block), dtype=np.int64)
    real = sa_block != reduced_len
    src = np.full(int(real.sum()), ctx.rank, dtype=np.int64)
    q_u, q_g, q_src = _route(ctx, owner_of(rb, sa_block[real]), sa_block[real], g[real], src)
    ans_t, ans_name = orig_t[q_u - r_lo], chars[q_u - r_lo]
    back_g, back_t, back_name = _route(ctx, q_src, q_g, ans_t, ans_name)
    order = np.argsort(back_g, kind="stable")
    back_g, back_t, back_name = back_g[order], back_t[order], back_name[order]
    starts, _, _ = run_boundaries(ctx, back_name.reshape(-1, 1), LexOrder())
    # run_boundaries positions skip the sentinel entry at g = 0
    final = back_name + (back_g - 1 - starts)

    dropped_t, dropped_name = t_local[~keep], names[~keep]
    j = np.concatenate([layout.j_of(back_t), layout.j_of(dropped_t)])
    rank = np.concatenate([final, dropped_name])
    got_j, got_rank = _route(ctx, owner_of(home_bounds, j), j, rank)
    order = np.argsort(got_j, kind="stable")
    return RankEntries(got_j[order], got_rank[order])


def merge_all_suffixes(
    ctx: PeContext,
    text: DistText,
    rank_local: np.ndarray,
    cover: DifferenceCover,
    config: DCXConfig,
    depth: int,
    scheme: PackingScheme,
) -> np.ndarray:
    """Sort one tuple per suffix with the rank-inducing order; returns the local
    block of the suffix array (balanced layout)."""
    x = cover.x
    length = scheme.prefix_length(x)
    n = text.global_len
    chunks = _distribute(ctx, text, max(length, x), rank_local, config, depth, 3)
    ct = ChunkedText(chunks)
    del chunks
    src = MergeSource(ct, cover, length, scheme)
    order = DCXOrder(cover, scheme.num_words(x))
    sb = block_bounds(n, ctx.p)
    lo = int(sb[ctx.rank])
    sa = np.empty(int(sb[ctx.rank + 1]) - lo, dtype=np.int64)
    offset = 0
    q = config.buckets_at(depth)
    for _, recs in bucketed_sort(ctx, src, q, order, None, config.oversampling, config.batch_size):
        sizes = ctx.all_gather(len(recs))
        pos = offset + sum(sizes[: ctx.rank]) + np.arange(len(recs), dtype=np.int64)
        got_pos, got_idx = _route(ctx, owner_of(sb, pos), pos, recs[:, -1])
        sa[got_pos - lo] = got_idx
        offset += sum(sizes)
    return sa


def prefix_doubling_sa(chars: np.ndarray) -> np.ndarray:
    """Sequential suffix array by prefix doubling (base case of the recursion)."""
    chars = np.asarray(chars, dtype=np.int64)
    n = len(chars)
    if n <= 1:
        return np.arange(n, dtype=np.int64)
    rank = chars.copy()
    k = 1
    while True:
        second = np.full(n, -1, dtype=np.int64)
        second[: n - k] = rank[k:]
        sa = np.lexsort((second, rank))
        r, s = rank[sa], second[sa]
        new = np.ones(n, dtype=np.int64)
        new[1:] = (r[1:] != r[:-1]) | (s[1:] != s[:-1])
        fresh = np.empty(n, dtype=np.int64)
        fresh[sa] = np.cumsum(new) - 1
        if fresh[sa[-1]] == n - 1 or k >= n:
            return sa
        rank = fresh
        k *= 2


def _base_case(ctx: PeContext, text: DistText, depth: int) -> np.ndarray:
    with ctx.metrics.phase(depth, "base_case"):
        n = text.global_len
        parts = ctx.all_to_all([text.local_chars if d == 0 else text.local_chars[:0] for d in range(ctx.p)])
        sb = block_bounds(n, ctx.p)
        if ctx.rank == 0:
            sa = prefix_doubling_sa(np.concatenate(parts))
            out = [sa[sb[d] : sb[d + 1]] for d in range(ctx.p)]
        else:
            out = [np.empty(0, dtype=np.int64)] * ctx.p
        return ctx.all_to_all(out)[0]


def _level(ctx: PeContext, text: DistText, cover: DifferenceCover, config: DCXConfig, depth: int) -> np.ndarray:
    n, x, p = text.global_len, cover.x, ctx.p
    home_bounds = _layout(ctx, len(text))
    ctx.metrics.record_level(depth, n=n)
    if n <= max(config.base_case_size, 2 * x * p):
        ctx.metrics.record_level(depth, base_case=True)
        return _base_case(ctx, text, depth)

    text, scheme = _prepare_alphabet(ctx, text, config, depth)
    length = scheme.prefix_length(x)
    nwords = scheme.num_words(x)
    ctx.metrics.record_level(
        depth, base_case=False, packing=scheme.mode, prefix_length=length, words=nwords,
        bits_per_char=scheme.bits_per_char if scheme.mode != "off" else None,
    )

    with ctx.metrics.phase(depth, "phase1") as rec:
        chunks = _distribute(ctx, text, max(length, x), None, config, depth, 1)
        src = SampleSource(ChunkedText(chunks), cover, length, scheme)
        del chunks
        rec.elements = ctx.all_reduce_sum(len(src))
        entries, all_unique = rank_samples(
            ctx, src, nwords, home_bounds, config.sample_buckets_at(depth),
            config.oversampling, config.batch_size,
        )
        del src
    m = rec.elements
    ctx.metrics.record_level(depth, samples=m, all_unique=all_unique)

    if not all_unique:
        with ctx.metrics.phase(depth, "phase2"):
            tprime, unique = build_recursive_text(ctx, entries, cover, n)
            keep = discard_plan(ctx, tprime, unique)
            discardable = ctx.all_reduce_sum(int((~keep).sum()))
            use = config.discarding == "on" or (
                config.discarding == "auto" and discardable > config.discard_min_fraction * m
            )
            ctx.metrics.record_level(
                depth, recursion_input_size=m + 1, discardable=discardable,
                discarding=bool(use), discarded=discardable if use else 0,
            )
            if use:
                entries = recurse_with_discarding(
                    ctx, tprime, unique, keep, cover, n, home_bounds, config, depth
                )
            else:
                ctx.metrics.record_level(depth, reduced_input_size=m + 1)
                sa_block = _level(ctx, tprime, cover, config, depth + 1)
                entries = invert_recursive_sa(ctx, sa_block, cover, n, home_bounds)

    lo = int(home_bounds[ctx.rank])
    top = max(m, 1)
    rank_local = np.zeros(len(text), dtype=np.uint32 if top < 2**32 else np.int64)
    rank_local[entries.index - lo] = entries.rank
    del entries

    with ctx.metrics.phase(depth, "phase3") as rec:
        rec.elements = n
        return merge_all_suffixes(ctx, text, rank_local, cover, config, depth, scheme)


def build_suffix_array(
    ctx: PeContext, text: DistText, cover: DifferenceCover, config: DCXConfig | None = None
) -> np.ndarray:
    """Collective: this PE's block of the suffix array of T (sentinel included)."""
    return _level(ctx, text, cover, config or DCXConfig(), 0)


# --------------------------------------------------------------------------
# driver


def text_with_sentinel(text) -> np.ndarray:
    """Characters of `text` followed by the 0 sentinel; 0 inside the text is rejected."""
    if isinstance(text, str):
        text = text.encode("utf-8")
    if isinstance(text, (bytes, bytearray, memoryview)):
        arr = np.frombuffer(bytes(text), dtype=np.uint8)
    else:
        arr = np.asarray(text, dtype=np.int64)
        if arr.size and arr.min() < 0:
            raise ValueError("characters must be non-negative")
        if arr.size and arr.max() < 256:
            arr = arr.astype(np.uint8)
    if arr.size and not arr.all():
        raise ValueError("input contains 0, which is reserved for the sentinel")
    return np.concatenate([arr, np.zeros(1, dtype=arr.dtype)])


@dataclass
class SuffixArrayResult:
    sa: np.ndarray
    metrics: RunMetrics


def suffix_array(
    text,
    x: int = 21,
    p: int = 4,
    config: DCXConfig | None = None,
    cover: DifferenceCover | None = None,
) -> SuffixArrayResult:
    """Suffix array of `text` + sentinel (length len(text) + 1) computed on p simulated PEs."""
    config = config or DCXConfig()
    cover = cover or builtin_cover(x)
    chars = text_with_sentinel(text)
    slices = split_text(chars, p)

    def program(ctx: PeContext) -> np.ndarray:
        return build_suffix_array(ctx, slices[ctx.rank], cover, config)

    blocks, pes = spawn_with_metrics(Topology(p, config.seed), program)
    params = {
        "n": len(chars),
        "p": p,
        "x": cover.x,
        "cover": list(cover.d),
        "buckets": list(config.buckets),
        "chunk_size": config.chunk_size,
        "seed": config.seed,
        "packing": config.packing,
        "discarding": config.discarding,
        "redistribute": config.redistribute,
        "gamma": config.gamma,
    }
    return SuffixArrayResult(np.concatenate(blocks), RunMetrics.from_pes(pes, params))
