"""Random chunk redistribution of the text (plus rank annotations) across PEs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .runtime import NO_NEIGHBOR, PeContext
from .text import DistText

DEFAULT_CHUNK_SIZE = 512


@dataclass
class Chunk:
    global_start: int
    payload: np.ndarray
    overlap: np.ndarray
    annotations: np.ndarray | None = None  # aligned with payload + overlap

    def __len__(self) -> int:
        return len(self.payload)


@dataclass(frozen=True)
class ChunkingConfig:
    c: int = DEFAULT_CHUNK_SIZE
    seed: int = 0
    gamma: float = 1.0

    def __post_init__(self):
        if self.c < 1:
            raise ValueError(f"chunk size must be >= 1, got {self.c}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")


def fetch_lookahead(ctx: PeContext, local: np.ndarray, length: int) -> np.ndarray:
    """The up to `length` global elements following this PE's slice.

    Walks successor PEs through repeated neighbor exchanges, so slices shorter
    than `length` are bridged. Shorter than `length` only at the global end.
    """
    ahead = local[:0]
    ahead_final = False
    while True:
        offer = np.concatenate([local, ahead])[:length]
        offer_final = len(local) >= length or ahead_final
        _, nxt = ctx.neighbor_exchange((offer, offer_final), None)
        if nxt is NO_NEIGHBOR:
            ahead, ahead_final = local[:0], True
        else:
            ahead, ahead_final = nxt
        if not ctx.all_reduce_bool_or(not ahead_final):
            return ahead


def _padded(arr: np.ndarray, length: int) -> np.ndarray:
    if len(arr) >= length:
        return arr[:length]
    out = np.zeros(length, dtype=arr.dtype)
    out[: len(arr)] = arr
    return out


def make_chunks(
    ctx: PeContext,
    local_text: DistText,
    c: int,
    x: int,
    annotations: np.ndarray | None = None,
) -> list[Chunk]:
    """Cut the text at global multiples of c; each chunk carries x overlap characters.

    A chunk is built by the PE holding its first character; characters past the
    slice end come from successors. `annotations` is an array aligned with the
    local slice that travels with the chunks (same overlap rule, 0-padded).
    """
    local = local_text.local_chars
    o, n = local_text.global_offset, local_text.global_len
    m = len(local)
    look = fetch_lookahead(ctx, local, c + x)
    ext = _padded(np.concatenate([local, look]), m + c + x)
    if annotations is not None:
        ann_look = fetch_lookahead(ctx, annotations, c + x)
        ann_ext = _padded(np.concatenate([annotations, ann_look]), m + c + x)
    chunks = []
    first = -(-o // c) * c
    for s in range(first, o + m, c):
        a = s - o
        end = min(s + c, n) - o
        ann = ann_ext[a : end + x] if annotations is not None else None
        chunks.append(Chunk(s, ext[a:end], ext[end : end + x], ann))
    return chunks


def block_chunk(
    ctx: PeContext, local_text: DistText, x: int, annotations: np.ndarray | None = None
) -> list[Chunk]:
    """The whole local slice as one chunk (no redistribution)."""
    local = local_text.local_chars
    look = _padded(fetch_lookahead(ctx, local, x), x)
    ann = None
    if annotations is not None:
        ann = np.concatenate([annotations, _padded(fetch_lookahead(ctx, annotations, x), x)])
    if len(local) == 0:
        return []
    return [Chunk(local_text.global_offset, local, look, ann)]


_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _mix64(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def chunk_destinations(seed: int, global_starts, p: int, salt: int = 0) -> np.ndarray:
    """Uniform PE per chunk, a pure function of (seed, salt, global_start)."""
    starts = np.asarray(global_starts, dtype=np.uint64)
    key = _mix64(np.array([seed], dtype=np.uint64) ^ _mix64(np.array([salt + 1], dtype=np.uint64)))
    with np.errstate(over="ignore"):
        h = _mix64(starts * np.uint64(0x9E3779B97F4A7C15) + key)
    u = (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)
    return np.minimum((u * p).astype(np.int64), p - 1)


def redistribute(ctx: PeContext, chunks: list[Chunk], seed: int, salt: int = 0) -> list[Chunk]:
    """Send every chunk to a uniformly random PE; returns received chunks by global_start."""
    if ctx.p == 1:
        return sorted(chunks, key=lambda ch: ch.global_start)
    dest = chunk_destinations(seed, [ch.global_start for ch in chunks], ctx.p, salt)
    outgoing: list[list[Chunk]] = [[] for _ in range(ctx.p)]
    for ch, d in zip(chunks, dest):
        outgoing[d].append(ch)
    incoming = ctx.all_to_all(outgoing)
    received = [ch for part in incoming for ch in part]
    received.sort(key=lambda ch: ch.global_start)
    return received


class ChunkedText:
    """Flat, vectorization-friendly view of the chunks held by one PE.

    Element e (0 <= e < total) is the e-th owned position in global_start order.
    """

    def __init__(self, chunks: list[Chunk], dtype=np.int64):
        self.starts = np.array([ch.global_start for ch in chunks], dtype=np.int64)
        self.lens = np.array([len(ch.payload) for ch in chunks], dtype=np.int64)
        ext = [len(ch.payload) + len(ch.overlap) for ch in chunks]
        self.buf_off = np.zeros(len(chunks), dtype=np.int64)
        if chunks:
            self.buf_off[1:] = np.cumsum(ext)[:-1]
        self.elem_off = np.zeros(len(chunks) + 1, dtype=np.int64)
        np.cumsum(self.lens, out=self.elem_off[1:])
        if chunks:
            self.buffer = np.concatenate([np.concatenate([ch.payload, ch.overlap]) for ch in chunks])
            if chunks[0].annotations is not None:
                self.annotations = np.concatenate([ch.annotations for ch in chunks])
            else:
                self.annotations = None
        else:
            self.buffer = np.empty(0, dtype=dtype)
            self.annotations = None

    @property
    def total(self) -> int:
        return int(self.elem_off[-1])

    def locate(self, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(global index, buffer position) of element ids."""
        k = np.searchsorted(self.elem_off, ids, side="right") - 1
        within = ids - self.elem_off[k]
        return self.starts[k] + within, self.buf_off[k] + within

    def reassemble(self) -> np.ndarray:
        """Concatenated payloads in global order (for checking)."""
        parts = [self.buffer[b : b + l] for b, l in zip(self.buf_off, self.lens)]
        return np.concatenate(parts) if parts else self.buffer[:0]


@dataclass(frozen=True)
class LoadBoundReport:
    precondition: bool
    required_n: float
    expected: float
    bound: float
    observed_max: int
    within_bound: bool


def load_bound_min_n(p: int, q: int, c: int, gamma: float) -> float:
    """Smallest n for which the 2n/(pq) load bound holds w.p. >= 1 - 1/p^gamma."""
    return 8 * c * (gamma + 2) * p * q * math.log(p) / 3


def check_load_bound(bucket_loads, n: float, p: int, q: int, c: int, gamma: float) -> LoadBoundReport:
    """Compare observed per-PE per-bucket loads against the 2n/(pq) bound.

    `bucket_loads` is a p x q matrix of materialized counts (or a PhaseSummary).
    """
    loads = getattr(bucket_loads, "bucket_loads", bucket_loads)
    observed = max((max(row, default=0) for row in loads), default=0)
    required = load_bound_min_n(p, q, c, gamma)
    bound = 2 * n / (p * q)
    return LoadBoundReport(
        precondition=n >= required,
        required_n=required,
        expected=n / (p * q),
        bound=bound,
        observed_max=int(observed),
        within_bound=observed < bound,
    )
