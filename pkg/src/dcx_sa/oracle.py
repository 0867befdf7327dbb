"""Reference suffix sorting by direct suffix comparison.

Independent of the DCX code paths on purpose: agreement between the two is
evidence, not a tautology.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cmp_to_key
from typing import Sequence

MAX_N = 10**6
_WINDOW = 32


class OracleSizeError(ValueError):
    pass


def _comparable(text) -> bytes | tuple:
    if isinstance(text, (bytes, bytearray, memoryview)):
        return bytes(text)
    vals = [int(v) for v in text]
    if all(0 <= v < 256 for v in vals):
        return bytes(vals)
    return tuple(vals)


def compare_suffixes(s, i: int, j: int) -> int:
    """-1, 0 or 1 as suffix i is smaller, equal or larger than suffix j."""
    if i == j:
        return 0
    k, w = 0, 64
    n = len(s)
    while True:
        a, b = s[i + k : i + k + w], s[j + k : j + k + w]
        if a != b:
            return -1 if a < b else 1
        if i + k + w >= n or j + k + w >= n:
            # One side ran out inside an equal window: the shorter suffix is smaller.
            return -1 if i > j else 1
        k += w
        w *= 2


def naive_sa(text: Sequence[int] | bytes) -> list[int]:
    """Suffix array of `text` (sentinel included by the caller) by comparison sort."""
    n = len(text)
    if n > MAX_N:
        raise OracleSizeError(f"naive oracle limited to n <= {MAX_N}, got {n}")
    s = _comparable(text)
    order = sorted(range(n), key=lambda i: s[i : i + _WINDOW])
    out: list[int] = []
    i = 0
    while i < n:
        j = i + 1
        head = s[order[i] : order[i] + _WINDOW]
        while j < n and s[order[j] : order[j] + _WINDOW] == head:
            j += 1
        group = order[i:j]
        if len(group) > 1:
            group.sort(key=cmp_to_key(lambda a, b: compare_suffixes(s, a, b)))
        out.extend(group)
        i = j
    return out


@dataclass(frozen=True)
class Verification:
    ok: bool
    position: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def verify_sa(text: Sequence[int] | bytes, sa: Sequence[int]) -> Verification:
    """Checks that `sa` is a permutation of [0, n) with strictly increasing suffixes."""
    n = len(text)
    if len(sa) != n:
        return Verification(False, None, f"length {len(sa)} != {n}")
    seen = bytearray(n)
    for pos, v in enumerate(sa):
        v = int(v)
        if not 0 <= v < n:
            return Verification(False, pos, f"index {v} out of range")
        if seen[v]:
            return Verification(False, pos, f"index {v} repeated")
        seen[v] = 1
    s = _comparable(text)
    for pos in range(1, n):
        if compare_suffixes(s, int(sa[pos - 1]), int(sa[pos])) >= 0:
            return Verification(False, pos, f"suffix at {pos - 1} not smaller than at {pos}")
    return Verification(True)
