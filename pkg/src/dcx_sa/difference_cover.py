"""Difference covers modulo X and the shift table used for rank inducing."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

import numpy as np

SUPPORTED_X = (3, 7, 13, 21, 31)
MAX_SEARCH_X = 32

# Checked by is_difference_cover on construction; never trusted blindly.
_BUILTIN = {
    3: (1, 2),
    7: (0, 1, 3),
    13: (0, 1, 3, 9),
    21: (0, 1, 4, 14, 16),
    31: (0, 1, 3, 8, 12, 18),
}


class UnsupportedModulusError(ValueError):
    pass


def _check_residues(x: int, residues: Iterable[int]) -> list[int]:
    if x < 1:
        raise ValueError(f"modulus must be >= 1, got {x}")
    out = sorted(set(int(r) for r in residues))
    bad = [r for r in out if not 0 <= r < x]
    if bad:
        raise ValueError(f"residues {bad} outside [0, {x})")
    return out


def is_difference_cover(x: int, candidate: Iterable[int]) -> bool:
    """True iff the pairwise differences of `candidate` mod `x` hit every residue."""
    d = _check_residues(x, candidate)
    diffs = {(a - b) % x for a in d for b in d}
    return len(diffs) == x


def find_minimal_cover(x: int) -> tuple[int, ...]:
    """Smallest difference cover mod `x` by exhaustive search.

    Among covers of minimum size, the lexicographically smallest one wins.
    """
    if x < 1:
        raise ValueError(f"modulus must be >= 1, got {x}")
    if x > MAX_SEARCH_X:
        raise ValueError(f"exhaustive search bounded to x <= {MAX_SEARCH_X}, got {x}")
    for k in range(1, x + 1):
        for cand in combinations(range(x), k):
            if is_difference_cover(x, cand):
                return cand
    raise AssertionError("unreachable: [0, x) is always a cover")


@dataclass(frozen=True)
class DifferenceCover:
    x: int
    d: tuple[int, ...]
    shift_table: np.ndarray = field(repr=False, compare=False)
    in_cover: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def from_residues(cls, x: int, residues: Iterable[int]) -> "DifferenceCover":
        d = _check_residues(x, residues)
        if not is_difference_cover(x, d):
            raise ValueError(f"{d} is not a difference cover modulo {x}")
        in_cover = np.zeros(x, dtype=bool)
        in_cover[d] = True
        table = np.full((x, x), -1, dtype=np.int64)
        for k1 in range(x):
            for k2 in range(x):
                for l in range(x):
                    if in_cover[(k1 + l) % x] and in_cover[(k2 + l) % x]:
                        table[k1, k2] = l
                        break
        table.flags.writeable = False
        in_cover.flags.writeable = False
        return cls(x, tuple(d), table, in_cover)

    @property
    def size(self) -> int:
        return len(self.d)

    def shift(self, k1: int, k2: int) -> int:
        return int(self.shift_table[k1 % self.x, k2 % self.x])

    def rank_offsets(self, residue: int) -> tuple[int, ...]:
        """Offsets l in [0, x), increasing, with (residue + l) mod x in the cover."""
        return tuple(l for l in range(self.x) if self.in_cover[(residue + l) % self.x])

    def offset_table(self) -> np.ndarray:
        """(x, |D|) table: row r lists rank_offsets(r)."""
        return np.array([self.rank_offsets(r) for r in range(self.x)], dtype=np.int64)

    def slot_table(self) -> np.ndarray:
        """(x, x) table: slot of shift(a, b) within rank_offsets(a)."""
        offs = self.offset_table()
        slots = np.empty((self.x, self.x), dtype=np.int64)
        for a in range(self.x):
            pos = {int(l): i for i, l in enumerate(offs[a])}
            for b in range(self.x):
                slots[a, b] = pos[int(self.shift_table[a, b])]
        return slots

    def sample_count_below(self, t):
        """Number of sample positions j < t (vectorized over t)."""
        t = np.asarray(t, dtype=np.int64)
        below = np.searchsorted(np.array(self.d), np.arange(self.x), side="left")
        return (t // self.x) * self.size + below[t % self.x]

    def nth_sample(self, r):
        """Inverse of sample_count_below: position of the r-th sample (0-based)."""
        r = np.asarray(r, dtype=np.int64)
        return (r // self.size) * self.x + np.array(self.d, dtype=np.int64)[r % self.size]


def builtin_cover(x: int) -> DifferenceCover:
    if x not in _BUILTIN:
        raise UnsupportedModulusError(
            f"X={x} has no built-in cover; supported values are {list(SUPPORTED_X)}"
        )
    return DifferenceCover.from_residues(x, _BUILTIN[x])
