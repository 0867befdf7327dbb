"""Block-distributed text."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class DistText:
    """One PE's slice of the global text T.

    T includes its final sentinel (value 0, the only 0 in T); positions at or
    beyond `global_len` read as 0 and are never stored.
    """

    local_chars: np.ndarray
    global_offset: int
    global_len: int
    alphabet_size: int

    def __len__(self) -> int:
        return len(self.local_chars)


def block_bounds(n: int, p: int) -> np.ndarray:
    """Balanced layout: PE i owns [bounds[i], bounds[i+1])."""
    return np.arange(p + 1, dtype=np.int64) * n // p


def owner_of(bounds: np.ndarray, pos: np.ndarray) -> np.ndarray:
    return np.searchsorted(bounds, pos, side="right") - 1


def split_text(chars, p: int, alphabet_size: int | None = None) -> list[DistText]:
    """Balanced split of a full text (sentinel included) into p slices."""
    chars = np.asarray(chars)
    n = len(chars)
    sigma = alphabet_size if alphabet_size is not None else (int(chars.max()) + 1 if n else 1)
    b = block_bounds(n, p)
    return [DistText(chars[b[i] : b[i + 1]], int(b[i]), n, sigma) for i in range(p)]
