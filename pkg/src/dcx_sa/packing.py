"""Order-preserving packing of small-alphabet characters into machine words."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MODES = ("off", "fit", "fill")


def bits_for_alphabet(sigma: int) -> int:
    """b = ceil(log2 sigma), at least 1."""
    return max(1, (int(sigma) - 1).bit_length())


@dataclass(frozen=True)
class PackingScheme:
    """b-bit characters placed big-endian into B-bit words.

    mode "fit" stores an X-prefix in ceil(X*b/B) words; "fill" stores
    floor(B*X/b) characters in X words; "off" keeps one character per word.
    """

    bits_per_char: int
    word_bits: int = 64
    mode: str = "fit"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"packing mode must be one of {MODES}, got {self.mode!r}")
        if not 1 <= self.bits_per_char <= self.word_bits:
            raise ValueError("need 1 <= bits_per_char <= word_bits")

    @property
    def chars_per_word(self) -> int:
        return 1 if self.mode == "off" else self.word_bits // self.bits_per_char

    def num_words(self, x: int) -> int:
        if self.mode == "off":
            return x
        if self.mode == "fill":
            return x
        return -(-x // self.chars_per_word)

    def prefix_length(self, x: int) -> int:
        """Characters represented per prefix."""
        if self.mode == "fill":
            return x * self.chars_per_word
        return x


def pack_prefix(chars: Sequence[int], scheme: PackingScheme) -> list[int]:
    """Pack characters into words whose sequence compares like the characters.

    The last word is zero-filled past the final character, which reads as
    sentinels and so keeps the order of prefixes of equal length intact.
    """
    chars = [int(ch) for ch in chars]
    if scheme.mode == "off":
        return chars
    b, cpw = scheme.bits_per_char, scheme.chars_per_word
    limit = 1 << b
    words = []
    for start in range(0, len(chars), cpw):
        word = 0
        group = chars[start : start + cpw]
        for i in range(cpw):
            ch = group[i] if i < len(group) else 0
            if not 0 <= ch < limit:
                raise ValueError(f"character {ch} does not fit in {b} bits")
            word = (word << b) | ch
        words.append(word)
    return words


def pack_matrix(chars: np.ndarray, scheme: PackingScheme) -> np.ndarray:
    """Row-wise pack_prefix of an (m, L) character matrix into int64 words.

    Requires bits_per_char * chars_per_word <= 63 so words stay non-negative.
    """
    chars = np.asarray(chars, dtype=np.int64)
    if scheme.mode == "off":
        return chars
    b, cpw = scheme.bits_per_char, scheme.chars_per_word
    if b * cpw > 63:
        raise ValueError("vectorized packing needs b * chars_per_word <= 63")
    m, length = chars.shape
    nwords = -(-length // cpw)
    if nwords * cpw != length:
        chars = np.concatenate([chars, np.zeros((m, nwords * cpw - length), np.int64)], axis=1)
    grouped = chars.reshape(m, nwords, cpw)
    shifts = (b * np.arange(cpw - 1, -1, -1)).astype(np.int64)
    return np.bitwise_or.reduce(grouped << shifts, axis=2) if cpw > 1 else grouped[:, :, 0]
