"""Distributed DCX suffix array construction on a simulated SPMD runtime."""

from .dcx import DCXConfig, SuffixArrayResult, build_suffix_array, suffix_array
from .difference_cover import DifferenceCover, builtin_cover, find_minimal_cover
from .oracle import naive_sa, verify_sa
from .runtime import PeContext, Topology, spawn
from .text import DistText, split_text

__all__ = [
    "DCXConfig",
    "DifferenceCover",
    "DistText",
    "PeContext",
    "SuffixArrayResult",
    "Topology",
    "build_suffix_array",
    "builtin_cover",
    "find_minimal_cover",
    "naive_sa",
    "spawn",
    "split_text",
    "suffix_array",
    "verify_sa",
]
