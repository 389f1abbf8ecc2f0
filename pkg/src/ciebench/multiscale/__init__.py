"""Cellular-automaton micro dynamics, macro-object extraction and the zoom-in/zoom-out driver."""

from .life import (
    BUILTIN_PATTERNS,
    LifeGrid,
    PatternError,
    builtin_pattern,
    life_step,
    load_pattern,
    parse_plaintext,
    parse_rle,
    place,
    run,
)
from .objects import MacroObject, extract_objects, label_clusters
from .zizo import LifeZizoResult, ZizoState, life_zizo, render, zizo

__all__ = [
    "BUILTIN_PATTERNS",
    "LifeGrid",
    "LifeZizoResult",
    "MacroObject",
    "PatternError",
    "ZizoState",
    "builtin_pattern",
    "extract_objects",
    "label_clusters",
    "life_step",
    "life_zizo",
    "load_pattern",
    "parse_plaintext",
    "parse_rle",
    "place",
    "render",
    "run",
    "zizo",
]
