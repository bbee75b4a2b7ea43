"""Character classes and the unknown-word tag table."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .core import Tag

KATAKANA_MAX_BYTES = 18


class CharClass(IntEnum):
    DIGIT = 0
    LATIN = 1
    KATAKANA = 2
    OTHER = 3


def classify_code_point(cp: int) -> int:
    if 0x30 <= cp <= 0x39 or 0xFF10 <= cp <= 0xFF19:
        return CharClass.DIGIT
    if (
        0x41 <= cp <= 0x5A
        or 0x61 <= cp <= 0x7A
        or 0xFF21 <= cp <= 0xFF3A
        or 0xFF41 <= cp <= 0xFF5A
    ):
        return CharClass.LATIN
    if 0x30A1 <= cp <= 0x30FA or cp == 0x30FC:
        return CharClass.KATAKANA
    return CharClass.OTHER


def classify_char(c: str) -> CharClass:
    return CharClass(classify_code_point(ord(c)))


def word_class(surface: str) -> CharClass | None:
    """Class shared by every character of ``surface``, else ``None``."""
    first = classify_code_point(ord(surface[0]))
    for ch in surface[1:]:
        if classify_code_point(ord(ch)) != first:
            return None
    return CharClass(first)


@dataclass
class UnknownTagTable:
    """Fallback chain (prev tag, class) -> class -> global default."""

    global_default: Tag | None = None
    by_class: dict[CharClass, Tag] = field(default_factory=dict)
    by_prev_and_class: dict[tuple[Tag, CharClass], Tag] = field(default_factory=dict)

    def lookup(self, prev_tag: Tag, cls: CharClass) -> Tag:
        tag = self.by_prev_and_class.get((prev_tag, cls))
        if tag is None:
            tag = self.by_class.get(cls)
        if tag is None:
            tag = self.global_default
        if tag is None:
            raise LookupError("unknown-word table has no global default tag")
        return tag

    def arrays(self, num_tags: int) -> tuple[np.ndarray, np.ndarray, int]:
        """Dense ``(prev_index, class) -> tag id`` form for compiled code.

        Row ``num_tags`` is the BOS row.  Missing cells are pre-resolved
        through the fallback chain so the hot loop does one load.
        """
        default = -1 if self.global_default is None else self.global_default.id
        by_class = np.full(len(CharClass), default, np.int32)
        for cls, tag in self.by_class.items():
            by_class[cls] = tag.id
        table = np.tile(by_class, (num_tags + 1, 1)).astype(np.int32)
        for (prev, cls), tag in self.by_prev_and_class.items():
            row = num_tags if prev.is_bos else prev.id
            table[row, cls] = tag.id
        return table, by_class, default
