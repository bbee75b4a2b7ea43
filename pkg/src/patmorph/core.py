"""Domain types shared by the trainer, trie, tagger and evaluator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

FIELD_SEP = ","
PAD = "*"
_FORBIDDEN = ("\t", "\n", "\r", FIELD_SEP)


class PatmorphError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(PatmorphError, ValueError):
    """Malformed textual input (tag fields, corpus or dictionary lines)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, slots=True)
class Tag:
    """An interned feature string.

    ``fields`` holds the hierarchical levels (major POS, minor POS,
    conjugation type, conjugation form) followed by optional extras such as
    lemma or reading.  ``id`` is assigned by a :class:`TagInterner`; the
    sentence-start sentinel :data:`BOS` uses ``-1``.
    """

    fields: tuple[str, ...]
    id: int

    @property
    def is_bos(self) -> bool:
        return self.id < 0

    def feature_string(self) -> str:
        return FIELD_SEP.join(self.fields)

    def __str__(self) -> str:
        return self.feature_string()


BOS = Tag(("BOS",), -1)


def _validate_fields(fields: Sequence[str]) -> tuple[str, ...]:
    if len(fields) == 0:
        raise FormatError("tag has no fields")
    for f in fields:
        for bad in _FORBIDDEN:
            if bad in f:
                raise FormatError(f"tag field {f!r} contains forbidden character {bad!r}")
    return tuple(fields)


class TagInterner:
    """Bijective mapping between field lists and consecutive integer ids."""

    def __init__(self, tags: Iterable[Sequence[str]] = ()):
        self._by_fields: dict[tuple[str, ...], Tag] = {}
        self._tags: list[Tag] = []
        for fields in tags:
            self.intern(fields)

    def intern(self, fields: Sequence[str]) -> Tag:
        key = tuple(fields)
        tag = self._by_fields.get(key)
        if tag is not None:
            return tag
        key = _validate_fields(key)
        tag = Tag(key, len(self._tags))
        self._by_fields[key] = tag
        self._tags.append(tag)
        return tag

    def get(self, fields: Sequence[str]) -> Tag | None:
        return self._by_fields.get(tuple(fields))

    def __getitem__(self, tag_id: int) -> Tag:
        return self._tags[tag_id]

    def __len__(self) -> int:
        return len(self._tags)

    def __iter__(self) -> Iterator[Tag]:
        return iter(self._tags)

    @property
    def tags(self) -> list[Tag]:
        return list(self._tags)


def intern_tag(fields: Sequence[str], interner: TagInterner) -> Tag:
    return interner.intern(fields)


def tag_prefix(tag: Tag, levels: int) -> list[str]:
    """First ``levels`` fields of ``tag``, padded with ``"*"`` when short."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    head = list(tag.fields[:levels])
    head.extend(PAD for _ in range(levels - len(head)))
    return head


@dataclass(frozen=True, slots=True)
class Morpheme:
    surface: str
    tag: Tag

    def __post_init__(self):
        if not self.surface:
            raise FormatError("morpheme surface is empty")


@dataclass(slots=True)
class AnnotatedSentence:
    morphemes: list[Morpheme] = field(default_factory=list)

    @property
    def text(self) -> str:
        return "".join(m.surface for m in self.morphemes)

    def __len__(self) -> int:
        return len(self.morphemes)

    def __iter__(self) -> Iterator[Morpheme]:
        return iter(self.morphemes)

    def spans(self) -> list[tuple[int, int, Tag]]:
        """Character offsets ``(start, end, tag)`` of every morpheme."""
        out = []
        i = 0
        for m in self.morphemes:
            j = i + len(m.surface)
            out.append((i, j, m.tag))
            i = j
        return out


@dataclass(frozen=True, slots=True)
class PatternKey:
    """Surface characters, optionally followed by one previous-tag symbol."""

    surface: str
    prev_tag: Tag | None = None

    def __post_init__(self):
        if not self.surface:
            raise ValueError("pattern surface is empty")

    @property
    def depth(self) -> int:
        return len(self.surface) + (self.prev_tag is not None)

    def __str__(self) -> str:
        if self.prev_tag is None:
            return self.surface
        return f"{self.surface};{self.prev_tag}"


@dataclass(frozen=True, slots=True)
class PatternEntry:
    key: PatternKey
    shift: int
    tag: Tag

    def __post_init__(self):
        if not 1 <= self.shift <= len(self.key.surface):
            raise ValueError(
                f"shift {self.shift} out of range for pattern {str(self.key)!r}"
            )
