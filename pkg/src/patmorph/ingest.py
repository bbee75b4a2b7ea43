"""Readers for annotated corpora and morphological dictionaries.

Corpus format: one morpheme per line as ``surface<TAB>f1,f2,...``, each
sentence closed by a line that is exactly ``EOS``; blank lines are ignored.

Dictionary format: ``surface,f1,f2,...`` per line.  A surface containing a
comma must be quoted (``"a,b",noun,...``; a literal quote is doubled).
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, TextIO

from .core import FIELD_SEP, AnnotatedSentence, FormatError, Morpheme, Tag, TagInterner

log = logging.getLogger(__name__)

EOS = "EOS"


@dataclass
class Corpus:
    sentences: list[AnnotatedSentence] = field(default_factory=list)
    interner: TagInterner = field(default_factory=TagInterner)
    num_lines: int = 0

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[AnnotatedSentence]:
        return iter(self.sentences)

    @property
    def num_words(self) -> int:
        return sum(len(s) for s in self.sentences)

    def texts(self) -> list[str]:
        return [s.text for s in self.sentences]


@dataclass
class Dictionary:
    entries: dict[str, list[Tag]] = field(default_factory=dict)
    interner: TagInterner = field(default_factory=TagInterner)
    num_lines: int = 0

    @property
    def max_word_len(self) -> int:
        return max((len(w) for w in self.entries), default=0)

    @property
    def num_entries(self) -> int:
        """Distinct (surface, tag) pairs."""
        return sum(len(tags) for tags in self.entries.values())

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, surface: str) -> bool:
        return surface in self.entries

    def add(self, surface: str, tag: Tag) -> None:
        if not surface:
            raise FormatError("empty dictionary surface")
        tags = self.entries.setdefault(surface, [])
        if tag not in tags:
            tags.append(tag)


def _strip_eol(line: str) -> str:
    if line.endswith("\n"):
        line = line[:-1]
    if line.endswith("\r"):
        line = line[:-1]
    return line


def iter_sentences(stream: Iterable[str], interner: TagInterner, stats: dict | None = None) -> Iterator[AnnotatedSentence]:
    """Stream sentences from corpus text, one sentence buffered at a time."""
    current: list[Morpheme] = []
    line_no = 0
    open_line = 0
    for line_no, raw in enumerate(stream, 1):
        line = _strip_eol(raw)
        if not line:
            continue
        if line == EOS:
            yield AnnotatedSentence(current)
            current = []
            continue
        surface, tab, rest = line.rpartition("\t")
        if not tab:
            raise FormatError("missing tab between surface and tag", line_no)
        if not surface:
            raise FormatError("empty surface", line_no)
        if not rest:
            raise FormatError("missing tag fields", line_no)
        try:
            tag = interner.intern(rest.split(FIELD_SEP))
        except FormatError as exc:
            raise FormatError(str(exc), line_no) from None
        if not current:
            open_line = line_no
        current.append(Morpheme(surface, tag))
    if stats is not None:
        stats["lines"] = line_no
    if current:
        raise FormatError(f"sentence starting at line {open_line} has no closing EOS", line_no)


def read_corpus(stream: Iterable[str], interner: TagInterner | None = None) -> Corpus:
    interner = interner if interner is not None else TagInterner()
    stats: dict = {}
    sentences = list(iter_sentences(stream, interner, stats))
    corpus = Corpus(sentences, interner, stats.get("lines", 0))
    log.info("read %d sentences (%d lines, %d words)", len(corpus), corpus.num_lines, corpus.num_words)
    return corpus


def format_sentence(sentence: AnnotatedSentence) -> str:
    parts = [f"{m.surface}\t{m.tag.feature_string()}\n" for m in sentence.morphemes]
    parts.append(EOS + "\n")
    return "".join(parts)


def write_corpus(corpus: Iterable[AnnotatedSentence], out: IO[str]) -> None:
    for sentence in corpus:
        out.write(format_sentence(sentence))


def _split_dictionary_line(line: str, line_no: int) -> tuple[str, list[str]]:
    if line.startswith('"'):
        i = 1
        chars = []
        while True:
            j = line.find('"', i)
            if j < 0:
                raise FormatError("unterminated quoted surface", line_no)
            chars.append(line[i:j])
            if line.startswith('""', j):
                chars.append('"')
                i = j + 2
                continue
            break
        surface = "".join(chars)
        rest = line[j + 1 :]
        if not rest.startswith(FIELD_SEP):
            raise FormatError("quoted surface must be followed by a comma", line_no)
        rest = rest[1:]
    else:
        surface, sep, rest = line.partition(FIELD_SEP)
        if not sep:
            raise FormatError("dictionary entry has no tag fields", line_no)
    if not surface:
        raise FormatError("empty surface", line_no)
    if not rest:
        raise FormatError("dictionary entry has no tag fields", line_no)
    return surface, rest.split(FIELD_SEP)


def read_dictionary(stream: Iterable[str], interner: TagInterner | None = None) -> Dictionary:
    dictionary = Dictionary(interner=interner if interner is not None else TagInterner())
    line_no = 0
    for line_no, raw in enumerate(stream, 1):
        line = _strip_eol(raw)
        if not line:
            continue
        surface, fields = _split_dictionary_line(line, line_no)
        try:
            tag = dictionary.interner.intern(fields)
        except FormatError as exc:
            raise FormatError(str(exc), line_no) from None
        dictionary.add(surface, tag)
    dictionary.num_lines = line_no
    log.info("read %d dictionary entries (%d surfaces)", dictionary.num_entries, len(dictionary))
    return dictionary


def census_characters(corpus: Iterable[AnnotatedSentence], dictionary: Dictionary | None = None) -> Counter:
    """Character counts over corpus surfaces; dictionary surfaces weigh 1 per occurrence."""
    counts: Counter = Counter()
    for sentence in corpus:
        for m in sentence.morphemes:
            counts.update(m.surface)
    if dictionary is not None:
        for surface in dictionary.entries:
            counts.update(surface)
    return counts


def open_text(path: str, mode: str = "r") -> TextIO:
    return open(path, mode, encoding="utf-8", newline="\n")
