"""Independent reference implementations used as test oracles.

Nothing here imports the trie, tagger or trainer internals: matching is a
scan over the pattern list, character classes are transcribed from the
code-point ranges, and unknown-word tags come from the plain table fields.
"""

from __future__ import annotations

import random

from patmorph.core import BOS, AnnotatedSentence, Morpheme, PatternEntry, PatternKey, Tag, TagInterner

DIGIT, LATIN, KATAKANA, OTHER = 0, 1, 2, 3


def char_class(ch: str) -> int:
    cp = ord(ch)
    if 0x30 <= cp <= 0x39 or 0xFF10 <= cp <= 0xFF19:
        return DIGIT
    if 0x41 <= cp <= 0x5A or 0x61 <= cp <= 0x7A or 0xFF21 <= cp <= 0xFF3A or 0xFF41 <= cp <= 0xFF5A:
        return LATIN
    if 0x30A1 <= cp <= 0x30FA or cp == 0x30FC:
        return KATAKANA
    return OTHER


def brute_force_lookup(entries: list[PatternEntry], text: str, start: int, prev: Tag):
    """Best matching entry: longer surface wins; a tagged key beats a plain one of equal surface."""
    best = None
    best_rank = None
    for e in entries:
        s = e.key.surface
        if not text.startswith(s, start):
            continue
        tagged = e.key.prev_tag is not None
        if tagged and e.key.prev_tag != prev:
            continue
        rank = (len(s), tagged)
        if best_rank is None or rank > best_rank:
            best, best_rank = (e.shift, e.tag), rank
    return best


def unknown_oracle(text: str, start: int, prev: Tag, table) -> tuple[int, Tag]:
    cls = char_class(text[start])
    j = start + 1
    if cls != OTHER:
        size = len(text[start].encode("utf-8"))
        while j < len(text) and char_class(text[j]) == cls:
            extra = len(text[j].encode("utf-8"))
            if cls == KATAKANA and size + extra > 18:
                break
            size += extra
            j += 1
    key_class = [c for c in table.by_class if int(c) == cls]
    tag = None
    for (p, c), t in table.by_prev_and_class.items():
        if p == prev and int(c) == cls:
            tag = t
    if tag is None and key_class:
        tag = table.by_class[key_class[0]]
    if tag is None:
        tag = table.global_default
    return j - start, tag


def brute_force_tag(entries: list[PatternEntry], unknown, text: str) -> AnnotatedSentence:
    out = []
    prev = BOS
    i = 0
    while i < len(text):
        hit = brute_force_lookup(entries, text, i, prev)
        shift, tag = hit if hit is not None else unknown_oracle(text, i, prev, unknown)
        out.append(Morpheme(text[i : i + shift], tag))
        i += shift
        prev = tag
    return AnnotatedSentence(out)


def parse_tagged_output(data: str) -> list[list[tuple[str, str]]]:
    """Split streamed tagger output into sentences of ``(surface, tag string)``."""
    sentences = []
    current: list[tuple[str, str]] = []
    for line in data.split("\n")[:-1] if data else []:
        if line == "EOS":
            sentences.append(current)
            current = []
            continue
        surface, _, fields = line.rpartition("\t")
        current.append((surface, fields))
    assert not current, "output ended inside a sentence"
    return sentences


def random_pattern_set(rng: random.Random, alphabet: str, interner: TagInterner, n_entries: int, max_len: int = 6):
    tags = interner.tags
    prevs = [None, BOS, *tags]
    seen = set()
    entries = []
    for _ in range(n_entries * 3):
        if len(entries) >= n_entries:
            break
        surface = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, max_len)))
        prev = rng.choice(prevs)
        key = (surface, None if prev is None else prev.id)
        if key in seen:
            continue
        seen.add(key)
        entries.append(PatternEntry(PatternKey(surface, prev), rng.randint(1, len(surface)), rng.choice(tags)))
    return entries


def random_toy_corpus(rng: random.Random, alphabet: str, n_tags: int, n_sentences: int, interner: TagInterner):
    """Random annotated sentences over a small lexicon (words may carry several tags)."""
    tags = [interner.intern([f"T{i}", f"sub{i % 2}"]) for i in range(n_tags)]
    lexicon = []
    for _ in range(rng.randint(3, 12)):
        w = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 3)))
        lexicon.append((w, rng.sample(tags, rng.randint(1, min(2, n_tags)))))
    sentences = []
    for _ in range(n_sentences):
        ms = []
        for _ in range(rng.randint(1, 6)):
            w, ts = rng.choice(lexicon)
            ms.append(Morpheme(w, rng.choice(ts)))
        sentences.append(AnnotatedSentence(ms))
    return sentences, lexicon
