"""Pattern induction from an annotated corpus and a morphological dictionary.

Candidate keys are kept in two compact forms while training: a plain key is
its surface string and a tag-extended key is ``(surface, prev_id)`` where
``prev_id`` is the previous word's interner id, ``-1`` for sentence start.
Outcomes are ``(shift, tag_id)`` pairs.
"""

from __future__ import annotations

import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .core import BOS, AnnotatedSentence, PatternEntry, PatternKey, Tag, TagInterner
from .ingest import Corpus, Dictionary, census_characters
from .model import CompiledModel
from .trie import SymbolTable, build_symbol_table, build_trie_from_paths
from .unknown import CharClass, UnknownTagTable, word_class

log = logging.getLogger(__name__)

BOS_ID = -1
Outcome = tuple[int, int]
CompactKey = str | tuple[str, int]


@dataclass
class CandidateTable:
    """Nested counter ``key -> (shift, tag id) -> count``."""

    plain: dict[str, dict[Outcome, int]] = field(default_factory=dict)
    tagged: dict[tuple[str, int], dict[Outcome, int]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.plain) + len(self.tagged)

    def compact_items(self) -> Iterator[tuple[CompactKey, dict[Outcome, int]]]:
        yield from self.plain.items()
        yield from self.tagged.items()

    def get(self, key: PatternKey) -> dict[Outcome, int] | None:
        if key.prev_tag is None:
            return self.plain.get(key.surface)
        return self.tagged.get((key.surface, key.prev_tag.id))

    def __contains__(self, key: PatternKey) -> bool:
        return self.get(key) is not None

    def full_word_totals(self) -> Counter:
        """Occurrences of each tag as a whole-word outcome over plain keys."""
        totals: Counter = Counter()
        for surface, outcomes in self.plain.items():
            n = len(surface)
            for (shift, tag_id), count in outcomes.items():
                if shift == n:
                    totals[tag_id] += count
        return totals


def effective_max_len(corpus: Corpus, dictionary: Dictionary | None) -> int:
    if dictionary is not None and len(dictionary):
        return dictionary.max_word_len
    return max((len(m.surface) for s in corpus for m in s.morphemes), default=1)


def enumerate_candidates(corpus: Iterable[AnnotatedSentence], max_len: int) -> CandidateTable:
    """Count every pattern candidate starting at a word boundary.

    For a word of length ``s`` at position ``i`` the surfaces
    ``text[i:i+k]`` for ``k`` in ``s .. min(max_len, remaining)`` are
    counted, each plain and extended by the previous tag.  A word longer
    than ``max_len`` still yields its own surface.
    """
    plain: dict[str, dict[Outcome, int]] = {}
    tagged: dict[tuple[str, int], dict[Outcome, int]] = {}
    for sentence in corpus:
        text = sentence.text
        n = len(text)
        i = 0
        prev = BOS_ID
        for m in sentence.morphemes:
            shift = len(m.surface)
            outcome = (shift, m.tag.id)
            top = max(shift, min(max_len, n - i))
            for k in range(shift, top + 1):
                c = text[i : i + k]
                d = plain.get(c)
                if d is None:
                    plain[c] = {outcome: 1}
                else:
                    d[outcome] = d.get(outcome, 0) + 1
                tk = (c, prev)
                d = tagged.get(tk)
                if d is None:
                    tagged[tk] = {outcome: 1}
                else:
                    d[outcome] = d.get(outcome, 0) + 1
            i += shift
            prev = m.tag.id
    return CandidateTable(plain, tagged)


def _argmax_tag(scores: Counter | dict, candidates: Iterable[int]) -> int:
    best = -1
    best_score = -1
    for t in sorted(candidates):
        s = scores.get(t, 0)
        if s > best_score:
            best, best_score = t, s
    return best


def augment_from_dictionary(
    dictionary: Dictionary, table: CandidateTable, interner: TagInterner | None = None
) -> list[PatternEntry]:
    """Plain patterns for dictionary words never seen as a candidate key."""
    interner = interner if interner is not None else dictionary.interner
    totals = table.full_word_totals()
    entries = []
    for surface, tags in dictionary.entries.items():
        if surface in table.plain:
            continue
        tag_id = _argmax_tag(totals, (t.id for t in tags))
        entries.append(PatternEntry(PatternKey(surface), len(surface), interner[tag_id]))
    return entries


def resolve_candidate(outcomes: dict[Outcome, int]) -> Outcome:
    """Most frequent shift, then the most frequent tag at that shift."""
    by_shift: dict[int, int] = {}
    for (shift, _), count in outcomes.items():
        by_shift[shift] = by_shift.get(shift, 0) + count
    best_shift = min(by_shift, key=lambda s: (-by_shift[s], s))
    best_tag = min(
        (t for (s, t) in outcomes if s == best_shift),
        key=lambda t: (-outcomes[(best_shift, t)], t),
    )
    return best_shift, best_tag


def _order_key(symbols: SymbolTable | None):
    """Sort key: surface length, plain before tag-extended, then symbol ids."""
    if symbols is None:
        def key(k):
            if isinstance(k, str):
                return (len(k), 0, k, 0)
            return (len(k[0]), 1, k[0], k[1])
        return key
    trans = {ord(ch): i for ch, i in symbols.char_to_id.items()}
    tag_base = symbols.tag_id_base
    num_tags = symbols.num_tags

    def key(k):
        if isinstance(k, str):
            return (len(k), 0, k.translate(trans), 0)
        return (len(k[0]), 1, k[0].translate(trans), tag_base + (num_tags if k[1] < 0 else k[1]))
    return key


def _length_groups(table: CandidateTable) -> list[tuple[list[str], list[tuple[str, int]]]]:
    by_len: dict[int, tuple[list, list]] = {}
    for s in table.plain:
        by_len.setdefault(len(s), ([], []))[0].append(s)
    for k in table.tagged:
        by_len.setdefault(len(k[0]), ([], []))[1].append(k)
    return [by_len[n] for n in sorted(by_len)]


class _AcceptedSet:
    """Accepted patterns indexed for the pruning test."""

    def __init__(self):
        self.plain: dict[str, Outcome] = {}
        self.tagged: dict[str, dict[int, Outcome]] = {}
        self.order: list[tuple[CompactKey, Outcome]] = []

    def add_plain(self, surface: str, out: Outcome) -> None:
        self.plain[surface] = out
        self.order.append((surface, out))

    def add_tagged(self, surface: str, prev: int, out: Outcome) -> None:
        self.tagged.setdefault(surface, {})[prev] = out
        self.order.append(((surface, prev), out))

    def search(self, surface: str, prev: int, include_full_plain: bool) -> Outcome | None:
        """Best match for ``surface`` under ``prev`` among strictly lower-ranked keys."""
        plain = self.plain
        tagged = self.tagged
        n = len(surface)
        if include_full_plain:
            out = plain.get(surface)
            if out is not None:
                return out
        for k in range(n - 1, 0, -1):
            c = surface[:k]
            row = tagged.get(c)
            if row is not None:
                out = row.get(prev)
                if out is not None:
                    return out
            out = plain.get(c)
            if out is not None:
                return out
        return None

    def redundant_plain(self, surface: str, out: Outcome, candidates: CandidateTable) -> bool:
        """True when ``surface`` would never change the greedy decoder's answer.

        Its longest plain prefix must answer ``out`` and so must every
        tag-extended prefix longer than or level with that plain prefix, for
        each previous tag under which ``surface`` itself would be the winning
        match (i.e. ``(surface, prev)`` is not a candidate).
        """
        plain = self.plain
        n = len(surface)
        k0 = 0
        for k in range(n - 1, 0, -1):
            r = plain.get(surface[:k])
            if r is not None:
                if r != out:
                    return False
                k0 = k
                break
        if k0 == 0:
            return False
        tagged = self.tagged
        cand_tagged = candidates.tagged
        seen: set[int] = set()
        for k in range(n - 1, k0 - 1, -1):
            row = tagged.get(surface[:k])
            if row is None:
                continue
            for prev, r in row.items():
                if prev in seen:
                    continue
                seen.add(prev)
                if r != out and (surface, prev) not in cand_tagged:
                    return False
        return True


def prune_and_finalize(
    dict_entries: Iterable[PatternEntry],
    table: CandidateTable,
    symbols: SymbolTable | None = None,
    interner: TagInterner | None = None,
    prune: bool = True,
) -> list[PatternEntry]:
    """Resolve every candidate and keep those a shorter pattern cannot answer."""
    accepted = _accepted_compact(dict_entries, table, symbols, prune)
    return _to_entries(accepted.order, interner)


def _accepted_compact(dict_entries, table, symbols, prune) -> _AcceptedSet:
    # Within one (length, kind) group no decision reads another member of the
    # group, so groups are processed in any order and only the accepted
    # patterns are sorted into the canonical visit order afterwards.
    accepted = _AcceptedSet()
    for e in dict_entries:
        accepted.add_plain(e.key.surface, (e.shift, e.tag.id))
    n_seeds = len(accepted.order)
    plain_tab = table.plain
    tagged_tab = table.tagged
    for plains, taggeds in _length_groups(table):
        for key in plains:
            outcomes = plain_tab[key]
            out = next(iter(outcomes)) if len(outcomes) == 1 else resolve_candidate(outcomes)
            if prune and accepted.redundant_plain(key, out, table):
                continue
            accepted.add_plain(key, out)
        for key in taggeds:
            outcomes = tagged_tab[key]
            out = next(iter(outcomes)) if len(outcomes) == 1 else resolve_candidate(outcomes)
            if prune and accepted.search(key[0], key[1], True) == out:
                continue
            accepted.add_tagged(key[0], key[1], out)
    sort_key = _order_key(symbols)
    tail = accepted.order[n_seeds:]
    tail.sort(key=lambda item: sort_key(item[0]))
    accepted.order[n_seeds:] = tail
    return accepted


def _to_entries(order: list[tuple[CompactKey, Outcome]], interner: TagInterner | None) -> list[PatternEntry]:
    if interner is None:
        raise ValueError("an interner is required to materialize pattern entries")

    def tag_of(i: int) -> Tag:
        return BOS if i < 0 else interner[i]

    entries = []
    for key, (shift, tag_id) in order:
        if isinstance(key, str):
            pk = PatternKey(key)
        else:
            pk = PatternKey(key[0], tag_of(key[1]))
        entries.append(PatternEntry(pk, shift, interner[tag_id]))
    return entries


def learn_unknown_tag_table(
    corpus: Iterable[AnnotatedSentence],
    dictionary: Dictionary | None = None,
    interner: TagInterner | None = None,
) -> UnknownTagTable:
    """Most frequent tag per (previous tag, class) and per class for single-class words."""
    class_counts: Counter = Counter()
    prev_counts: Counter = Counter()
    overall: Counter = Counter()
    id_to_tag: dict[int, Tag] = {}
    classes: dict[str, CharClass | None] = {}
    for sentence in corpus:
        prev = BOS
        for m in sentence.morphemes:
            tag = m.tag
            id_to_tag[tag.id] = tag
            overall[tag.id] += 1
            surface = m.surface
            cls = classes.get(surface, False)
            if cls is False:
                cls = classes[surface] = word_class(surface)
            if cls is not None:
                class_counts[cls, tag.id] += 1
                prev_counts[prev, cls, tag.id] += 1
            prev = tag
    by_class: dict[CharClass, Counter] = {}
    for (cls, tid), n in class_counts.items():
        by_class.setdefault(cls, Counter())[tid] = n
    by_prev: dict[tuple[Tag, CharClass], Counter] = {}
    for (prev, cls, tid), n in prev_counts.items():
        by_prev.setdefault((prev, cls), Counter())[tid] = n

    def best(counts: Counter) -> Tag:
        return id_to_tag[_argmax_tag(counts, counts)]

    table = UnknownTagTable()
    if overall:
        table.global_default = best(overall)
    elif dictionary is not None and len(dictionary):
        firsts: Counter = Counter()
        for tags in dictionary.entries.values():
            firsts[tags[0].id] += 1
            id_to_tag[tags[0].id] = tags[0]
        table.global_default = best(firsts)
    elif interner is not None:
        table.global_default = interner.intern(["unknown"])
    for cls, counts in by_class.items():
        table.by_class[cls] = best(counts)
    for key, counts in by_prev.items():
        tag = best(counts)
        if table.by_class.get(key[1]) != tag:
            table.by_prev_and_class[key] = tag
    return table


def _unify_interners(corpus: Corpus, dictionary: Dictionary | None) -> Dictionary | None:
    if dictionary is None or dictionary.interner is corpus.interner:
        return dictionary
    merged = Dictionary(interner=corpus.interner, num_lines=dictionary.num_lines)
    for surface, tags in dictionary.entries.items():
        for t in tags:
            merged.add(surface, corpus.interner.intern(t.fields))
    return merged


@dataclass
class TrainResult:
    model: CompiledModel
    patterns: list[PatternEntry]
    num_candidates: int
    seconds: float


def train(
    corpus: Corpus,
    dictionary: Dictionary | None = None,
    *,
    prune: bool = True,
    keep_patterns: bool = False,
    engine: str = "compiled",
) -> CompiledModel | TrainResult:
    """Induce patterns and compile them into a model.

    ``engine="reference"`` runs the pure-Python candidate table and pruning
    instead of the compiled kernels; both produce byte-identical models.

    With ``keep_patterns`` a :class:`TrainResult` carrying the accepted
    patterns in acceptance order is returned instead of the bare model.
    """
    if not len(corpus) and (dictionary is None or not len(dictionary)):
        raise ValueError("training needs a non-empty corpus or dictionary")
    t0 = time.perf_counter()
    dictionary = _unify_interners(corpus, dictionary)
    interner = corpus.interner

    census = census_characters(corpus, dictionary)
    max_len = effective_max_len(corpus, dictionary)
    unknown = learn_unknown_tag_table(corpus, dictionary, interner)
    # the unknown table may have interned a fallback tag, so fix the tag list last
    symbols = build_symbol_table(census, interner.tags)

    if engine == "reference":
        table = enumerate_candidates(corpus, max_len)
        dict_entries = augment_from_dictionary(dictionary, table, interner) if dictionary is not None else []
        accepted = _accepted_compact(dict_entries, table, symbols, prune)
        trie = _trie_from_accepted(accepted.order, symbols)
        num_candidates = len(table)
        order = accepted.order if keep_patterns else None
    elif engine == "compiled":
        trie, num_candidates, order = _train_compiled(corpus, dictionary, symbols, max_len, prune, keep_patterns)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    seconds = time.perf_counter() - t0
    model = CompiledModel(
        symbols,
        trie,
        unknown,
        {"candidates": num_candidates, "max_len": max_len},
    )
    log.info(
        "trained %d patterns from %d candidates in %.2fs", model.num_patterns, num_candidates, seconds
    )
    if keep_patterns:
        return TrainResult(model, _to_entries(order, interner), num_candidates, seconds)
    return model


def _trie_from_accepted(order, symbols: SymbolTable):
    char_id = symbols.char_to_id
    tag_base = symbols.tag_id_base
    bos_index = symbols.num_tags
    paths: dict[tuple[int, ...], tuple[int, int]] = {}
    for key, out in order:
        if isinstance(key, str):
            path = tuple(map(char_id.__getitem__, key))
        else:
            prev = bos_index if key[1] < 0 else key[1]
            path = (*map(char_id.__getitem__, key[0]), tag_base + prev)
        paths[path] = out
    return build_trie_from_paths(paths, symbols.alphabet_size)


def _train_compiled(corpus, dictionary, symbols, max_len, prune, keep_patterns):
    from .fasttrain import accepted_keys, compile_patterns

    totals = Counter(m.tag.id for s in corpus for m in s.morphemes)
    surfaces: list[str] = []
    tag_ids: list[int] = []
    if dictionary is not None:
        for surface, tags in dictionary.entries.items():
            surfaces.append(surface)
            tag_ids.append(_argmax_tag(totals, (t.id for t in tags)))
    cp = compile_patterns(corpus.sentences, surfaces, tag_ids, symbols, max_len, prune)
    order = None
    if keep_patterns:
        seeds, rest = accepted_keys(cp, symbols, surfaces)
        sort_key = _order_key(symbols)
        rest.sort(key=lambda item: sort_key(item[0]))
        order = seeds + rest
    return cp.trie, cp.num_candidates, order


def write_patterns(patterns: Iterable[PatternEntry], out: IO[str]) -> None:
    """Debug dump: surface, prev-tag fields or ``-``, shift, tag fields."""
    for e in patterns:
        prev = "-" if e.key.prev_tag is None else e.key.prev_tag.feature_string()
        out.write(f"{e.key.surface}\t{prev}\t{e.shift}\t{e.tag.feature_string()}\n")
