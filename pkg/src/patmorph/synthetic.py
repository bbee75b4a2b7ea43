"""Synthetic Japanese-like corpora and dictionaries for desk-scale benchmarks.

The generated language has a Zipfian lexicon of kanji/hiragana content
words, short hiragana function words, katakana loanwords and digit numbers,
tagged with four-level POS tags.  Nothing here is linguistically faithful;
it only reproduces the shape (word lengths, sentence lengths, tag counts,
character inventory) that drives training and tagging cost.

Run ``python -m patmorph.synthetic OUTDIR`` to write ``train.txt``,
``dict.csv`` and ``test.raw``.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import AnnotatedSentence, Morpheme, TagInterner
from .ingest import Corpus, Dictionary

HIRAGANA = [chr(c) for c in range(0x3041, 0x3094)]
KATAKANA = [chr(c) for c in range(0x30A1, 0x30F5)] + ["ー"]
KANJI = [chr(c) for c in range(0x4E00, 0x4E00 + 2500)]
DIGITS = list("0123456789")

_MAJOR = {
    "noun": ["common_noun", "proper_noun", "sahen_noun", "formal_noun", "adverbial_noun"],
    "verb": ["*"],
    "adjective": ["*"],
    "particle": ["case_particle", "binding_particle", "conjunctive_particle", "final_particle"],
    "auxiliary": ["*"],
    "adverb": ["*"],
    "suffix": ["noun_suffix", "verb_suffix"],
    "special": ["period", "comma"],
}
_CONJ_TYPES = ["ichidan_verb", "godan_ka", "godan_ra", "godan_wa", "i_adjective", "na_adjective"]
_CONJ_FORMS = ["terminal", "irrealis", "continuative", "attributive", "imperative", "ta_form", "te_form"]


def _tag_inventory(rng: np.random.Generator, n_tags: int) -> list[tuple[str, ...]]:
    tags: list[tuple[str, ...]] = []
    seen = set()
    while len(tags) < n_tags:
        major = list(_MAJOR)[rng.integers(len(_MAJOR))]
        minor = _MAJOR[major][rng.integers(len(_MAJOR[major]))]
        if major in ("verb", "adjective", "auxiliary"):
            fields = (major, minor, _CONJ_TYPES[rng.integers(len(_CONJ_TYPES))], _CONJ_FORMS[rng.integers(len(_CONJ_FORMS))])
        else:
            fields = (major, minor, "*", "*")
        if fields not in seen:
            seen.add(fields)
            tags.append(fields)
    return tags


def _draw(alphabet: list[str], ix, n: int) -> str:
    m = len(alphabet)
    return "".join([alphabet[ix[j] % m] for j in range(n)])


@dataclass
class SyntheticLanguage:
    seed: int = 0
    lexicon_size: int = 100_000
    n_tags: int = 60
    words_per_sentence: float = 16.0

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        self.tag_fields = _tag_inventory(rng, self.n_tags)
        surfaces: list[str] = []
        seen: set[str] = set()
        # the first entries are frequent, short function words
        while len(surfaces) < self.lexicon_size:
            batch = 4096
            u = rng.random(batch)
            lens = rng.integers(1, 8, (batch, 3))
            idx = rng.integers(0, 1 << 30, (batch, 12))
            coin = rng.random((batch, 2))
            for b in range(batch):
                r = len(surfaces)
                if r >= self.lexicon_size:
                    break
                ix = idx[b]
                if r < 150:
                    s = _draw(HIRAGANA, ix, 1 + lens[b, 0] % 3)
                elif u[b] < 0.07:
                    s = _draw(KATAKANA, ix, 2 + lens[b, 0] % 6)
                elif u[b] < 0.75:
                    s = _draw(KANJI, ix, 1 + lens[b, 0] % 3)
                    if coin[b, 0] < 0.4:
                        s += _draw(HIRAGANA, ix[6:], 1 + lens[b, 1] % 2)
                else:
                    s = _draw(HIRAGANA, ix, 2 + lens[b, 0] % 3)
                    if coin[b, 1] < 0.5:
                        s = KANJI[ix[11] % len(KANJI)] + s
                if s in seen:
                    continue
                seen.add(s)
                surfaces.append(s)
        self.surfaces = surfaces
        n = len(surfaces)
        ranks = np.arange(n, dtype=np.float64)
        weights = 1.0 / (ranks + 2.7) ** 1.05
        self.probs = weights / weights.sum()
        # one or two tags per word; the second tag is rarer
        self.tags1 = rng.integers(0, self.n_tags, n)
        self.tags2 = np.where(rng.random(n) < 0.15, rng.integers(0, self.n_tags, n), -1)

    def _word_tags(self, i: int) -> list[int]:
        t2 = int(self.tags2[i])
        t1 = int(self.tags1[i])
        return [t1] if t2 < 0 or t2 == t1 else [t1, t2]

    def dictionary(self, interner: TagInterner | None = None) -> Dictionary:
        d = Dictionary(interner=interner if interner is not None else TagInterner())
        tags = [d.interner.intern(f) for f in self.tag_fields]
        for i, s in enumerate(self.surfaces):
            for t in self._word_tags(i):
                d.add(s, tags[t])
        return d

    def dictionary_lines(self) -> list[str]:
        lines = []
        for i, s in enumerate(self.surfaces):
            for t in self._word_tags(i):
                lines.append(f"{s},{','.join(self.tag_fields[t])}\n")
        return lines

    def _sample(self, n_sentences: int, seed: int):
        rng = np.random.default_rng(seed)
        lengths = np.clip(rng.poisson(self.words_per_sentence - 1, n_sentences) + 1, 1, None)
        total = int(lengths.sum())
        words = rng.choice(len(self.surfaces), total, p=self.probs)
        alt = rng.random(total) < 0.25
        numbers = rng.random(total) < 0.02
        num_len = rng.integers(1, 5, total)
        digits = rng.integers(0, 10, (total, 4))
        return lengths, words, alt, numbers, num_len, digits

    def sentences(self, n_sentences: int, seed: int = 1, interner: TagInterner | None = None) -> Corpus:
        interner = interner if interner is not None else TagInterner()
        tags = [interner.intern(f) for f in self.tag_fields]
        num_tag = interner.intern(("noun", "number", "*", "*"))
        lengths, words, alt, numbers, num_len, digits = self._sample(n_sentences, seed)
        out = []
        k = 0
        for length in lengths:
            ms = []
            for _ in range(length):
                if numbers[k]:
                    s = "".join(DIGITS[d] for d in digits[k, : num_len[k]])
                    ms.append(Morpheme(s, num_tag))
                else:
                    w = int(words[k])
                    t = int(self.tags2[w]) if alt[k] and self.tags2[w] >= 0 else int(self.tags1[w])
                    ms.append(Morpheme(self.surfaces[w], tags[t]))
                k += 1
            out.append(AnnotatedSentence(ms))
        return Corpus(out, interner)

    def raw_lines(self, n_sentences: int, seed: int = 2) -> list[str]:
        return [s.text for s in self.sentences(n_sentences, seed)]


def main(argv: list[str] | None = None) -> None:
    from .ingest import write_corpus

    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", type=Path)
    ap.add_argument("--train", type=int, default=10_000, help="training sentences")
    ap.add_argument("--test", type=int, default=100_000, help="raw test sentences")
    ap.add_argument("--lexicon", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    args.outdir.mkdir(parents=True, exist_ok=True)
    lang = SyntheticLanguage(args.seed, args.lexicon)
    with open(args.outdir / "dict.csv", "w", encoding="utf-8") as f:
        f.writelines(lang.dictionary_lines())
    with open(args.outdir / "train.txt", "w", encoding="utf-8") as f:
        write_corpus(lang.sentences(args.train, seed=args.seed + 1), f)
    with open(args.outdir / "test.raw", "w", encoding="utf-8") as f:
        f.writelines(line + "\n" for line in lang.raw_lines(args.test, seed=args.seed + 2))


if __name__ == "__main__":
    main()
