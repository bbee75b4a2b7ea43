import io
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_tag, random_toy_corpus
from patmorph.core import BOS, AnnotatedSentence, Morpheme, PatternEntry, PatternKey, TagInterner
from patmorph.ingest import Corpus, Dictionary
from patmorph.model import dumps
from patmorph.tagger import tag_sentence
from patmorph.trainer import (
    CandidateTable,
    augment_from_dictionary,
    enumerate_candidates,
    learn_unknown_tag_table,
    prune_and_finalize,
    resolve_candidate,
    train,
    write_patterns,
)
from patmorph.unknown import CharClass


@pytest.fixture
def tags():
    it = TagInterner()
    return it, [it.intern([f"T{i}"]) for i in range(6)]


def sent(*pairs):
    return AnnotatedSentence([Morpheme(w, t) for w, t in pairs])


def test_enumerate_candidates_example(tags):
    _, (_, t1, t2, *_) = tags
    table = enumerate_candidates([sent(("ab", t1), ("c", t2))], 3)
    assert table.plain == {"ab": {(2, 1): 1}, "abc": {(2, 1): 1}, "c": {(1, 2): 1}}
    assert table.tagged == {("ab", -1): {(2, 1): 1}, ("abc", -1): {(2, 1): 1}, ("c", 1): {(1, 2): 1}}


def test_enumerate_edge_cases(tags):
    _, (t0, t1, *_) = tags
    assert len(enumerate_candidates([], 4)) == 0
    table = enumerate_candidates([sent(("a", t0), ("b", t1))], 5)
    assert set(table.plain) == {"a", "ab", "b"}
    # a word longer than the limit still yields its own surface and nothing longer
    table = enumerate_candidates([sent(("abcd", t0), ("e", t1))], 2)
    assert set(table.plain) == {"abcd", "e"}


def test_augment_uses_corpus_tag_totals(tags):
    it, (t0, t1, t2, t3, t4, t5) = tags
    corpus = [sent(("q", t5))] * 10 + [sent(("r", t1))] * 2
    table = enumerate_candidates(corpus, 2)
    d = Dictionary(interner=it)
    d.add("xy", t1)
    d.add("xy", t5)
    d.add("q", t0)
    d.add("zz", t4)
    d.add("zz", t3)
    entries = augment_from_dictionary(d, table, it)
    assert entries == [
        PatternEntry(PatternKey("xy"), 2, t5),
        PatternEntry(PatternKey("zz"), 2, t3),
    ]


@pytest.mark.parametrize(
    "outcomes, expected",
    [
        ({(2, 1): 3, (1, 2): 2, (2, 3): 1}, (2, 1)),
        ({(1, 1): 1}, (1, 1)),
        ({(1, 1): 2, (2, 2): 2}, (1, 1)),
        ({(1, 4): 2, (1, 3): 2}, (1, 3)),
    ],
)
def test_resolve_candidate(outcomes, expected):
    assert resolve_candidate(outcomes) == expected


def test_prune_examples(tags):
    it, (_, t1, _, _, t4, _) = tags
    seed = [PatternEntry(PatternKey("ab"), 2, t1)]
    table = CandidateTable(plain={"abc": {(2, t1.id): 1}, "abd": {(3, t4.id): 1}})
    kept = prune_and_finalize(seed, table, interner=it)
    assert [str(e.key) for e in kept] == ["ab", "abd"]
    first = prune_and_finalize([], CandidateTable(plain={"abc": {(2, 1): 1}}), interner=it)
    assert [str(e.key) for e in first] == ["abc"]


def test_plain_candidate_shadowing_a_tagged_prefix_is_kept(tags):
    # Dropping "ab" because its plain prefix "a" agrees would let the
    # tagged pattern "a;X" win on input "ab" after X and change the answer.
    it, (x, t1, t2, *_) = tags
    table = CandidateTable(
        plain={"a": {(1, t1.id): 1}, "ab": {(1, t1.id): 1}},
        tagged={("a", x.id): {(1, t2.id): 1}},
    )
    kept = prune_and_finalize([], table, interner=it)
    assert "ab" in [str(e.key) for e in kept]
    # once ("ab", X) is itself a candidate the shadowing concern disappears
    table.tagged[("ab", x.id)] = {(1, t2.id): 1}
    kept = prune_and_finalize([], table, interner=it)
    assert "ab" not in [str(e.key) for e in kept]


def test_tagged_candidate_answered_by_plain_is_pruned(tags):
    it, (_, t1, *_) = tags
    table = CandidateTable(plain={"a": {(1, t1.id): 3}}, tagged={("a", -1): {(1, t1.id): 3}})
    assert [str(e.key) for e in prune_and_finalize([], table, interner=it)] == ["a"]


def test_emitted_shifts_fit_their_surfaces():
    rng = random.Random(5)
    for _ in range(50):
        it = TagInterner()
        corpus, _ = random_toy_corpus(rng, "abcd", 3, 20, it)
        table = enumerate_candidates(corpus, 4)
        for e in prune_and_finalize([], table, interner=it, prune=False):
            assert 1 <= e.shift <= len(e.key.surface)


def test_unknown_table_counts_digit_words():
    it = TagInterner()
    num, noun, part = it.intern(["num"]), it.intern(["noun"]), it.intern(["particle"])
    corpus = [
        sent(("12", num), ("個", noun)),
        sent(("本", noun), ("3", num), ("が", part)),
        sent(("4", num), ("5", num)),
    ]
    table = learn_unknown_tag_table(corpus, interner=it)
    assert table.by_class[CharClass.DIGIT] == num
    assert table.lookup(BOS, CharClass.DIGIT) == num
    assert table.lookup(noun, CharClass.DIGIT) == num
    assert table.global_default == num
    # no latin observations: the chain reaches the global default
    assert CharClass.LATIN not in table.by_class
    assert table.lookup(part, CharClass.LATIN) == num


def test_unknown_table_prev_specific_entries():
    it = TagInterner()
    a, b, p = it.intern(["A"]), it.intern(["B"]), it.intern(["P"])
    corpus = [sent(("x", a))] * 3 + [sent(("の", p), ("y", b))] * 2
    table = learn_unknown_tag_table(corpus, interner=it)
    assert table.lookup(BOS, CharClass.LATIN) == a
    assert table.lookup(p, CharClass.LATIN) == b
    assert all(v != table.by_class[c] for (_, c), v in table.by_prev_and_class.items())


def test_unknown_table_fallbacks_for_empty_corpus():
    it = TagInterner()
    n, v = it.intern(["n"]), it.intern(["v"])
    d = Dictionary(interner=it)
    d.add("a", v)
    d.add("a", n)
    d.add("b", v)
    d.add("c", n)
    d.add("d", v)
    assert learn_unknown_tag_table([], d, it).global_default == v
    assert learn_unknown_tag_table([], None, it).global_default.fields == ("unknown",)


def test_train_reproduces_single_sentence(tags):
    it, (t0, t1, t2, *_) = tags
    s = sent(("今日", t0), ("は", t1), ("晴れ", t2))
    model = train(Corpus([s], it))
    assert tag_sentence(s.text, model) == s


def test_train_from_dictionary_only():
    it = TagInterner()
    noun = it.intern(["noun", "common"])
    d = Dictionary(interner=it)
    d.add("ねこ", noun)
    model = train(Corpus(interner=it), d)
    out = tag_sentence("ねこ", model)
    assert [(m.surface, m.tag.fields) for m in out] == [("ねこ", ("noun", "common"))]


def test_train_rejects_empty_inputs():
    with pytest.raises(ValueError):
        train(Corpus())
    with pytest.raises(ValueError):
        train(Corpus(), Dictionary(), engine="reference")
    with pytest.raises(ValueError):
        train(Corpus([sent(("a", TagInterner().intern(["t"])))]), engine="bogus")


def _random_training_set(seed):
    rng = random.Random(seed)
    it = TagInterner()
    alphabet = "abcdefghij"[: rng.randint(2, 10)]
    corpus, lexicon = random_toy_corpus(rng, alphabet, rng.randint(1, 4), rng.randint(1, 50), it)
    d = None
    if rng.random() < 0.6:
        d = Dictionary(interner=it)
        for _ in range(rng.randint(1, 8)):
            w = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 5)))
            d.add(w, rng.choice(it.tags))
        for w, ts in lexicon[:2]:
            d.add(w, ts[0])
    return Corpus(corpus, it), d


@settings(max_examples=150)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_compiled_and_reference_engines_are_byte_identical(seed, prune):
    corpus, d = _random_training_set(seed)
    fast = train(corpus, d, prune=prune, keep_patterns=True)
    slow = train(corpus, d, prune=prune, keep_patterns=True, engine="reference")
    assert dumps(fast.model) == dumps(slow.model)
    assert fast.patterns == slow.patterns
    assert fast.num_candidates == slow.num_candidates


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_accepted_patterns_drive_the_model(seed):
    # the model must tag exactly like a scan over its own accepted list
    corpus, d = _random_training_set(seed)
    result = train(corpus, d, keep_patterns=True)
    rng = random.Random(seed)
    chars = sorted({c for s in corpus for c in s.text}) + ["#", "7"]
    for _ in range(10):
        text = "".join(rng.choice(chars) for _ in range(rng.randint(1, 15)))
        assert tag_sentence(text, result.model) == brute_force_tag(result.patterns, result.model.unknown, text)


def test_determinism_on_repeat():
    corpus, d = _random_training_set(11)
    assert dumps(train(corpus, d)) == dumps(train(corpus, d))


def test_pruning_shrinks_the_pattern_set():
    corpus, d = _random_training_set(3)
    full = train(corpus, d, prune=False, keep_patterns=True)
    pruned = train(corpus, d, keep_patterns=True)
    assert len(pruned.patterns) <= len(full.patterns)
    # every resolved candidate survives without pruning
    assert len(full.patterns) >= full.num_candidates


def test_write_patterns_format():
    noun = TagInterner().intern(["noun", "*"])
    buf = io.StringIO()
    write_patterns(
        [PatternEntry(PatternKey("ab"), 2, noun), PatternEntry(PatternKey("a", BOS), 1, noun)],
        buf,
    )
    assert buf.getvalue() == "ab\t-\t2\tnoun,*\na\tBOS\t1\tnoun,*\n"


def test_candidate_totals_count_whole_words(tags):
    _, (t0, t1, *_) = tags
    table = enumerate_candidates([sent(("ab", t0), ("c", t1)), sent(("ab", t0))], 3)
    assert table.full_word_totals() == Counter({0: 2, 1: 1})
