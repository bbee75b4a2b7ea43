import pytest
from hypothesis import given
from hypothesis import strategies as st

from patmorph.core import (
    AnnotatedSentence,
    FormatError,
    Morpheme,
    PatternEntry,
    PatternKey,
    TagInterner,
    intern_tag,
    tag_prefix,
)

field_text = st.text(st.characters(blacklist_characters="\t\n\r,", blacklist_categories=("Cs",)), min_size=1, max_size=6)


def test_interning_is_idempotent():
    it = TagInterner()
    a = intern_tag(["noun", "common_noun", "*", "*"], it)
    b = intern_tag(["noun", "common_noun", "*", "*"], it)
    assert a.id == b.id and a == b


def test_fresh_ids_are_consecutive():
    it = TagInterner()
    assert intern_tag(["verb"], it).id == 0
    assert intern_tag(["noun"], it).id == 1


@pytest.mark.parametrize("fields", [["a\tb"], ["a\nb"], ["a,b"], ["x", "a\rb"], []])
def test_forbidden_fields_are_rejected(fields):
    with pytest.raises(FormatError):
        intern_tag(fields, TagInterner())


def test_tag_prefix_examples():
    it = TagInterner()
    shumi = it.intern(["noun", "common_noun", "*", "*", "shumi"])
    assert tag_prefix(shumi, 1) == ["noun"]
    assert tag_prefix(it.intern(["verb"]), 4) == ["verb", "*", "*", "*"]
    iru = it.intern(["verb", "*", "ichidan_verb", "terminal"])
    assert tag_prefix(iru, 4) == ["verb", "*", "ichidan_verb", "terminal"]
    with pytest.raises(ValueError):
        tag_prefix(iru, 0)


@given(st.lists(st.lists(field_text, min_size=1, max_size=5), max_size=30))
def test_interning_is_a_bijection(field_lists):
    it = TagInterner()
    tags = [it.intern(fs) for fs in field_lists]
    for fs, t in zip(field_lists, tags):
        for gs, u in zip(field_lists, tags):
            assert (tuple(fs) == tuple(gs)) == (t.id == u.id)
    assert sorted({t.id for t in tags}) == list(range(len(it)))


@given(st.lists(field_text, min_size=1, max_size=6), st.integers(1, 4))
def test_padded_prefix_reinterns_stably(fields, levels):
    it = TagInterner()
    padded = tag_prefix(it.intern(fields), levels)
    again = tag_prefix(it.intern(padded), levels)
    assert padded == again and len(padded) == levels


def test_sentence_text_and_spans():
    it = TagInterner()
    n = it.intern(["n"])
    s = AnnotatedSentence([Morpheme("ab", n), Morpheme("c", n)])
    assert s.text == "abc"
    assert [(i, j) for i, j, _ in s.spans()] == [(0, 2), (2, 3)]
    with pytest.raises(FormatError):
        Morpheme("", n)


def test_pattern_key_depth_and_entry_shift_bounds():
    it = TagInterner()
    t = it.intern(["t"])
    assert PatternKey("abc").depth == 3
    assert PatternKey("abc", t).depth == 4
    PatternEntry(PatternKey("ab"), 2, t)
    with pytest.raises(ValueError):
        PatternEntry(PatternKey("ab"), 3, t)
    with pytest.raises(ValueError):
        PatternEntry(PatternKey("ab"), 0, t)
    with pytest.raises(ValueError):
        PatternKey("")
