from patmorph.ingest import read_corpus, read_dictionary
from patmorph.synthetic import SyntheticLanguage, main


def test_generation_is_seeded():
    a = SyntheticLanguage(seed=4, lexicon_size=500)
    b = SyntheticLanguage(seed=4, lexicon_size=500)
    assert a.dictionary_lines() == b.dictionary_lines()
    assert a.raw_lines(20, seed=9) == b.raw_lines(20, seed=9)
    assert a.raw_lines(20, seed=9) != a.raw_lines(20, seed=10)


def test_files_written_by_main_parse(tmp_path):
    main([str(tmp_path), "--train", "30", "--test", "10", "--lexicon", "300"])
    with open(tmp_path / "train.txt", encoding="utf-8") as f:
        corpus = read_corpus(f)
    with open(tmp_path / "dict.csv", encoding="utf-8") as f:
        d = read_dictionary(f, corpus.interner)
    assert len(corpus) == 30
    assert len(d) == 300
    assert len((tmp_path / "test.raw").read_text(encoding="utf-8").splitlines()) == 10
