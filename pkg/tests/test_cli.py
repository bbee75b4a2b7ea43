import io
import subprocess
import sys

import pytest

from patmorph.cli import run


TRAIN = (
    "きょう\tnoun,temporal,*,*\nは\tparticle,binding,*,*\n晴れ\tnoun,common,*,*\nEOS\n"
    "ねこ\tnoun,common,*,*\nが\tparticle,case,*,*\nいる\tverb,*,ichidan_verb,terminal\nEOS\n"
    "ねこ\tnoun,common,*,*\nは\tparticle,binding,*,*\n晴れ\tnoun,common,*,*\nEOS\n"
)
RAW = "きょうは晴れ\nねこがいる\nねこは晴れ\n"


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def files(tmp_path):
    corpus = tmp_path / "train.txt"
    corpus.write_text(TRAIN, encoding="utf-8")
    raw = tmp_path / "raw.txt"
    raw.write_text(RAW, encoding="utf-8")
    model = tmp_path / "m.bin"
    code, out, err = call("train", "--corpus", str(corpus), "--model", str(model))
    assert code == 0, err
    assert out.startswith("patterns ")
    return tmp_path, corpus, raw, model


def test_train_tag_eval_round_trip(files):
    tmp, corpus, raw, model = files
    tagged = tmp / "sys.txt"
    assert call("tag", "--model", str(model), "--input", str(raw), "--output", str(tagged))[0] == 0
    assert tagged.read_text(encoding="utf-8") == TRAIN
    code, out, _ = call("eval", "--gold", str(corpus), "--system", str(tagged), "--record")
    assert code == 0
    assert "seg_f1=1.000000" in out and "top1_f1=1.000000" in out and "all4_f1=1.000000" in out
    code, out, _ = call("eval", "--gold", str(corpus), "--model", str(model), "--granularity", "seg")
    assert code == 0 and "100.00" in out and "top1" not in out


def test_dictionary_and_pattern_dump(files):
    tmp, corpus, _, _ = files
    d = tmp / "dict.csv"
    d.write_text("いぬ,noun,common,*,*\n", encoding="utf-8")
    dump = tmp / "patterns.tsv"
    model = tmp / "m2.bin"
    code, _, err = call("train", "--corpus", str(corpus), "--dict", str(d), "--model", str(model), "--dump-patterns", str(dump))
    assert code == 0, err
    rows = [line.split("\t") for line in dump.read_text(encoding="utf-8").splitlines()]
    assert ["いぬ", "-", "2", "noun,common,*,*"] in rows
    assert all(len(r) == 4 for r in rows)


def test_workers_do_not_change_output(files):
    tmp, _, _, model = files
    big = tmp / "big.txt"
    big.write_text(RAW * 200_000, encoding="utf-8")
    one, four = tmp / "one.txt", tmp / "four.txt"
    assert call("tag", "--model", str(model), "--input", str(big), "--output", str(one))[0] == 0
    assert call("tag", "--model", str(model), "--input", str(big), "--output", str(four), "--workers", "4")[0] == 0
    assert one.read_bytes() == four.read_bytes()


def test_bench_record(files):
    _, _, raw, model = files
    code, out, _ = call("bench", "--model", str(model), "--input", str(raw), "--repeat", "1000", "--record")
    assert code == 0
    fields = dict(kv.split("=") for kv in out.split())
    assert fields["sentences"] == "3000" and fields["repeat"] == "1000"
    assert len(fields["trials"].split(",")) == 3


def test_corrupt_model_exits_2(files):
    tmp, _, raw, model = files
    bad = tmp / "bad.bin"
    bad.write_bytes(b"XXXX" + model.read_bytes()[4:])
    code, _, err = call("tag", "--model", str(bad), "--input", str(raw))
    assert code == 2
    assert "magic" in err.lower()


@pytest.mark.parametrize(
    "argv",
    [[], ["tag"], ["train", "--corpus", "x"], ["frobnicate"], ["tag", "--model", "m", "--block-size", "100"],
     ["eval", "--gold", "g"], ["bench", "--model", "m", "--input", "i", "--repeat", "0"]],
)
def test_usage_errors_exit_1(argv):
    code, _, err = call(*argv)
    assert code == 1
    assert err


def test_missing_files_exit_3(tmp_path):
    assert call("train", "--corpus", str(tmp_path / "nope.txt"), "--model", str(tmp_path / "m"))[0] == 3
    assert call("tag", "--model", str(tmp_path / "nope.bin"))[0] == 3


def test_bad_corpus_exits_2(tmp_path):
    corpus = tmp_path / "c.txt"
    corpus.write_text("no tab here\nEOS\n", encoding="utf-8")
    code, _, err = call("train", "--corpus", str(corpus), "--model", str(tmp_path / "m"))
    assert code == 2 and "line 1" in err


def test_stdin_stdout_pipeline(files):
    _, _, _, model = files
    proc = subprocess.run(
        [sys.executable, "-m", "patmorph", "tag", "--model", str(model)],
        input=RAW.encode(), capture_output=True, check=True,
    )
    assert proc.stdout.decode() == TRAIN
