"""Command-line entry point: ``patmorph {train,tag,eval,bench}``.

File formats
  corpus      one morpheme per line as ``surface<TAB>f1,f2,...``; each
              sentence ends with a line holding ``EOS``.  UTF-8.
  dictionary  CSV lines ``surface,f1,f2,...``; a surface containing a comma
              is double-quoted with inner quotes doubled.
  raw input   one sentence per line (``tag`` and ``bench`` input).
  model       binary file written by ``train``.

Exit status: 0 success, 1 usage error, 2 data or model format error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import io
import logging
import sys
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from typing import BinaryIO, Sequence

from .core import PatmorphError
from .evaluate import GRANULARITIES, bench, score
from .ingest import open_text, read_corpus, read_dictionary
from .model import CompiledModel
from .tagger import DEFAULT_BLOCK_SIZE, MIN_BLOCK_SIZE, NullSink, tag_sentence, tag_stream
from .trainer import train, write_patterns

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3

log = logging.getLogger("patmorph")

_SHARD_BYTES = 1 << 22


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _block_size(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if n < MIN_BLOCK_SIZE:
        raise argparse.ArgumentTypeError(f"block size must be >= {MIN_BLOCK_SIZE}")
    return n


def _positive(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="patmorph",
        description="Pattern-based morphological analyzer.",
        epilog=__doc__.split("\n", 2)[2],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    t = sub.add_parser("train", help="induce patterns from an annotated corpus")
    t.add_argument("--corpus", required=True, help="annotated training corpus")
    t.add_argument("--dict", dest="dictionary", help="optional CSV dictionary")
    t.add_argument("--model", required=True, help="where to write the binary model")
    t.add_argument("--dump-patterns", metavar="FILE", help="also write accepted patterns as TSV")
    t.add_argument("--no-prune", action="store_true", help="keep redundant patterns")

    g = sub.add_parser("tag", help="segment and tag raw sentences")
    g.add_argument("--model", required=True)
    g.add_argument("--input", help="raw sentences (default: stdin)")
    g.add_argument("--output", help="annotated output (default: stdout)")
    g.add_argument("--block-size", type=_block_size, default=DEFAULT_BLOCK_SIZE, help="output block bytes")
    g.add_argument("--workers", type=_positive, default=1, help="tagging threads (output is identical)")

    e = sub.add_parser("eval", help="score a system corpus against gold")
    e.add_argument("--gold", required=True)
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--system", help="annotated system output")
    src.add_argument("--model", help="tag the gold text with this model instead")
    e.add_argument(
        "--granularity", choices=GRANULARITIES, action="append",
        help="restrict to one granularity (repeatable; default: all)",
    )
    e.add_argument("--record", action="store_true", help="print a single key=value line")

    b = sub.add_parser("bench", help="time tagging of repeated input")
    b.add_argument("--model", required=True)
    b.add_argument("--input", required=True)
    b.add_argument("--repeat", type=_positive, default=1, help="copies of the input to tag")
    b.add_argument("--trials", type=_positive, default=3, help="runs; the median is reported")
    b.add_argument("--output", help="write tagged output here instead of discarding it")
    b.add_argument("--block-size", type=_block_size, default=DEFAULT_BLOCK_SIZE)
    b.add_argument("--record", action="store_true", help="print a single key=value line")
    return p


def _cmd_train(args, out) -> None:
    with open_text(args.corpus) as f:
        corpus = read_corpus(f)
    dictionary = None
    if args.dictionary:
        with open_text(args.dictionary) as f:
            dictionary = read_dictionary(f, corpus.interner)
    result = train(corpus, dictionary, prune=not args.no_prune, keep_patterns=bool(args.dump_patterns))
    model = result.model if args.dump_patterns else result
    model.save(args.model)
    if args.dump_patterns:
        with open_text(args.dump_patterns, "w") as f:
            write_patterns(result.patterns, f)
    print(
        f"patterns {model.num_patterns}  chars {model.symbols.num_chars}  tags {model.symbols.num_tags}"
        f"  trie slots {model.trie.size}",
        file=out,
    )


def _shards(source: BinaryIO):
    rest = b""
    while True:
        chunk = source.read(_SHARD_BYTES)
        if not chunk:
            if rest:
                yield rest
            return
        data = rest + chunk
        cut = data.rfind(b"\n") + 1
        if cut == 0:
            rest = data
            continue
        rest = data[cut:]
        yield data[:cut]


def _tag_parallel(source: BinaryIO, sink: BinaryIO, model: CompiledModel, block_size: int, workers: int) -> None:
    # shards end on line boundaries, so concatenating per-shard output in
    # submission order reproduces the single-threaded bytes
    def work(shard: bytes) -> bytes:
        buf = io.BytesIO()
        tag_stream(io.BytesIO(shard), buf, model, block_size)
        return buf.getvalue()

    with ThreadPoolExecutor(workers) as pool:
        pending: deque = deque()
        for shard in _shards(source):
            pending.append(pool.submit(work, shard))
            if len(pending) >= 2 * workers:
                sink.write(pending.popleft().result())
        while pending:
            sink.write(pending.popleft().result())
    sink.flush()


def _cmd_tag(args, out) -> None:
    model = CompiledModel.load(args.model)
    source = open(args.input, "rb") if args.input else sys.stdin.buffer
    sink = open(args.output, "wb") if args.output else sys.stdout.buffer
    try:
        if args.workers > 1:
            _tag_parallel(source, sink, model, args.block_size, args.workers)
        else:
            tag_stream(source, sink, model, args.block_size)
    finally:
        if args.input:
            source.close()
        if args.output:
            sink.close()


def _cmd_eval(args, out) -> None:
    with open_text(args.gold) as f:
        gold = read_corpus(f)
    if args.system:
        with open_text(args.system) as f:
            system = read_corpus(f, gold.interner).sentences
    else:
        model = CompiledModel.load(args.model)
        system = [tag_sentence(s.text, model) for s in gold]
    report = score(gold.sentences, system, args.granularity or GRANULARITIES)
    print(report.to_record() if args.record else report.to_text(), file=out)


def _cmd_bench(args, out) -> None:
    model = CompiledModel.load(args.model)
    with open(args.input, "rb") as f:
        data = f.read()
    if args.output:
        def sink_factory():
            return open(args.output, "wb")
    else:
        sink_factory = NullSink
    report = bench(data, model, args.repeat, args.trials, sink_factory, args.block_size)
    print(report.to_record() if args.record else report.to_text(), file=out)


_COMMANDS = {"train": _cmd_train, "tag": _cmd_tag, "eval": _cmd_eval, "bench": _cmd_bench}


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    """Run one subcommand and return its exit status."""
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=err)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=err, format="%(name)s: %(message)s")
    try:
        _COMMANDS[args.command](args, out)
    except OSError as exc:
        print(f"patmorph {args.command}: I/O error: {exc}", file=err)
        return EXIT_IO
    except (PatmorphError, ValueError) as exc:
        print(f"patmorph {args.command}: {type(exc).__name__}: {exc}", file=err)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
