"""Word-level precision/recall/F1 and throughput measurement."""

from __future__ import annotations

import io
import logging
import statistics
import sys
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import AnnotatedSentence, PatmorphError, tag_prefix
from .model import CompiledModel
from .tagger import DEFAULT_BLOCK_SIZE, NullSink, tag_stream

log = logging.getLogger(__name__)

GRANULARITIES = ("seg", "top1", "all4")
_LEVELS = {"seg": 0, "top1": 1, "all4": 4}


class AlignmentError(PatmorphError, ValueError):
    def __init__(self, message: str, index: int):
        self.index = index
        super().__init__(f"sentence {index}: {message}")


@dataclass
class Score:
    gold: int = 0
    system: int = 0
    matched: int = 0

    @property
    def precision(self) -> float:
        return self.matched / self.system if self.system else 0.0

    @property
    def recall(self) -> float:
        return self.matched / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass
class EvalReport:
    scores: dict[str, Score] = field(default_factory=dict)
    sentences: int = 0
    seconds: float | None = None
    sentences_per_second: float | None = None
    peak_memory_bytes: int | None = None

    def __getitem__(self, granularity: str) -> Score:
        return self.scores[granularity]

    def to_text(self) -> str:
        lines = [f"{'':6} {'P':>8} {'R':>8} {'F1':>8} {'matched':>9} {'system':>9} {'gold':>9}"]
        for g, s in self.scores.items():
            lines.append(
                f"{g:6} {100 * s.precision:8.2f} {100 * s.recall:8.2f} {100 * s.f1:8.2f}"
                f" {s.matched:9d} {s.system:9d} {s.gold:9d}"
            )
        if self.seconds is not None:
            lines.append(f"time {self.seconds:.3f}s  speed {self.sentences_per_second:,.0f} sent/s")
        if self.peak_memory_bytes is not None:
            lines.append(f"peak memory {self.peak_memory_bytes / 2**20:.2f} MiB")
        return "\n".join(lines)

    def to_record(self) -> str:
        items = [f"sentences={self.sentences}"]
        for g, s in self.scores.items():
            items += [
                f"{g}_p={s.precision:.6f}",
                f"{g}_r={s.recall:.6f}",
                f"{g}_f1={s.f1:.6f}",
                f"{g}_matched={s.matched}",
                f"{g}_system={s.system}",
                f"{g}_gold={s.gold}",
            ]
        if self.seconds is not None:
            items += [f"seconds={self.seconds:.6f}", f"sent_per_sec={self.sentences_per_second:.1f}"]
        if self.peak_memory_bytes is not None:
            items.append(f"peak_memory_bytes={self.peak_memory_bytes}")
        return " ".join(items)


def _keys(sentence: AnnotatedSentence, levels: int) -> set:
    if levels == 0:
        return {(i, j) for i, j, _ in sentence.spans()}
    return {(i, j, tuple(tag_prefix(t, levels))) for i, j, t in sentence.spans()}


def score(
    gold: Sequence[AnnotatedSentence],
    system: Sequence[AnnotatedSentence],
    granularity: str | Iterable[str] = GRANULARITIES,
) -> EvalReport:
    """Match words by character offsets (plus tag prefix for top1/all4)."""
    wanted = [granularity] if isinstance(granularity, str) else list(granularity)
    for g in wanted:
        if g not in _LEVELS:
            raise ValueError(f"unknown granularity {g!r}; choose from {', '.join(GRANULARITIES)}")
    gold = list(gold)
    system = list(system)
    if len(gold) != len(system):
        raise AlignmentError(
            f"gold has {len(gold)} sentences, system has {len(system)}", min(len(gold), len(system))
        )
    report = EvalReport({g: Score() for g in wanted}, len(gold))
    for idx, (gs, ss) in enumerate(zip(gold, system)):
        if gs.text != ss.text:
            raise AlignmentError("raw text differs between gold and system", idx)
        for g in wanted:
            s = report.scores[g]
            gk = _keys(gs, _LEVELS[g])
            sk = _keys(ss, _LEVELS[g])
            s.gold += len(gk)
            s.system += len(sk)
            s.matched += len(gk & sk)
    return report


class RepeatReader(io.RawIOBase):
    """Binary stream yielding ``data`` ``repeat`` times without materializing it."""

    def __init__(self, data: bytes, repeat: int):
        if data and not data.endswith(b"\n"):
            data += b"\n"
        self.data = data
        self.remaining = repeat if data else 0
        self.offset = 0

    def readable(self) -> bool:
        return True

    def readinto(self, b) -> int:
        filled = 0
        while self.remaining and filled < len(b):
            n = min(len(b) - filled, len(self.data) - self.offset)
            b[filled : filled + n] = self.data[self.offset : self.offset + n]
            filled += n
            self.offset += n
            if self.offset == len(self.data):
                self.offset = 0
                self.remaining -= 1
        return filled


def peak_memory_bytes() -> int | None:
    try:
        import resource
    except ImportError:
        log.warning("peak memory not measurable on this platform")
        return None
    rss = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    return rss if sys.platform == "darwin" else rss * 1024


@dataclass
class BenchReport:
    trials: list[float]
    sentences: int
    repeat: int
    peak_memory_bytes: int | None = None

    @property
    def seconds(self) -> float:
        return statistics.median(self.trials)

    @property
    def sentences_per_second(self) -> float:
        return self.sentences / self.seconds if self.seconds > 0 else 0.0

    def to_text(self) -> str:
        trials = ", ".join(f"{t:.3f}" for t in self.trials)
        text = (
            f"sentences {self.sentences:,} ({self.repeat} copies)\n"
            f"trials [s] {trials}\n"
            f"median {self.seconds:.3f}s  speed {self.sentences_per_second:,.0f} sent/s"
        )
        if self.peak_memory_bytes is not None:
            text += f"\npeak memory {self.peak_memory_bytes / 2**20:.2f} MiB"
        return text

    def to_record(self) -> str:
        rec = (
            f"sentences={self.sentences} repeat={self.repeat} median_seconds={self.seconds:.6f}"
            f" sent_per_sec={self.sentences_per_second:.1f}"
            f" trials={','.join(f'{t:.6f}' for t in self.trials)}"
        )
        if self.peak_memory_bytes is not None:
            rec += f" peak_memory_bytes={self.peak_memory_bytes}"
        return rec


def bench(
    data: bytes,
    model: CompiledModel,
    repeat: int = 1,
    trials: int = 3,
    sink_factory=NullSink,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> BenchReport:
    """Tag ``repeat`` concatenated copies of ``data``; median of ``trials`` runs."""
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    times = []
    sentences = 0
    for _ in range(trials):
        sink = sink_factory()
        try:
            stats = tag_stream(RepeatReader(data, repeat), sink, model, block_size)
        finally:
            close = getattr(sink, "close", None)
            if close is not None:
                close()
        times.append(stats.seconds)
        sentences = stats.sentences
    return BenchReport(times, sentences, repeat, peak_memory_bytes())
