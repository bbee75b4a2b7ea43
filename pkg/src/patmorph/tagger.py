"""Greedy pattern decoding and block-buffered streaming output.

:func:`tag_sentence` is the readable reference decoder working on ``str``.
:func:`tag_stream` runs the same decision procedure in a compiled kernel
directly over UTF-8 bytes, writing morphemes into a preallocated output
buffer that is flushed to the sink in fixed-size blocks.  Both produce
identical output for valid UTF-8 input.
"""

from __future__ import annotations

import io
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import BinaryIO, Iterator

import numba
import numpy as np

from .core import BOS, AnnotatedSentence, Morpheme, PatmorphError, Tag
from .ingest import format_sentence
from .model import CompiledModel
from .trie import longest_match
from .unknown import KATAKANA_MAX_BYTES, CharClass, UnknownTagTable, classify_code_point

DEFAULT_BLOCK_SIZE = 256 * 1024
MIN_BLOCK_SIZE = 4096
_READ_SIZE = 1 << 20


class StreamIOError(PatmorphError, OSError):
    """Read or write failure while streaming, with the position reached."""


def _utf8_len(ch: str) -> int:
    cp = ord(ch)
    if cp < 0x80:
        return 1
    if cp < 0x800:
        return 2
    if cp < 0x10000:
        return 3
    return 4


def unknown_word_scan(text: str, start: int, prev_tag: Tag, table: UnknownTagTable) -> tuple[int, Tag]:
    """Group a run of same-class characters into one unknown word."""
    cls = classify_code_point(ord(text[start]))
    shift = 1
    if cls != CharClass.OTHER:
        n = len(text)
        nbytes = _utf8_len(text[start])
        j = start + 1
        while j < n and classify_code_point(ord(text[j])) == cls:
            if cls == CharClass.KATAKANA:
                b = _utf8_len(text[j])
                if nbytes + b > KATAKANA_MAX_BYTES:
                    break
                nbytes += b
            j += 1
        shift = j - start
    return shift, table.lookup(prev_tag, CharClass(cls))


def tag_sentence(text: str, model: CompiledModel) -> AnnotatedSentence:
    symbols, trie, unknown = model.symbols, model.trie, model.unknown
    _, _, out_shift, out_tag = trie.lists()
    tags = symbols.tags
    bos_index = symbols.num_tags
    morphemes = []
    prev = BOS
    prev_index = bos_index
    i = 0
    n = len(text)
    while i < n:
        slot = longest_match(text, i, prev_index, trie, symbols)
        if slot >= 0:
            shift = out_shift[slot]
            tag = tags[out_tag[slot]]
        else:
            shift, tag = unknown_word_scan(text, i, prev, unknown)
        morphemes.append(Morpheme(text[i : i + shift], tag))
        i += shift
        prev = tag
        prev_index = tag.id
    return AnnotatedSentence(morphemes)


@numba.njit(cache=True, inline="always")
def _decode(data, p, end):
    b0 = np.int64(data[p])
    if b0 < 0x80:
        return b0, 1
    if b0 < 0xC2:
        return -1, 1
    if b0 < 0xE0:
        n = 2
        cp = b0 & 0x1F
    elif b0 < 0xF0:
        n = 3
        cp = b0 & 0x0F
    elif b0 < 0xF5:
        n = 4
        cp = b0 & 0x07
    else:
        return -1, 1
    if p + n > end:
        return -1, 1
    for q in range(1, n):
        b = np.int64(data[p + q])
        if (b & 0xC0) != 0x80:
            return -1, 1
        cp = (cp << 6) | (b & 0x3F)
    return cp, n


@numba.njit(cache=True, inline="always")
def _classify(cp):
    if (0x30 <= cp <= 0x39) or (0xFF10 <= cp <= 0xFF19):
        return 0
    if (0x41 <= cp <= 0x5A) or (0x61 <= cp <= 0x7A) or (0xFF21 <= cp <= 0xFF3A) or (0xFF41 <= cp <= 0xFF5A):
        return 1
    if (0x30A1 <= cp <= 0x30FA) or cp == 0x30FC:
        return 2
    return 3


_HAS_TAG_CHILD = 1 << 30
_TAG_MASK = _HAS_TAG_CHILD - 1


@numba.njit(cache=True)
def _pack_units(base, check, out_shift, out_tag, tag_base, sym_bytes):
    """Interleave the trie into one row per slot for cache locality.

    Row layout: ``base``, ``check``, ``shift | shift_bytes << 16`` (0 for
    non-accepting slots) and ``tag + 1`` with a flag bit set on nodes that
    have at least one previous-tag child.
    """
    n = len(base)
    units = np.zeros((n, 4), np.int32)
    chain = np.empty(n + 1, np.int64)
    for s in range(n):
        units[s, 0] = base[s]
        units[s, 1] = check[s]
    for s in range(1, n):
        p = check[s]
        if p >= 0 and s - base[p] >= tag_base:
            units[p, 3] |= _HAS_TAG_CHILD
    for s in range(n):
        k = out_shift[s]
        if k == 0:
            continue
        # character symbols on the root path, root first
        depth = 0
        x = s
        while x != 0:
            p = check[x]
            sym = x - base[p]
            if sym < tag_base:
                chain[depth] = sym
                depth += 1
            x = p
        nbytes = 0
        for j in range(k):
            nbytes += sym_bytes[chain[depth - 1 - j]]
        if k > 0x7FFF or nbytes > 0x7FFF:
            return units, False
        units[s, 2] = k | (nbytes << 16)
        units[s, 3] |= out_tag[s] + 1
    return units, True


@numba.njit(cache=True, nogil=True)
def _tag_block(
    data, pos, end, final,
    units, cp2id, tag_base, bos_index,
    tag_bytes, tag_off, max_tag, unk_table,
    out, out_pos, flush_at,
):
    """Tag complete lines of ``data[pos:end]`` into ``out``.

    Stops at the first incomplete line (unless ``final``), when ``out_pos``
    reaches ``flush_at``, or when the next line might not fit.  Returns
    ``(pos, out_pos, sentences, chars, need)``; ``need > 0`` means the next
    line needs that many free output bytes.
    """
    n_units = len(units)
    n_cp = len(cp2id)
    cap = len(out)
    sentences = 0
    chars = 0
    while pos < end and out_pos < flush_at:
        e = pos
        while e < end and data[e] != 10:
            e += 1
        if e == end and not final:
            break
        # a CR before the newline is line-ending noise, not text
        le = e - 1 if e > pos and data[e - 1] == 13 else e
        bound = (le - pos) * (max_tag + 3) + 4
        if out_pos + bound > cap:
            return pos, out_pos, sentences, chars, bound
        prev = bos_index
        i = pos
        while i < le:
            tsym = tag_base + prev
            node = 0
            p = i
            best = -1
            while True:
                if units[node, 3] & _HAS_TAG_CHILD:
                    s = units[node, 0] + tsym
                    if s < n_units and units[s, 1] == node and units[s, 2] != 0:
                        best = s
                if p >= le:
                    break
                cp, nb = _decode(data, p, le)
                if cp < 0 or cp >= n_cp:
                    break
                sym = cp2id[cp]
                if sym < 0:
                    break
                s = units[node, 0] + sym
                if s >= n_units or units[s, 1] != node:
                    break
                node = s
                p += nb
                if units[node, 2] != 0:
                    best = node
            if best >= 0:
                packed = units[best, 2]
                shift = packed & 0xFFFF
                tag = (units[best, 3] & _TAG_MASK) - 1
                q = i + (packed >> 16)
            else:
                cp, nb = _decode(data, i, le)
                cls = 3 if cp < 0 else _classify(cp)
                q = i + nb
                shift = 1
                if cls != 3:
                    nbytes = nb
                    while q < le:
                        cp2, nb2 = _decode(data, q, le)
                        if cp2 < 0 or _classify(cp2) != cls:
                            break
                        if cls == 2 and nbytes + nb2 > 18:
                            break
                        nbytes += nb2
                        q += nb2
                        shift += 1
                tag = unk_table[prev, cls]
            for k in range(i, q):
                out[out_pos] = data[k]
                out_pos += 1
            out[out_pos] = 9
            out_pos += 1
            t0 = tag_off[tag]
            t1 = tag_off[tag + 1]
            for k in range(t0, t1):
                out[out_pos] = tag_bytes[k]
                out_pos += 1
            out[out_pos] = 10
            out_pos += 1
            chars += shift
            prev = tag
            i = q
        out[out_pos] = 69
        out[out_pos + 1] = 79
        out[out_pos + 2] = 83
        out[out_pos + 3] = 10
        out_pos += 4
        sentences += 1
        pos = e + 1 if e < end else e
    return pos, out_pos, sentences, chars, 0


class _KernelModel:
    """Flat arrays handed to the compiled kernel."""

    def __init__(self, model: CompiledModel):
        sym = model.symbols
        if model.unknown.global_default is None:
            raise PatmorphError("model has no unknown-word default tag; cannot tag")
        encoded = [t.feature_string().encode("utf-8") for t in sym.tags]
        self.tag_bytes = np.frombuffer(b"".join(encoded) or b"\0", np.uint8)
        self.tag_off = np.zeros(len(encoded) + 1, np.int64)
        np.cumsum([len(b) for b in encoded], out=self.tag_off[1:])
        self.max_tag = max((len(b) for b in encoded), default=0)
        self.unk_table, _, _ = model.unknown.arrays(sym.num_tags)
        sym_bytes = np.zeros(max(sym.num_chars, 1), np.int64)
        for ch, i in sym.char_to_id.items():
            sym_bytes[i] = _utf8_len(ch)
        trie = model.trie
        self.units, ok = _pack_units(trie.base, trie.check, trie.out_shift, trie.out_tag, sym.tag_id_base, sym_bytes)
        if not ok:
            raise PatmorphError("a pattern is too long for the compiled tagger (limit 32767 bytes)")
        self.args = (
            self.units,
            sym.cp2id,
            np.int64(sym.tag_id_base),
            np.int64(sym.num_tags),
            self.tag_bytes,
            self.tag_off,
            np.int64(self.max_tag),
            self.unk_table,
        )


def _kernel_model(model: CompiledModel) -> _KernelModel:
    km = model._kernel_args
    if km is None:
        km = model._kernel_args = _KernelModel(model)
    return km


@dataclass
class TagStats:
    sentences: int = 0
    characters: int = 0
    bytes_in: int = 0
    bytes_out: int = 0
    seconds: float = 0.0

    @property
    def sentences_per_second(self) -> float:
        return self.sentences / self.seconds if self.seconds > 0 else 0.0


class NullSink(io.RawIOBase):
    """Write target that discards everything (used for benchmarking)."""

    def writable(self) -> bool:
        return True

    def write(self, b) -> int:
        return len(b)


def _binary(stream, writing: bool):
    if isinstance(stream, io.TextIOBase):
        if hasattr(stream, "buffer"):
            if writing:
                stream.flush()
            return stream.buffer
        return _TextAdapter(stream)
    return stream


class _TextAdapter:
    def __init__(self, stream):
        self.stream = stream

    def read(self, n: int) -> bytes:
        return self.stream.read(n).encode("utf-8")

    def write(self, b) -> int:
        self.stream.write(bytes(b).decode("utf-8", "surrogateescape"))
        return len(b)

    def flush(self) -> None:
        self.stream.flush()


class BlockWriter:
    """Accumulates output and hands the sink exactly ``block_size`` bytes at a time."""

    def __init__(self, sink, block_size: int = DEFAULT_BLOCK_SIZE):
        if block_size < MIN_BLOCK_SIZE:
            raise ValueError(f"block size must be at least {MIN_BLOCK_SIZE} bytes")
        self.sink = sink
        self.block_size = block_size
        self.buf = np.empty(2 * block_size + 4096, np.uint8)
        self.pos = 0
        self.written = 0
        self.flushes = 0

    def ensure(self, free: int) -> None:
        if self.pos + free > len(self.buf):
            grown = np.empty(self.pos + free + self.block_size, np.uint8)
            grown[: self.pos] = self.buf[: self.pos]
            self.buf = grown

    def _emit(self, view) -> None:
        try:
            self.sink.write(view)
        except OSError as exc:
            raise StreamIOError(f"write failed after {self.written} output bytes: {exc}") from exc
        self.written += len(view)
        self.flushes += 1

    def drain(self) -> None:
        b = self.block_size
        start = 0
        while self.pos - start >= b:
            self._emit(memoryview(self.buf[start : start + b]))
            start += b
        if start:
            rest = self.pos - start
            self.buf[:rest] = self.buf[start : self.pos]
            self.pos = rest

    def close(self) -> None:
        self.drain()
        if self.pos:
            self._emit(memoryview(self.buf[: self.pos]))
            self.pos = 0
        flush = getattr(self.sink, "flush", None)
        if flush is not None:
            flush()


def tag_stream(
    source: BinaryIO,
    sink: BinaryIO,
    model: CompiledModel,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> TagStats:
    """Tag newline-delimited raw sentences from ``source`` into ``sink``."""
    km = _kernel_model(model)
    src = _binary(source, writing=False)
    writer = BlockWriter(_binary(sink, writing=True), block_size)
    stats = TagStats()
    leftover = b""
    t0 = time.perf_counter()
    while True:
        try:
            chunk = src.read(_READ_SIZE)
        except OSError as exc:
            raise StreamIOError(f"read failed after {stats.bytes_in} input bytes: {exc}") from exc
        final = not chunk
        stats.bytes_in += len(chunk)
        buf = leftover + chunk if leftover else chunk
        data = np.frombuffer(buf, np.uint8)
        pos, end = 0, len(data)
        while True:
            pos, out_pos, ns, nc, need = _tag_block(
                data, pos, end, final, *km.args, writer.buf, writer.pos, block_size
            )
            writer.pos = out_pos
            stats.sentences += ns
            stats.characters += nc
            if need:
                writer.drain()
                writer.ensure(need)
            elif out_pos >= block_size:
                writer.drain()
            else:
                break
        leftover = buf[pos:]
        if final:
            break
    writer.close()
    stats.bytes_out = writer.written
    stats.seconds = time.perf_counter() - t0
    return stats


def tag_text(text: str, model: CompiledModel) -> str:
    """Tag a whole multi-line string through the streaming kernel."""
    out = io.BytesIO()
    tag_stream(io.BytesIO(text.encode("utf-8")), out, model)
    return out.getvalue().decode("utf-8")


def tag_lines_reference(lines: Iterator[str], model: CompiledModel) -> str:
    """Unbuffered per-sentence serialization via :func:`tag_sentence`."""
    return "".join(format_sentence(tag_sentence(line, model)) for line in lines)


@contextmanager
def allocation_counter():
    """Count compiled-runtime heap allocations made inside the block.

    Yields a dict whose ``"allocs"`` entry is filled in on exit.  Kernel
    calls must not allocate; this is the hook tests use to check it.
    """
    # numba has no public switch for allocation statistics; the runtime
    # module's toggles are stable across 0.57-0.66
    from numba.core.runtime import _nrt_python as nrt
    from numba.core.runtime import rtsys

    enabled = nrt.memsys_stats_enabled()
    if not enabled:
        nrt.memsys_enable_stats()
    before = rtsys.get_allocation_stats()
    result: dict = {}
    try:
        yield result
    finally:
        after = rtsys.get_allocation_stats()
        result["allocs"] = (after.alloc - before.alloc) + (after.mi_alloc - before.mi_alloc)
        result["frees"] = (after.free - before.free) + (after.mi_free - before.mi_free)
        if not enabled:
            nrt.memsys_disable_stats()


def run_kernel_once(data: bytes, model: CompiledModel, out: np.ndarray) -> tuple[int, int, int, int, int]:
    """Single kernel invocation over ``data`` (testing / profiling hook)."""
    km = _kernel_model(model)
    arr = np.frombuffer(data, np.uint8)
    return _tag_block(arr, 0, len(arr), True, *km.args, out, 0, len(out))
