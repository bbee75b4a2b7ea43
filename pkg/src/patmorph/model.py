"""Compiled model container and its binary file format.

Layout (little-endian)::

    "JAGM" | version u32
    u64 len | symbol table: u32 C, C x (code point u32, id u32),
                           u32 T, T x (u32 nfields, nfields x (u32 len, utf-8))
    u64 len | base i64 x N, check i64 x N
    u64 len | outputs: u32 M, M x (node u32, shift u16, tag u32)
    u64 len | unknown table: default u32, u32 K, K x (class u8, tag u32),
                             u32 R, R x (prev u32, class u8, tag u32)
    crc32 u32 over every preceding byte

``prev == T`` in the unknown table denotes the BOS sentinel and
``0xFFFFFFFF`` marks an absent default.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import BOS, PatmorphError, Tag
from .trie import NO_TAG, ArrayTrie, SymbolTable, validate_trie
from .unknown import CharClass, UnknownTagTable

MAGIC = b"JAGM"
FORMAT_VERSION = 1
_NONE = 0xFFFFFFFF
_OUTPUT_DTYPE = np.dtype([("node", "<u4"), ("shift", "<u2"), ("tag", "<u4")])
_CHAR_DTYPE = np.dtype([("cp", "<u4"), ("id", "<u4")])


class ModelFormatError(PatmorphError):
    """The bytes do not form a valid model file."""


class BadMagicError(ModelFormatError):
    pass


class VersionMismatchError(ModelFormatError):
    pass


class TruncatedModelError(ModelFormatError):
    pass


class ChecksumMismatchError(ModelFormatError):
    pass


class CorruptModelError(ModelFormatError):
    """Checksum passed but the payload is structurally inconsistent."""


@dataclass(eq=False)
class CompiledModel:
    symbols: SymbolTable
    trie: ArrayTrie
    unknown: UnknownTagTable = field(default_factory=UnknownTagTable)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self._kernel_args = None
        self.metadata.setdefault("patterns", self.trie.num_patterns)
        self.metadata.setdefault("chars", self.symbols.num_chars)
        self.metadata.setdefault("tags", self.symbols.num_tags)
        self.metadata.setdefault("slots", self.trie.size)

    @property
    def tags(self) -> tuple[Tag, ...]:
        return self.symbols.tags

    @property
    def num_patterns(self) -> int:
        return self.metadata["patterns"]

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(dumps(self))

    @classmethod
    def load(cls, path: str | Path) -> "CompiledModel":
        return loads(Path(path).read_bytes())


def _pack_str(s: str) -> bytes:
    b = s.encode("utf-8")
    return struct.pack("<I", len(b)) + b


def _section(payload: bytes) -> bytes:
    return struct.pack("<Q", len(payload)) + payload


def dumps(model: CompiledModel) -> bytes:
    sym, trie, unk = model.symbols, model.trie, model.unknown
    num_tags = sym.num_tags

    chars = np.empty(sym.num_chars, _CHAR_DTYPE)
    for ch, i in sym.char_to_id.items():
        chars[i] = (ord(ch), i)
    parts = [struct.pack("<I", sym.num_chars), chars.tobytes(), struct.pack("<I", num_tags)]
    for tag in sym.tags:
        parts.append(struct.pack("<I", len(tag.fields)))
        parts.extend(_pack_str(f) for f in tag.fields)
    s1 = b"".join(parts)

    s2 = trie.base.astype("<i8").tobytes() + trie.check.astype("<i8").tobytes()

    nodes = np.flatnonzero(trie.out_shift)
    outs = np.empty(len(nodes), _OUTPUT_DTYPE)
    outs["node"] = nodes
    outs["shift"] = trie.out_shift[nodes]
    outs["tag"] = trie.out_tag[nodes]
    s3 = struct.pack("<I", len(nodes)) + outs.tobytes()

    default = _NONE if unk.global_default is None else unk.global_default.id
    parts = [struct.pack("<II", default, len(unk.by_class))]
    for cls in sorted(unk.by_class):
        parts.append(struct.pack("<BI", int(cls), unk.by_class[cls].id))
    rows = sorted(
        ((num_tags if prev.is_bos else prev.id), int(cls), tag.id)
        for (prev, cls), tag in unk.by_prev_and_class.items()
    )
    parts.append(struct.pack("<I", len(rows)))
    parts.extend(struct.pack("<IBI", *row) for row in rows)
    s4 = b"".join(parts)

    body = MAGIC + struct.pack("<I", FORMAT_VERSION) + b"".join(_section(s) for s in (s1, s2, s3, s4))
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    def __init__(self, buf: memoryview):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> memoryview:
        if n < 0 or self.pos + n > len(self.buf):
            raise TruncatedModelError(f"payload ends at byte {len(self.buf)}, needed {self.pos + n}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def u32(self) -> int:
        return self.unpack("<I")[0]

    def section(self) -> "_Reader":
        (n,) = self.unpack("<Q")
        return _Reader(self.take(n))

    def done(self, what: str) -> None:
        if self.pos != len(self.buf):
            raise CorruptModelError(f"{len(self.buf) - self.pos} trailing bytes in {what} section")


def loads(data: bytes) -> CompiledModel:
    buf = memoryview(bytes(data))
    if len(buf) < 4 or bytes(buf[:4]) != MAGIC:
        raise BadMagicError("not a model file (bad magic)")
    if len(buf) < 12:
        raise TruncatedModelError("model file shorter than header and checksum")
    (version,) = struct.unpack("<I", buf[4:8])
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"model format version {version}, expected {FORMAT_VERSION}")
    body = _Reader(buf[8:-4])
    (crc,) = struct.unpack("<I", buf[-4:])
    sections = [body.section() for _ in range(4)]
    if zlib.crc32(buf[:-4]) != crc:
        raise ChecksumMismatchError("checksum mismatch")
    body.done("file")
    try:
        return _parse(*sections)
    except (ValueError, IndexError, OverflowError, struct.error) as exc:
        if isinstance(exc, PatmorphError):
            raise
        raise CorruptModelError(str(exc)) from exc


_TRIE_PROBLEMS = {
    1: "trie has no root or a dangling parent link",
    2: "trie transition outside the symbol alphabet",
    3: "trie parent links form a cycle",
    4: "pattern shift exceeds its matched length",
}


def _parse(s1: _Reader, s2: _Reader, s3: _Reader, s4: _Reader) -> CompiledModel:
    n_chars = s1.u32()
    chars = np.frombuffer(s1.take(n_chars * _CHAR_DTYPE.itemsize), _CHAR_DTYPE)
    if n_chars and not np.array_equal(np.sort(chars["id"]), np.arange(n_chars)):
        raise CorruptModelError("char ids are not dense")
    char_to_id = {chr(int(cp)): int(i) for cp, i in sorted(chars.tolist(), key=lambda r: r[1])}
    if len(char_to_id) != n_chars:
        raise CorruptModelError("duplicate code point in symbol table")
    n_tags = s1.u32()
    tags = []
    for t in range(n_tags):
        nf = s1.u32()
        if nf == 0:
            raise CorruptModelError(f"tag {t} has no fields")
        fields = tuple(bytes(s1.take(s1.u32())).decode("utf-8") for _ in range(nf))
        tags.append(Tag(fields, t))
    s1.done("symbol table")
    symbols = SymbolTable(char_to_id, tuple(tags))

    if len(s2.buf) % 16 or not len(s2.buf):
        raise CorruptModelError("base/check section has bad length")
    n = len(s2.buf) // 16
    arr = np.frombuffer(s2.take(16 * n), "<i8")
    base64, check64 = arr[:n], arr[n:]
    if base64.min() < 0 or base64.max() >= 2**31 or check64.min() < -2 or check64.max() >= n:
        raise CorruptModelError("base/check values out of range")
    base = base64.astype(np.int32)
    check = check64.astype(np.int32)

    m = s3.u32()
    outs = np.frombuffer(s3.take(m * _OUTPUT_DTYPE.itemsize), _OUTPUT_DTYPE)
    s3.done("outputs")
    out_shift = np.zeros(n, np.int32)
    out_tag = np.full(n, NO_TAG, np.int32)
    if m:
        if outs["node"].max() >= n or outs["tag"].max() >= n_tags or outs["shift"].min() == 0:
            raise CorruptModelError("output table references out-of-range node, tag or shift")
        out_shift[outs["node"]] = outs["shift"]
        out_tag[outs["node"]] = outs["tag"]

    def tag_at(i: int) -> Tag:
        if i >= n_tags:
            raise CorruptModelError(f"unknown-word table references tag {i}")
        return tags[i]

    def cls_at(c: int) -> CharClass:
        if c >= len(CharClass):
            raise CorruptModelError(f"bad character class {c}")
        return CharClass(c)

    default, k = s4.unpack("<II")
    unknown = UnknownTagTable(None if default == _NONE else tag_at(default))
    for _ in range(k):
        c, t = s4.unpack("<BI")
        unknown.by_class[cls_at(c)] = tag_at(t)
    for _ in range(s4.u32()):
        prev, c, t = s4.unpack("<IBI")
        prev_tag = BOS if prev == n_tags else tag_at(prev)
        unknown.by_prev_and_class[(prev_tag, cls_at(c))] = tag_at(t)
    s4.done("unknown-word table")

    trie = ArrayTrie(base, check, out_shift, out_tag)
    problem = validate_trie(trie, symbols)
    if problem:
        raise CorruptModelError(_TRIE_PROBLEMS.get(problem, "invalid trie"))
    return CompiledModel(symbols, trie, unknown)
