"""Character-wise double-array trie over frequency-ranked symbol ids.

Symbols are dense integers.  Characters take ids ``0 .. C-1`` in descending
corpus frequency; a tag with interner id ``t`` is the symbol ``C + t`` and the
sentence-start sentinel is ``C + T``.  A node ``n`` has a child on symbol
``s`` iff ``check[base[n] + s] == n``.

Matches are ranked by surface length first and, for equal surface length,
a key carrying a previous-tag symbol beats the plain key.  This equals trie
depth ordering except when a tagged key of surface ``k - 1`` meets a plain
key of surface ``k`` (both depth ``k``): that tie goes to the longer surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numba
import numpy as np

from .core import BOS, PatmorphError, PatternEntry, PatternKey, Tag

NO_TAG = -1


class TrieBuildError(PatmorphError, ValueError):
    pass


@dataclass(eq=False)
class SymbolTable:
    char_to_id: dict[str, int]
    tags: tuple[Tag, ...] = ()

    def __post_init__(self):
        self._cp2id: np.ndarray | None = None

    @property
    def num_chars(self) -> int:
        return len(self.char_to_id)

    @property
    def num_tags(self) -> int:
        return len(self.tags)

    @property
    def tag_id_base(self) -> int:
        return len(self.char_to_id)

    @property
    def bos_symbol(self) -> int:
        return len(self.char_to_id) + len(self.tags)

    @property
    def alphabet_size(self) -> int:
        return self.bos_symbol + 1

    def char_id(self, ch: str) -> int:
        return self.char_to_id.get(ch, -1)

    def tag_index(self, tag: Tag) -> int:
        """Compact tag index used by compiled code: ``T`` stands for BOS."""
        return len(self.tags) if tag.is_bos else tag.id

    def tag_symbol(self, tag: Tag) -> int:
        return self.tag_id_base + self.tag_index(tag)

    def tag_from_index(self, index: int) -> Tag:
        return BOS if index == len(self.tags) else self.tags[index]

    def encode(self, key: PatternKey) -> tuple[int, ...]:
        ids = []
        for ch in key.surface:
            sym = self.char_to_id.get(ch)
            if sym is None:
                raise TrieBuildError(f"character {ch!r} of pattern {str(key)!r} has no symbol id")
            ids.append(sym)
        if key.prev_tag is not None:
            ids.append(self.tag_symbol(key.prev_tag))
        return tuple(ids)

    @property
    def cp2id(self) -> np.ndarray:
        """Dense code-point to char-id table (``-1`` for unseen characters)."""
        if self._cp2id is None:
            top = max((ord(c) for c in self.char_to_id), default=0)
            arr = np.full(top + 1, -1, dtype=np.int32)
            for ch, i in self.char_to_id.items():
                arr[ord(ch)] = i
            self._cp2id = arr
        return self._cp2id


def build_symbol_table(char_frequencies: Mapping[str, int], num_tags: int | Sequence[Tag] = 0) -> SymbolTable:
    """Assign char ids by descending frequency, ties by ascending code point.

    ``num_tags`` may be the tag list itself (so the table can name tags) or
    just a count, in which case placeholder tags are synthesized.
    """
    ranked = sorted(char_frequencies.items(), key=lambda kv: (-kv[1], ord(kv[0])))
    char_to_id = {ch: i for i, (ch, _) in enumerate(ranked)}
    if isinstance(num_tags, int):
        tags = tuple(Tag((f"tag{i}",), i) for i in range(num_tags))
    else:
        tags = tuple(num_tags)
    return SymbolTable(char_to_id, tags)


@dataclass(eq=False)
class ArrayTrie:
    base: np.ndarray
    check: np.ndarray
    out_shift: np.ndarray
    out_tag: np.ndarray
    _lists: tuple | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.base)

    @property
    def num_patterns(self) -> int:
        return int(np.count_nonzero(self.out_shift))

    def lists(self) -> tuple[list, list, list, list]:
        # plain lists index ~3x faster than numpy scalars from Python
        if self._lists is None:
            self._lists = (
                self.base.tolist(),
                self.check.tolist(),
                self.out_shift.tolist(),
                self.out_tag.tolist(),
            )
        return self._lists

    def child(self, node: int, sym: int) -> int:
        """Child slot of ``node`` on ``sym`` or ``-1``."""
        slot = int(self.base[node]) + sym
        if 0 <= slot < len(self.check) and self.check[slot] == node:
            return slot
        return -1

    def output(self, node: int) -> tuple[int, int] | None:
        shift = int(self.out_shift[node])
        if shift == 0:
            return None
        return shift, int(self.out_tag[node])

    def items(self) -> list[tuple[tuple[int, ...], int, int]]:
        """Every ``(symbol path, shift, tag index)`` stored in the trie."""
        base, check, _, _ = self.lists()
        children: dict[int, list[tuple[int, int]]] = {}
        for slot, parent in enumerate(check):
            if parent >= 0 and slot != 0:
                children.setdefault(parent, []).append((slot - base[parent], slot))
        out = []
        stack: list[tuple[int, tuple[int, ...]]] = [(0, ())]
        while stack:
            node, path = stack.pop()
            if self.out_shift[node]:
                out.append((path, int(self.out_shift[node]), int(self.out_tag[node])))
            for sym, slot in children.get(node, ()):
                stack.append((slot, path + (sym,)))
        out.sort()
        return out


def empty_trie() -> ArrayTrie:
    check = np.full(1, -1, dtype=np.int32)
    check[0] = -2
    return ArrayTrie(
        np.zeros(1, dtype=np.int32),
        check,
        np.zeros(1, dtype=np.int32),
        np.full(1, NO_TAG, dtype=np.int32),
    )


_MAX_TRIALS = 8


@numba.njit(cache=True)
def _find_free(nxt, i):
    # smallest free slot >= i; occupied slots point past themselves
    r = i
    while nxt[r] != r:
        r = nxt[r]
    while nxt[i] != r:
        j = nxt[i]
        nxt[i] = r
        i = j
    return r


@numba.njit(cache=True)
def _place(child_ptr, child_sym, first_child, alphabet):
    """Place a BFS-numbered pointer trie into base/check arrays (first fit)."""
    n = len(first_child)
    cap = 2 * n + alphabet + 16
    base = np.zeros(cap, np.int32)
    check = np.full(cap, -1, np.int32)
    nxt = np.arange(cap + 1)
    fails = np.zeros(cap + 1, np.int32)
    check[0] = -2
    nxt[0] = 1
    slot_of = np.zeros(n, np.int64)
    for tn in range(n):
        lo = child_ptr[tn]
        hi = child_ptr[tn + 1]
        if lo == hi:
            continue
        k0 = child_sym[lo]
        kmax = child_sym[hi - 1]
        p = _find_free(nxt, k0 + 1)
        while True:
            if p >= cap:
                break
            cand = p - k0
            ok = True
            for j in range(lo + 1, hi):
                s = cand + child_sym[j]
                if s < cap and check[s] != -1:
                    ok = False
                    break
            if ok:
                break
            fails[p] += 1
            q = p
            p = _find_free(nxt, p + 1)
            if fails[q] >= _MAX_TRIALS:
                # stays free for direct hits but stops being a scan start
                nxt[q] = p
        b = p - k0
        need = b + kmax + 1
        if need > cap:
            new_cap = max(need, cap * 2)
            base2 = np.zeros(new_cap, np.int32)
            check2 = np.full(new_cap, -1, np.int32)
            nxt2 = np.arange(new_cap + 1)
            base2[:cap] = base
            check2[:cap] = check
            nxt2[:cap] = nxt[:cap]
            fails2 = np.zeros(new_cap + 1, np.int32)
            fails2[:cap] = fails[:cap]
            base, check, nxt, fails = base2, check2, nxt2, fails2
            cap = new_cap
        parent = slot_of[tn]
        base[parent] = b
        for j in range(lo, hi):
            s = b + child_sym[j]
            check[s] = parent
            nxt[s] = s + 1
            slot_of[first_child[tn] + (j - lo)] = s
    used = 1
    for i in range(cap):
        if check[i] != -1:
            used = i + 1
    return base[:used].copy(), check[:used].copy(), slot_of


@numba.njit(cache=True)
def _validate_arrays(base, check, out_shift, tag_base, alphabet):
    """0 if base/check form a rooted tree whose outputs fit their paths.

    Otherwise an error code: 1 bad root, 2 symbol outside the alphabet,
    3 cycle, 4 shift longer than the node's character depth.
    """
    n = len(check)
    if n == 0 or check[0] != -2:
        return 1
    depth = np.full(n, -1, np.int64)
    state = np.zeros(n, np.int8)
    depth[0] = 0
    state[0] = 2
    stack = np.empty(n, np.int64)
    for s in range(1, n):
        if check[s] < 0:
            continue
        if check[s] >= n:
            return 1
        top = 0
        x = s
        while state[x] == 0:
            state[x] = 1
            stack[top] = x
            top += 1
            p = check[x]
            if p < 0:
                return 1
            x = p
        if state[x] == 1:
            return 3
        while top > 0:
            top -= 1
            y = stack[top]
            p = check[y]
            sym = y - base[p]
            if sym < 0 or sym >= alphabet:
                return 2
            depth[y] = depth[p] + (1 if sym < tag_base else 0)
            state[y] = 2
    for s in range(n):
        if out_shift[s] != 0:
            if check[s] < 0 and s != 0:
                return 4
            if out_shift[s] < 0 or out_shift[s] > depth[s]:
                return 4
    return 0


def validate_trie(trie: "ArrayTrie", symbols: SymbolTable) -> int:
    return int(_validate_arrays(trie.base, trie.check, trie.out_shift, symbols.tag_id_base, symbols.alphabet_size))


def build_trie(entries: Iterable[PatternEntry], symbols: SymbolTable) -> ArrayTrie:
    """Compile pattern entries into a double-array trie."""
    keyed: dict[tuple[int, ...], tuple[int, int]] = {}
    for e in entries:
        path = symbols.encode(e.key)
        if path in keyed:
            raise TrieBuildError(f"duplicate pattern key {str(e.key)!r}")
        keyed[path] = (e.shift, symbols.tag_index(e.tag))
    return build_trie_from_paths(keyed, symbols.alphabet_size)


def build_trie_from_paths(keyed: Mapping[tuple[int, ...], tuple[int, int]], alphabet: int) -> ArrayTrie:
    if not keyed:
        return empty_trie()
    # pointer trie, nodes numbered in BFS order so children are contiguous
    kids: list[dict[int, int]] = [{}]
    value: dict[int, tuple[int, int]] = {}
    for path, out in keyed.items():
        node = 0
        for sym in path:
            nxt = kids[node].get(sym)
            if nxt is None:
                nxt = len(kids)
                kids[node][sym] = nxt
                kids.append({})
            node = nxt
        value[node] = out
    order = [0]
    renum = {0: 0}
    child_ptr = [0]
    child_sym: list[int] = []
    first_child: list[int] = []
    i = 0
    while i < len(order):
        old = order[i]
        first_child.append(len(order))
        for sym in sorted(kids[old]):
            renum[kids[old][sym]] = len(order)
            order.append(kids[old][sym])
            child_sym.append(sym)
        child_ptr.append(len(child_sym))
        i += 1
    base, check, slot_of = _place(
        np.asarray(child_ptr, np.int64),
        np.asarray(child_sym, np.int64),
        np.asarray(first_child, np.int64),
        alphabet,
    )
    out_shift = np.zeros(len(base), np.int32)
    out_tag = np.full(len(base), NO_TAG, np.int32)
    for old, (shift, tag) in value.items():
        slot = slot_of[renum[old]]
        out_shift[slot] = shift
        out_tag[slot] = tag
    return ArrayTrie(base, check, out_shift, out_tag)


def longest_match(text: str, start: int, prev_index: int, trie: ArrayTrie, symbols: SymbolTable) -> int:
    """Slot of the best accepting node for ``text[start:]`` or ``-1``."""
    base, check, out_shift, _ = trie.lists()
    n_check = len(check)
    get = symbols.char_to_id.get
    tag_sym = symbols.tag_id_base + prev_index
    best = -1
    node = 0
    i = start
    end = len(text)
    while True:
        slot = base[node] + tag_sym
        if slot < n_check and check[slot] == node and out_shift[slot]:
            best = slot
        if i >= end:
            break
        sym = get(text[i])
        if sym is None:
            break
        slot = base[node] + sym
        if slot >= n_check or check[slot] != node:
            break
        node = slot
        i += 1
        if out_shift[node]:
            best = node
    return best


def lookup_longest(
    text: str, start: int, prev_tag: Tag, trie: ArrayTrie, symbols: SymbolTable
) -> tuple[int, Tag] | None:
    """Longest pattern match at ``start`` given the previous word's tag."""
    slot = longest_match(text, start, symbols.tag_index(prev_tag), trie, symbols)
    if slot < 0:
        return None
    _, _, out_shift, out_tag = trie.lists()
    return out_shift[slot], symbols.tag_from_index(out_tag[slot])


def serialize_trie(trie: ArrayTrie, symbols: SymbolTable) -> bytes:
    from .model import CompiledModel, dumps

    return dumps(CompiledModel(symbols, trie))


def deserialize_trie(data: bytes) -> tuple[ArrayTrie, SymbolTable]:
    from .model import loads

    model = loads(data)
    return model.trie, model.symbols
