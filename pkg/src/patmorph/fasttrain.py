"""Compiled training path.

Same decisions as the reference functions in :mod:`patmorph.trainer`, but
candidates live as nodes of an integer-keyed pointer trie whose node ``n``
is the surface path from the root (tag-extended keys are leaf children on a
tag symbol).  Counting, resolution, pruning and the final double-array
layout all run in compiled code.  The resulting model is byte-identical to
the reference path.
"""

from __future__ import annotations

import numba
import numpy as np
from numba import types
from numba.typed import Dict

from .core import AnnotatedSentence
from .trie import NO_TAG, ArrayTrie, SymbolTable, _place, empty_trie


@numba.njit(cache=True)
def _grow(a, n):
    b = np.empty(n, np.int64)
    b[: len(a)] = a
    return b


@numba.njit(cache=True)
def _lookup(d, key):
    if key in d:
        return d[key]
    return -1


@numba.njit(cache=True)
def _lookup0(d, key):
    if key in d:
        return d[key]
    return 0


@numba.njit(cache=True)
def _candidate_trie(text, sent_ptr, wlen, wtag, wsent_ptr, max_len, tag_base, bos, alphabet, out_mod, out_range,
                    dict_text, dict_ptr):
    children = Dict.empty(key_type=types.int64, value_type=types.int64)
    counts = Dict.empty(key_type=types.int64, value_type=types.int64)
    cap = 1 << 12
    parent = np.empty(cap, np.int64)
    symbol = np.empty(cap, np.int64)
    depth = np.empty(cap, np.int64)
    parent[0] = -1
    symbol[0] = -1
    depth[0] = 0
    n = 1
    for s in range(len(sent_ptr) - 1):
        end = sent_ptr[s + 1]
        i = sent_ptr[s]
        prev = bos
        for w in range(wsent_ptr[s], wsent_ptr[s + 1]):
            shift = wlen[w]
            tag = wtag[w]
            top = max(shift, min(max_len, end - i))
            out = shift * out_mod + tag
            node = 0
            for k in range(1, top + 1):
                sym = text[i + k - 1]
                key = node * alphabet + sym
                child = _lookup(children, key)
                if child < 0:
                    if n + 2 > cap:
                        cap *= 2
                        parent = _grow(parent, cap)
                        symbol = _grow(symbol, cap)
                        depth = _grow(depth, cap)
                    child = n
                    children[key] = n
                    parent[n] = node
                    symbol[n] = sym
                    depth[n] = k
                    n += 1
                node = child
                if k >= shift:
                    ck = node * out_range + out
                    counts[ck] = _lookup0(counts, ck) + 1
                    tsym = tag_base + prev
                    key = node * alphabet + tsym
                    tchild = _lookup(children, key)
                    if tchild < 0:
                        if n + 2 > cap:
                            cap *= 2
                            parent = _grow(parent, cap)
                            symbol = _grow(symbol, cap)
                            depth = _grow(depth, cap)
                        tchild = n
                        children[key] = n
                        parent[n] = node
                        symbol[n] = tsym
                        depth[n] = k
                        n += 1
                    ck = tchild * out_range + out
                    counts[ck] = _lookup0(counts, ck) + 1
            i += shift
            prev = tag
    n_dict = len(dict_ptr) - 1
    dict_node = np.empty(n_dict, np.int64)
    for d in range(n_dict):
        node = 0
        for p in range(dict_ptr[d], dict_ptr[d + 1]):
            sym = dict_text[p]
            key = node * alphabet + sym
            child = _lookup(children, key)
            if child < 0:
                if n + 2 > cap:
                    cap *= 2
                    parent = _grow(parent, cap)
                    symbol = _grow(symbol, cap)
                    depth = _grow(depth, cap)
                child = n
                children[key] = n
                parent[n] = node
                symbol[n] = sym
                depth[n] = p - dict_ptr[d] + 1
                n += 1
            node = child
        dict_node[d] = node
    ckeys = np.empty(len(counts), np.int64)
    cvals = np.empty(len(counts), np.int64)
    j = 0
    for k, v in counts.items():
        ckeys[j] = k
        cvals[j] = v
        j += 1
    return parent[:n].copy(), symbol[:n].copy(), depth[:n].copy(), children, dict_node, ckeys, cvals


@numba.njit(cache=True)
def _resolve(ckeys, cvals, n_nodes, out_mod, out_range):
    """Per node: most frequent shift (ties: smaller), then most frequent tag (ties: smaller id)."""
    order = np.argsort(ckeys)
    res_shift = np.zeros(n_nodes, np.int64)
    res_tag = np.full(n_nodes, -1, np.int64)
    m = len(order)
    j = 0
    while j < m:
        node = ckeys[order[j]] // out_range
        g_end = j
        while g_end < m and ckeys[order[g_end]] // out_range == node:
            g_end += 1
        best_shift = -1
        best_total = -1
        q = j
        while q < g_end:
            shift = (ckeys[order[q]] % out_range) // out_mod
            total = 0
            while q < g_end and (ckeys[order[q]] % out_range) // out_mod == shift:
                total += cvals[order[q]]
                q += 1
            if total > best_total:
                best_total = total
                best_shift = shift
        best_tag = -1
        best_count = -1
        for q in range(j, g_end):
            out = ckeys[order[q]] % out_range
            if out // out_mod == best_shift and cvals[order[q]] > best_count:
                best_count = cvals[order[q]]
                best_tag = out % out_mod
        res_shift[node] = best_shift
        res_tag[node] = best_tag
        j = g_end
    return res_shift, res_tag


@numba.njit(cache=True)
def _prune(order, parent, symbol, res_shift, res_tag, children, dict_node, dict_len, dict_tag,
           tag_base, n_tag_syms, alphabet, prune):
    n = len(parent)
    acc_shift = np.zeros(n, np.int64)
    acc_tag = np.full(n, -1, np.int64)
    head = np.full(n, -1, np.int64)
    nxt = np.full(n, -1, np.int64)
    stamp = np.zeros(n_tag_syms, np.int64)
    gen = 0
    seeded = np.zeros(len(dict_node), np.bool_)
    for d in range(len(dict_node)):
        x = dict_node[d]
        if res_shift[x] == 0:
            acc_shift[x] = dict_len[d]
            acc_tag[x] = dict_tag[d]
            seeded[d] = True
    for x in order:
        o_s = res_shift[x]
        o_t = res_tag[x]
        is_tagged = symbol[x] >= tag_base
        if prune:
            if is_tagged:
                c = parent[x]
                tsym = symbol[x]
                found = False
                rs = 0
                rt = 0
                if acc_shift[c] > 0:
                    found = True
                    rs = acc_shift[c]
                    rt = acc_tag[c]
                else:
                    a = parent[c]
                    while a > 0:
                        tc = _lookup(children, a * alphabet + tsym)
                        if tc >= 0 and acc_shift[tc] > 0:
                            found = True
                            rs = acc_shift[tc]
                            rt = acc_tag[tc]
                            break
                        if acc_shift[a] > 0:
                            found = True
                            rs = acc_shift[a]
                            rt = acc_tag[a]
                            break
                        a = parent[a]
                if found and rs == o_s and rt == o_t:
                    continue
            else:
                a = parent[x]
                k0 = -1
                while a > 0:
                    if acc_shift[a] > 0:
                        k0 = a
                        break
                    a = parent[a]
                if k0 > 0 and acc_shift[k0] == o_s and acc_tag[k0] == o_t:
                    redundant = True
                    gen += 1
                    b = parent[x]
                    while redundant:
                        y = head[b]
                        while y >= 0:
                            t = symbol[y] - tag_base
                            if stamp[t] != gen:
                                stamp[t] = gen
                                if (acc_shift[y] != o_s or acc_tag[y] != o_t) and _lookup(children, x * alphabet + symbol[y]) < 0:
                                    redundant = False
                                    break
                            y = nxt[y]
                        if b == k0:
                            break
                        b = parent[b]
                    if redundant:
                        continue
        acc_shift[x] = o_s
        acc_tag[x] = o_t
        if is_tagged:
            c = parent[x]
            nxt[x] = head[c]
            head[c] = x
    return acc_shift, acc_tag, seeded


@numba.njit(cache=True)
def _bfs_layout(parent, symbol, acc_shift):
    n = len(parent)
    keep = np.zeros(n, np.bool_)
    keep[0] = True
    for x in range(n):
        if acc_shift[x] > 0:
            y = x
            while not keep[y]:
                keep[y] = True
                y = parent[y]
    kept = np.flatnonzero(keep[1:]) + 1
    # sort kept nodes by (parent, symbol)
    keyv = np.empty(len(kept), np.int64)
    max_sym = 0
    for j in range(len(kept)):
        if symbol[kept[j]] > max_sym:
            max_sym = symbol[kept[j]]
    for j in range(len(kept)):
        keyv[j] = parent[kept[j]] * (max_sym + 1) + symbol[kept[j]]
    srt = kept[np.argsort(keyv)]
    start = np.full(n + 1, -1, np.int64)
    stop = np.full(n + 1, -1, np.int64)
    for j in range(len(srt)):
        p = parent[srt[j]]
        if start[p] < 0:
            start[p] = j
        stop[p] = j + 1
    total = len(srt) + 1
    bfs = np.empty(total, np.int64)
    child_ptr = np.zeros(total + 1, np.int64)
    child_sym = np.empty(total - 1, np.int64)
    first_child = np.empty(total, np.int64)
    bfs[0] = 0
    tail = 1
    e = 0
    for q in range(total):
        node = bfs[q]
        first_child[q] = tail
        if start[node] >= 0:
            for j in range(start[node], stop[node]):
                bfs[tail] = srt[j]
                tail += 1
                child_sym[e] = symbol[srt[j]]
                e += 1
        child_ptr[q + 1] = e
    return bfs, child_ptr, child_sym, first_child


def _ids(text: str, cp2id: np.ndarray) -> np.ndarray:
    cps = np.frombuffer(text.encode("utf-32-le", "surrogatepass"), np.uint32).astype(np.int64)
    return cp2id[cps].astype(np.int64)


class CompiledPatterns:
    """Result of the compiled path: trie plus enough state to list patterns."""

    def __init__(self, trie, parent, symbol, acc_shift, acc_tag, dict_node, seeded, num_candidates):
        self.trie = trie
        self.dict_node = dict_node
        self.num_candidates = num_candidates
        self.parent = parent
        self.symbol = symbol
        self.acc_shift = acc_shift
        self.acc_tag = acc_tag
        self.seeded = seeded


def compile_patterns(
    sentences: list[AnnotatedSentence],
    dict_surfaces: list[str],
    dict_tag_ids: list[int],
    symbols: SymbolTable,
    max_len: int,
    prune: bool = True,
) -> CompiledPatterns:
    cp2id = symbols.cp2id
    texts = [s.text for s in sentences]
    text = _ids("".join(texts), cp2id) if texts else np.zeros(0, np.int64)
    sent_ptr = np.zeros(len(texts) + 1, np.int64)
    np.cumsum([len(t) for t in texts], out=sent_ptr[1:])
    wlen = np.fromiter((len(m.surface) for s in sentences for m in s.morphemes), np.int64)
    wtag = np.fromiter((m.tag.id for s in sentences for m in s.morphemes), np.int64)
    wsent_ptr = np.zeros(len(texts) + 1, np.int64)
    np.cumsum([len(s.morphemes) for s in sentences], out=wsent_ptr[1:])
    dict_text = _ids("".join(dict_surfaces), cp2id) if dict_surfaces else np.zeros(0, np.int64)
    dict_len = np.fromiter((len(w) for w in dict_surfaces), np.int64, len(dict_surfaces))
    dict_ptr = np.zeros(len(dict_surfaces) + 1, np.int64)
    np.cumsum(dict_len, out=dict_ptr[1:])

    num_tags = symbols.num_tags
    out_mod = num_tags + 1
    max_shift = int(wlen.max()) if len(wlen) else 1
    out_range = (max_shift + 1) * out_mod

    parent, symbol, depth, children, dict_node, ckeys, cvals = _candidate_trie(
        text, sent_ptr, wlen, wtag, wsent_ptr, max_len, symbols.tag_id_base, num_tags,
        symbols.alphabet_size, out_mod, out_range, dict_text, dict_ptr,
    )
    n = len(parent)
    res_shift, res_tag = _resolve(ckeys, cvals, n, out_mod, out_range)
    cand = np.flatnonzero(res_shift)
    is_tag = (symbol[cand] >= symbols.tag_id_base).astype(np.int64)
    order = cand[np.lexsort((is_tag, depth[cand]))]
    acc_shift, acc_tag, seeded = _prune(
        order, parent, symbol, res_shift, res_tag, children, dict_node, dict_len,
        np.asarray(dict_tag_ids, np.int64), symbols.tag_id_base, num_tags + 1,
        symbols.alphabet_size, prune,
    )
    if not acc_shift.any():
        trie = empty_trie()
    else:
        bfs, child_ptr, child_sym, first_child = _bfs_layout(parent, symbol, acc_shift)
        base, check, slot_of = _place(child_ptr, child_sym, first_child, symbols.alphabet_size)
        out_shift = np.zeros(len(base), np.int32)
        out_tag = np.full(len(base), NO_TAG, np.int32)
        shifts = acc_shift[bfs]
        hit = shifts > 0
        out_shift[slot_of[hit]] = shifts[hit]
        out_tag[slot_of[hit]] = acc_tag[bfs][hit]
        trie = ArrayTrie(base, check, out_shift, out_tag)
    return CompiledPatterns(trie, parent, symbol, acc_shift, acc_tag, dict_node, seeded, len(cand))


def accepted_keys(cp: CompiledPatterns, symbols: SymbolTable, dict_surfaces: list[str]):
    """Accepted ``(compact key, (shift, tag))`` pairs: dictionary seeds, then candidates."""
    id_to_char = [""] * symbols.num_chars
    for ch, i in symbols.char_to_id.items():
        id_to_char[i] = ch
    tag_base = symbols.tag_id_base
    bos = symbols.num_tags
    parent, symbol = cp.parent, cp.symbol

    def surface(x: int) -> str:
        chars = []
        while x > 0:
            chars.append(id_to_char[symbol[x]])
            x = parent[x]
        return "".join(reversed(chars))

    out_seeds = []
    seeded_nodes = set()
    for d, w in enumerate(dict_surfaces):
        if cp.seeded[d]:
            node = int(cp.dict_node[d])
            seeded_nodes.add(node)
            out_seeds.append((w, (int(cp.acc_shift[node]), int(cp.acc_tag[node]))))
    rest = []
    for x in np.flatnonzero(cp.acc_shift).tolist():
        if x in seeded_nodes:
            continue
        out = (int(cp.acc_shift[x]), int(cp.acc_tag[x]))
        if symbol[x] >= tag_base:
            prev = int(symbol[x]) - tag_base
            rest.append(((surface(int(parent[x])), -1 if prev == bos else prev), out))
        else:
            rest.append((surface(x), out))
    return out_seeds, rest

