"""Multi-pattern matcher over vocabulary word surfaces.

The automaton (trie + failure links + materialized outputs) is built
once in Python; the per-text scan is the hot loop and runs either in the
compiled kernel (_acscan, built from Cython) or the pure-Python fallback
(_acscan_py), chosen at import. Set WORDLATTICE_PURE_PY=1 to force the
fallback. Both kernels report the identical span set; a text of length
N costs O(N + matches).
"""

from __future__ import annotations

import os
from collections import deque
from typing import Iterable, Sequence

import numpy as np

from . import _acscan_py
from .vocab import Vocabulary

try:
    from . import _acscan  # type: ignore[attr-defined]
except ImportError:
    _acscan = None


def default_backend() -> str:
    if _acscan is not None and not os.environ.get("WORDLATTICE_PURE_PY"):
        return "compiled"
    return "python"


class PatternMatcher:
    """Immutable Aho-Corasick automaton over word surfaces."""

    def __init__(self, patterns: Iterable[str], backend: str | None = None):
        backend = backend or default_backend()
        if backend not in ("compiled", "python"):
            raise ValueError(f"unknown matcher backend: {backend!r}")
        if backend == "compiled" and _acscan is None:
            raise RuntimeError("compiled matcher kernel is not available")
        self.backend = backend
        self._children: list[dict[int, int]] = [{}]
        self._fail: list[int] = [0]
        own_len: list[int] = [0]
        self.n_patterns = 0
        for pat in patterns:
            if not pat:
                continue
            node = 0
            for ch in pat:
                c = ord(ch)
                nxt = self._children[node].get(c)
                if nxt is None:
                    nxt = len(self._children)
                    self._children[node][c] = nxt
                    self._children.append({})
                    self._fail.append(0)
                    own_len.append(0)
                node = nxt
            if own_len[node] == 0:
                self.n_patterns += 1
            own_len[node] = len(pat)
        self._out: list[list[int]] = [[] for _ in self._children]
        queue: deque[int] = deque()
        for child in self._children[0].values():
            queue.append(child)
        while queue:
            node = queue.popleft()
            if own_len[node]:
                self._out[node].append(own_len[node])
            self._out[node].extend(self._out[self._fail[node]])
            for c, child in self._children[node].items():
                f = self._fail[node]
                while f and c not in self._children[f]:
                    f = self._fail[f]
                self._fail[child] = self._children[f].get(c, 0)
                if self._fail[child] == child:
                    self._fail[child] = 0
                queue.append(child)
        if backend == "compiled":
            self._flatten()

    def _flatten(self) -> None:
        n = len(self._children)
        starts = np.zeros(n + 1, dtype=np.int64)
        keys: list[int] = []
        vals: list[int] = []
        for i, trans in enumerate(self._children):
            for c in sorted(trans):
                keys.append(c)
                vals.append(trans[c])
            starts[i + 1] = len(keys)
        out_starts = np.zeros(n + 1, dtype=np.int64)
        out_lens: list[int] = []
        for i, lens in enumerate(self._out):
            out_lens.extend(lens)
            out_starts[i + 1] = len(out_lens)
        self._trans_start = starts
        self._trans_keys = np.asarray(keys, dtype=np.uint32)
        self._trans_vals = np.asarray(vals, dtype=np.int32)
        self._fail_arr = np.asarray(self._fail, dtype=np.int32)
        self._out_start = out_starts
        self._out_lens = np.asarray(out_lens, dtype=np.int32)

    def find_spans(self, text: str) -> list[tuple[int, int]]:
        """All (s, e) spans of text whose substring is a pattern, 1-based."""
        if not text:
            return []
        if self.backend == "python":
            return _acscan_py.scan(text, self._children, self._fail, self._out)
        codes = np.frombuffer(text.encode("utf-32-le"), dtype=np.uint32)
        s_arr, e_arr = _acscan.scan(
            codes,
            self._trans_start,
            self._trans_keys,
            self._trans_vals,
            self._fail_arr,
            self._out_start,
            self._out_lens,
        )
        return list(zip(s_arr.tolist(), e_arr.tolist()))


def compile_matcher(
    vocab: Vocabulary | Sequence[str], backend: str | None = None
) -> PatternMatcher:
    """Automaton over the vocabulary's multi-character word surfaces.

    Single characters never enter the automaton: the lattice backbone
    supplies them, which keeps one token per span without dedup races.
    """
    if isinstance(vocab, Vocabulary):
        patterns = vocab.words()
    else:
        patterns = [p for p in vocab if len(p) >= 2]
    return PatternMatcher(patterns, backend=backend)
