"""Vocabulary construction and the tab-separated vocabulary file format.

A vocabulary holds four kinds of entries: the five reserved specials
(ids 0-4), the single-character backbone, multi-character words for the
lattice matcher, and optional word-pieces for non-Chinese spans.

File format: one entry per line, ``surface<TAB>frequency<TAB>flag``.
Specials are implicit; ids follow line order starting at 5.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

from .normalize import normalize_text

log = logging.getLogger(__name__)

CHARACTER = "character"
WORD = "word"
WORD_PIECE = "word-piece"
SPECIAL = "special"

_FLAGS = (CHARACTER, WORD, WORD_PIECE, SPECIAL)

SPECIAL_SURFACES = ("[CLS]", "[SEP]", "[MASK]", "[UNK]", "[PAD]")
CLS_ID, SEP_ID, MASK_ID, UNK_ID, PAD_ID = range(5)


@dataclass(frozen=True)
class VocabEntry:
    surface: str
    freq: int
    flag: str


class Vocabulary:
    """Immutable id <-> surface table. Safe to share across workers."""

    def __init__(self, entries: Iterable[VocabEntry]):
        self.entries: list[VocabEntry] = [
            VocabEntry(s, 0, SPECIAL) for s in SPECIAL_SURFACES
        ]
        self._index: dict[str, int] = {
            e.surface: i for i, e in enumerate(self.entries)
        }
        for e in entries:
            if e.flag not in _FLAGS:
                raise ValueError(f"unknown vocabulary flag: {e.flag!r}")
            if e.surface in self._index:
                continue
            self._index[e.surface] = len(self.entries)
            self.entries.append(e)
        self._max_match_len = max(
            (len(e.surface) for e in self.entries if e.flag in (WORD, WORD_PIECE)),
            default=0,
        )

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, surface: str) -> bool:
        return surface in self._index

    def id_of(self, surface: str) -> int:
        return self._index[surface]

    def id_or_unk(self, surface: str) -> int:
        return self._index.get(surface, UNK_ID)

    def flag_of(self, surface: str) -> str | None:
        i = self._index.get(surface)
        return None if i is None else self.entries[i].flag

    def surface_of(self, token_id: int) -> str:
        return self.entries[token_id].surface

    @property
    def max_match_len(self) -> int:
        """Longest word/word-piece surface; bounds greedy matching."""
        return self._max_match_len

    def words(self) -> list[str]:
        """Multi-character word surfaces, for the pattern matcher."""
        return [
            e.surface
            for e in self.entries
            if e.flag == WORD and len(e.surface) >= 2
        ]

    def counts_by_flag(self) -> dict[str, int]:
        c = Counter(e.flag for e in self.entries)
        return {flag: c.get(flag, 0) for flag in _FLAGS}

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for e in self.entries[len(SPECIAL_SURFACES):]:
                f.write(f"{e.surface}\t{e.freq}\t{e.flag}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        entries = []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3 or parts[2] not in _FLAGS:
                    log.warning("skipping malformed vocab line %d: %r", lineno, line)
                    continue
                if parts[2] == SPECIAL:
                    continue
                entries.append(VocabEntry(parts[0], int(parts[1]), parts[2]))
        return cls(entries)


def build_vocabulary(
    corpus: Iterable[str | bytes],
    max_words: int,
    words: Mapping[str, int] | Iterable[str] | None = None,
    pieces: Mapping[str, int] | Iterable[tuple[str, int]] | None = None,
    stats: dict | None = None,
) -> Vocabulary:
    """Character backbone from the corpus plus the top `max_words` words.

    `words` is the externally supplied word-frequency source (a mapping,
    or bare surfaces whose frequency is then counted as substring
    occurrences over the corpus). Ties break by (frequency desc, surface
    asc). Malformed byte records are rejected with a diagnostic, never
    fatal. `pieces` optionally supplies a word-piece inventory for
    non-Chinese spans.
    """
    if max_words < 0:
        raise ValueError("max_words must be >= 0")
    char_freq: Counter[str] = Counter()
    texts: list[str] = []
    rejected = 0
    for raw in corpus:
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                rejected += 1
                log.warning("rejecting undecodable corpus record")
                continue
        text = normalize_text(raw)
        if not text:
            continue
        texts.append(text)
        char_freq.update(ch for ch in text if ch != " ")
    if stats is not None:
        stats["rejected_records"] = rejected

    word_freq: dict[str, int] = {}
    if words is not None:
        if isinstance(words, Mapping):
            items = words.items()
        else:
            surfaces = [normalize_text(w) for w in words]
            items = [
                (w, sum(t.count(w) for t in texts)) for w in surfaces if w
            ]
        for surface, freq in items:
            surface = normalize_text(surface)
            if len(surface) < 2 or " " in surface:
                continue
            word_freq[surface] = word_freq.get(surface, 0) + int(freq)

    ranked = sorted(word_freq.items(), key=lambda kv: (-kv[1], kv[0]))
    kept_words = ranked[:max_words]

    entries = [
        VocabEntry(ch, freq, CHARACTER)
        for ch, freq in sorted(char_freq.items(), key=lambda kv: (-kv[1], kv[0]))
    ]
    entries += [VocabEntry(w, f, WORD) for w, f in kept_words]
    if pieces is not None:
        piece_items = (
            pieces.items() if isinstance(pieces, Mapping) else list(pieces)
        )
        entries += [
            VocabEntry(p, int(f), WORD_PIECE)
            for p, f in sorted(piece_items, key=lambda kv: (-kv[1], kv[0]))
        ]
    return Vocabulary(entries)
