"""Word-lattice construction over character text.

A lattice is the character backbone (one token per position) united with
every vocabulary word match, as 1-based closed character spans. Maximal
runs of non-Chinese letters/digits are not mined for substrings; they
are tiled by greedy longest-match word-pieces with single-character
fallback.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator

from .errors import EmptyInput
from .matcher import PatternMatcher
from .normalize import non_chinese_runs, normalize_text
from .vocab import CHARACTER, WORD, WORD_PIECE, Vocabulary

GRAN_ORDER = (CHARACTER, WORD, WORD_PIECE, "special")


@dataclass(frozen=True)
class LatticeToken:
    """One character or word unit with its closed span [s, e]."""

    surface: str
    s: int
    e: int
    granularity: str
    id: int

    def __post_init__(self):
        if not (1 <= self.s <= self.e):
            raise ValueError(f"bad span ({self.s}, {self.e})")

    @property
    def span(self) -> tuple[int, int]:
        return (self.s, self.e)

    def overlaps(self, other: "LatticeToken") -> bool:
        return self.s <= other.e and other.s <= self.e


@dataclass
class Lattice:
    """All tokens of one text, span-deduplicated and sorted by (s, e)."""

    text: str
    tokens: list[LatticeToken]
    n_chars: int

    def __iter__(self) -> Iterator[LatticeToken]:
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def to_record(self) -> dict:
        return {
            "text": self.text,
            "tokens": [
                {
                    "surface": t.surface,
                    "s": t.s,
                    "e": t.e,
                    "gran": t.granularity,
                    "id": t.id,
                }
                for t in self.tokens
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), ensure_ascii=False, separators=(",", ":"))


def segment_non_chinese(span: str, vocab: Vocabulary) -> list[LatticeToken]:
    """Tile a non-Chinese alnum run with greedy longest-match pieces.

    In-vocabulary words and word-pieces are kept whole; positions with no
    covering entry fall back to single characters. Positions are local to
    the span (1-based).
    """
    tokens: list[LatticeToken] = []
    n = len(span)
    max_len = max(vocab.max_match_len, 1)
    i = 0
    while i < n:
        match = None
        for length in range(min(max_len, n - i), 1, -1):
            cand = span[i : i + length]
            flag = vocab.flag_of(cand)
            if flag in (WORD, WORD_PIECE):
                match = (cand, length, flag)
                break
        if match is not None:
            cand, length, flag = match
            tokens.append(
                LatticeToken(cand, i + 1, i + length, flag, vocab.id_of(cand))
            )
            i += length
        else:
            ch = span[i]
            tokens.append(LatticeToken(ch, i + 1, i + 1, CHARACTER, vocab.id_or_unk(ch)))
            i += 1
    return tokens


def build_lattice(
    text: str | bytes, matcher: PatternMatcher, vocab: Vocabulary
) -> Lattice:
    """Backbone plus all word matches for one text.

    Word matches that cross into a non-Chinese run (without containing
    the whole run) are discarded; the run keeps its word-piece tiling.
    Characters missing from the vocabulary map to UNK but keep their
    surface, so spans stay contiguous.
    """
    text = normalize_text(text)
    if not text:
        raise EmptyInput("text is empty after normalization")
    n = len(text)
    runs = non_chinese_runs(text)
    in_run = [False] * (n + 1)
    for rs, re_ in runs:
        for p in range(rs, re_ + 1):
            in_run[p] = True

    by_span: dict[tuple[int, int], LatticeToken] = {}
    for p in range(1, n + 1):
        if not in_run[p]:
            ch = text[p - 1]
            by_span[(p, p)] = LatticeToken(ch, p, p, CHARACTER, vocab.id_or_unk(ch))
    for rs, re_ in runs:
        for tok in segment_non_chinese(text[rs - 1 : re_], vocab):
            span = (tok.s + rs - 1, tok.e + rs - 1)
            by_span[span] = LatticeToken(
                tok.surface, span[0], span[1], tok.granularity, tok.id
            )

    for s, e in matcher.find_spans(text):
        if (s, e) in by_span:
            continue
        # partial overlap with a run means the match cuts through a
        # word-piece region; only matches containing the full run stand
        ok = True
        for rs, re_ in runs:
            if s <= re_ and rs <= e and not (s <= rs and re_ <= e):
                ok = False
                break
        if not ok:
            continue
        surface = text[s - 1 : e]
        by_span[(s, e)] = LatticeToken(surface, s, e, WORD, vocab.id_or_unk(surface))

    tokens = sorted(by_span.values(), key=lambda t: (t.s, t.e))
    return Lattice(text=text, tokens=tokens, n_chars=n)


def extract_char_chain(lat: Lattice) -> list[LatticeToken]:
    """The linear token chain used by labeling heads.

    Character tokens everywhere, except non-Chinese runs contribute their
    word-piece tiling as single units. Inside a run the lattice holds
    exactly the tiling tokens, so selection is by span membership.
    """
    runs = non_chinese_runs(lat.text)

    def in_run(s: int, e: int) -> bool:
        return any(rs <= s and e <= re_ for rs, re_ in runs)

    chain = [
        t
        for t in lat.tokens
        if in_run(t.s, t.e)
        or (t.s == t.e and t.granularity == CHARACTER and not in_run(t.s, t.s))
    ]
    chain.sort(key=lambda t: t.s)
    return chain
