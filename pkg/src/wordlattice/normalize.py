"""Text normalization applied before any lattice construction.

Rules: Latin letters are lower-cased (the vocabulary is uncased for
non-Chinese tokens), whitespace runs collapse to a single space, control
characters are stripped, and undecodable bytes are dropped with a
diagnostic count.
"""

from __future__ import annotations

import re
import unicodedata

_WS_RUN = re.compile(r"\s+")


def normalize_text(raw: str | bytes, stats: dict | None = None) -> str:
    """Normalize raw input to the canonical character string.

    `stats`, when given, accumulates a "bad_bytes" count for undecodable
    byte sequences (dropped, never replaced).
    """
    if isinstance(raw, bytes):
        text = raw.decode("utf-8", errors="ignore")
        if stats is not None:
            n_bad = len(raw) - len(text.encode("utf-8"))
            stats["bad_bytes"] = stats.get("bad_bytes", 0) + n_bad
    else:
        text = raw
    text = _WS_RUN.sub(" ", text)
    text = "".join(
        ch for ch in text if ch == " " or unicodedata.category(ch) != "Cc"
    )
    return text.strip().lower()


def is_cjk(ch: str) -> bool:
    """True for CJK unified ideographs (the "Chinese character" test)."""
    o = ord(ch)
    return (
        0x4E00 <= o <= 0x9FFF
        or 0x3400 <= o <= 0x4DBF
        or 0xF900 <= o <= 0xFAFF
    )


def is_non_chinese_alnum(ch: str) -> bool:
    """True for letters/digits outside the CJK ranges (word-piece territory)."""
    return ch.isalnum() and not is_cjk(ch)


def non_chinese_runs(text: str) -> list[tuple[int, int]]:
    """Maximal runs of non-Chinese letters/digits, as 1-based closed spans."""
    runs: list[tuple[int, int]] = []
    start = None
    for i, ch in enumerate(text):
        if is_non_chinese_alnum(ch):
            if start is None:
                start = i
        elif start is not None:
            runs.append((start + 1, i))
            start = None
    if start is not None:
        runs.append((start + 1, len(text)))
    return runs
