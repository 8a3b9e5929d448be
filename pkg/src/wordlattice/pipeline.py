"""Corpus ingestion, sharding, and manifest plumbing for the CLI.

Documents are UTF-8 text files (one document per file, or blank-line
separated); sentences split on terminal punctuation plus newlines.
Manifests embed config echoes and input digests so every run is
auditable and reproducible byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Iterable

SENTENCE_ENDS = "。！？"  # 。 ！ ？


def split_sentences(line: str) -> list[str]:
    parts: list[str] = []
    buf: list[str] = []
    for ch in line:
        buf.append(ch)
        if ch in SENTENCE_ENDS:
            parts.append("".join(buf))
            buf = []
    if buf:
        parts.append("".join(buf))
    return [p for p in (x.strip() for x in parts) if p]


def _read_text(path: Path, stats: dict) -> str:
    raw = path.read_bytes()
    text = raw.decode("utf-8", errors="ignore")
    bad = len(raw) - len(text.encode("utf-8"))
    if bad:
        stats["bad_bytes"] = stats.get("bad_bytes", 0) + bad
    return text


def ingest_corpus(path, stats: dict | None = None) -> list[list[str]]:
    """Documents as sentence lists, in deterministic file/position order."""
    stats = stats if stats is not None else {}
    p = Path(path)
    if p.is_dir():
        files = sorted(q for q in p.rglob("*") if q.is_file())
    else:
        files = [p]
    docs: list[list[str]] = []
    for f in files:
        text = _read_text(f, stats)
        for block in text.replace("\r\n", "\n").split("\n\n"):
            sentences: list[str] = []
            for line in block.split("\n"):
                sentences.extend(split_sentences(line))
            if sentences:
                docs.append(sentences)
    stats["documents"] = stats.get("documents", 0) + len(docs)
    return docs


def iter_lines(path, stats: dict | None = None) -> Iterable[str]:
    """Raw lines of a file or of every file under a directory, in order."""
    stats = stats if stats is not None else {}
    p = Path(path)
    files = sorted(q for q in p.rglob("*") if q.is_file()) if p.is_dir() else [p]
    for f in files:
        yield from _read_text(f, stats).replace("\r\n", "\n").splitlines()


def shard_ranges(n_items: int, n_shards: int) -> list[tuple[int, int]]:
    """Contiguous balanced split, so concatenated shard output equals
    the single-shard stream."""
    n_shards = max(1, n_shards)
    q, r = divmod(n_items, n_shards)
    ranges = []
    start = 0
    for i in range(n_shards):
        size = q + (1 if i < r else 0)
        ranges.append((start, start + size))
        start += size
    return ranges


def shard_path(base, index: int, n_shards: int) -> str:
    if n_shards <= 1:
        return str(base)
    base = str(base)
    root, ext = os.path.splitext(base)
    return f"{root}.shard{index:03d}{ext}"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def input_digests(path) -> dict[str, str]:
    p = Path(path)
    files = sorted(q for q in p.rglob("*") if q.is_file()) if p.is_dir() else [p]
    return {str(f): sha256_file(f) for f in files}


def write_manifest(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")
