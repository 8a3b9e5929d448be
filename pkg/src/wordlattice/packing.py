"""Greedy sentence packing into masked pre-training instances.

Sentences of one document pack into character-budget buffers; each
buffer becomes one CLS/A/SEP/B/SEP instance with a seeded split point,
swap coin, segment selection, and token corruption. Each document owns
a generator derived from (global seed, document index), so output is
identical no matter how documents are sharded across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .errors import ConfigError
from .instances import (
    PretrainInstance,
    apply_msp_mask,
    apply_random_token_mask,
    build_pretrain_instance,
    select_mask_segments,
)
from .lattice import build_lattice
from .matcher import PatternMatcher
from .normalize import normalize_text
from .vocab import Vocabulary

PHASE_PRESETS = {1: (128, 173), 2: (512, 692)}


@dataclass
class PackConfig:
    char_budget: int = 128
    token_cap: int = 173
    mask_ratio: float = 0.15
    seed: int = 0
    masking: str = "msp"  # or "random": the leakage ablation baseline

    def __post_init__(self):
        if not 0 < self.mask_ratio < 1:
            raise ConfigError(f"mask ratio must be in (0, 1): {self.mask_ratio}")
        if self.masking not in ("msp", "random"):
            raise ConfigError(f"unknown masking mode: {self.masking!r}")
        if self.char_budget < 2 or self.token_cap < 8:
            raise ConfigError("char_budget/token_cap too small to form instances")

    @classmethod
    def for_phase(cls, phase: int, **kw) -> "PackConfig":
        if phase not in PHASE_PRESETS:
            raise ConfigError(f"phase must be 1 or 2, got {phase}")
        budget, cap = PHASE_PRESETS[phase]
        return cls(char_budget=budget, token_cap=cap, **kw)


@dataclass
class PackStats:
    instances: int = 0
    split_long_sentences: int = 0
    skipped_tiny: int = 0
    skipped_overflow: int = 0
    total_tokens: int = 0
    masked_tokens: int = 0
    token_histogram: dict = field(default_factory=dict)

    @property
    def mask_rate(self) -> float:
        return self.masked_tokens / self.total_tokens if self.total_tokens else 0.0

    def observe(self, inst: PretrainInstance) -> None:
        self.instances += 1
        self.total_tokens += inst.maskable_count()
        self.masked_tokens += len(inst.mask_positions)
        n = len(inst)
        self.token_histogram[n] = self.token_histogram.get(n, 0) + 1


def doc_rng(seed: int, doc_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(doc_index,))
    )


def _buffers(sentences: list[str], char_budget: int, stats: PackStats) -> Iterator[list[str]]:
    cur: list[str] = []
    cur_len = 0
    for sent in sentences:
        while len(sent) > char_budget:
            stats.split_long_sentences += 1
            head, sent = sent[:char_budget], sent[char_budget:]
            if cur:
                yield cur
                cur, cur_len = [], 0
            yield [head]
        if not sent:
            continue
        if cur and cur_len + len(sent) > char_budget:
            yield cur
            cur, cur_len = [], 0
        cur.append(sent)
        cur_len += len(sent)
    if cur:
        yield cur


def pack_document(
    sentences: Iterable[str],
    matcher: PatternMatcher,
    vocab: Vocabulary,
    cfg: PackConfig,
    rng: np.random.Generator,
    stats: PackStats | None = None,
) -> Iterator[PretrainInstance]:
    stats = stats if stats is not None else PackStats()
    cleaned = [normalize_text(s) for s in sentences]
    cleaned = [s for s in cleaned if s]
    for buf in _buffers(cleaned, cfg.char_budget, stats):
        if len(buf) >= 2:
            k = int(rng.integers(1, len(buf)))
            a_text = "".join(buf[:k])
            b_text = "".join(buf[k:])
        else:
            text = buf[0]
            if len(text) < 2:
                stats.skipped_tiny += 1
                continue
            mid = (len(text) + 1) // 2
            a_text, b_text = text[:mid], text[mid:]
        swap = bool(rng.random() < 0.5)
        lat_a = build_lattice(a_text, matcher, vocab)
        lat_b = build_lattice(b_text, matcher, vocab)
        try:
            inst, segments = build_pretrain_instance(lat_a, lat_b, swap, cfg.token_cap)
        except ConfigError:
            stats.skipped_overflow += 1
            continue
        if cfg.masking == "msp":
            selected = select_mask_segments(segments, cfg.mask_ratio, rng)
            inst = apply_msp_mask(inst, selected, rng, len(vocab))
        else:
            inst = apply_random_token_mask(inst, cfg.mask_ratio, rng, len(vocab))
        stats.observe(inst)
        yield inst


def pack_to_budget(
    docs: Iterable[list[str]],
    matcher: PatternMatcher,
    vocab: Vocabulary,
    cfg: PackConfig,
    stats: PackStats | None = None,
    doc_offset: int = 0,
) -> Iterator[PretrainInstance]:
    """Instance stream over documents; deterministic per (seed, doc index)."""
    for i, sentences in enumerate(docs):
        rng = doc_rng(cfg.seed, doc_offset + i)
        yield from pack_document(sentences, matcher, vocab, cfg, rng, stats)
