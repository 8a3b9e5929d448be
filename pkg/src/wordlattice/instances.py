"""Pre-training instance generation: layout, masking, packing, records.

Instances carry the full lattice token stream of a sentence pair as
CLS, A, SEP, B, SEP with character positions continuing across the
pair (each SEP consumes one position). Masked segment prediction masks
whole minimal segments, so no unmasked token ever overlaps a target;
sentence-order prediction labels whether the pair was swapped.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import ConfigError
from .lattice import Lattice
from .segments import Segment, detect_segments
from .vocab import CLS_ID, MASK_ID, SEP_ID

SOP_IN_ORDER = 0
SOP_SWAPPED = 1

SCHEMA_VERSION = 1

# first non-special vocabulary id, for random-replacement draws
_FIRST_REAL_ID = 5


@dataclass(frozen=True)
class PretrainInstance:
    token_ids: tuple[int, ...]
    s_arr: tuple[int, ...]
    e_arr: tuple[int, ...]
    mask_positions: tuple[int, ...]
    msp_targets: tuple[tuple[int, int], ...]
    sop_label: int
    n_chars: int

    def __len__(self) -> int:
        return len(self.token_ids)

    @property
    def cls_index(self) -> int:
        return 0

    def special_indices(self) -> set[int]:
        return {i for i, t in enumerate(self.token_ids) if t in (CLS_ID, SEP_ID)}

    def maskable_count(self) -> int:
        return len(self.token_ids) - len(self.special_indices())

    def to_record(self) -> dict:
        return {
            "token_ids": list(self.token_ids),
            "s": list(self.s_arr),
            "e": list(self.e_arr),
            "mask_positions": list(self.mask_positions),
            "msp_targets": [list(t) for t in self.msp_targets],
            "sop_label": self.sop_label,
            "n_chars": self.n_chars,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_record(cls, rec: dict) -> "PretrainInstance":
        return cls(
            token_ids=tuple(rec["token_ids"]),
            s_arr=tuple(rec["s"]),
            e_arr=tuple(rec["e"]),
            mask_positions=tuple(rec["mask_positions"]),
            msp_targets=tuple((i, t) for i, t in rec["msp_targets"]),
            sop_label=rec["sop_label"],
            n_chars=rec["n_chars"],
        )


def _kept_prefix(lat: Lattice, segments: list[Segment], n_segments: int):
    """Tokens and char count of the first n_segments segments."""
    if n_segments >= len(segments):
        return lat.tokens, lat.n_chars, segments
    kept = segments[:n_segments]
    n_tok = sum(len(s) for s in kept)
    n_chars = kept[-1].char_span[1] if kept else 0
    return lat.tokens[:n_tok], n_chars, kept


def build_pretrain_instance(
    sent_a: Lattice,
    sent_b: Lattice,
    swap: bool,
    token_cap: int,
) -> tuple[PretrainInstance, list[Segment]]:
    """Lay out CLS, first, SEP, second, SEP and map segments to indices.

    When the pair exceeds token_cap, whole trailing segments of B and
    then A are dropped, which preserves leakage-freedom. Returns the
    unmasked instance and its segments in instance-index space.
    """
    if not sent_a.tokens or not sent_b.tokens:
        raise ConfigError("both sentence lattices must be nonempty")
    seg_a = detect_segments(sent_a)
    seg_b = detect_segments(sent_b)
    ka, kb = len(seg_a), len(seg_b)

    def total(ka_: int, kb_: int) -> int:
        return (
            3
            + sum(len(s) for s in seg_a[:ka_])
            + sum(len(s) for s in seg_b[:kb_])
        )

    while total(ka, kb) > token_cap and kb > 0:
        kb -= 1
    while total(ka, kb) > token_cap and ka > 0:
        ka -= 1
    if ka == 0:
        raise ConfigError(
            f"token cap {token_cap} cannot fit a single segment plus specials"
        )
    tok_a, chars_a, kept_a = _kept_prefix(sent_a, seg_a, ka)
    tok_b, chars_b, kept_b = _kept_prefix(sent_b, seg_b, kb)

    if swap:
        first, first_chars, first_segs = tok_b, chars_b, kept_b
        second, second_chars, second_segs = tok_a, chars_a, kept_a
    else:
        first, first_chars, first_segs = tok_a, chars_a, kept_a
        second, second_chars, second_segs = tok_b, chars_b, kept_b

    ids = [CLS_ID]
    s_arr = [0]
    e_arr = [0]
    for t in first:
        ids.append(t.id)
        s_arr.append(t.s)
        e_arr.append(t.e)
    sep1 = first_chars + 1
    ids.append(SEP_ID)
    s_arr.append(sep1)
    e_arr.append(sep1)
    shift = first_chars + 1
    for t in second:
        ids.append(t.id)
        s_arr.append(t.s + shift)
        e_arr.append(t.e + shift)
    sep2 = first_chars + second_chars + 2
    ids.append(SEP_ID)
    s_arr.append(sep2)
    e_arr.append(sep2)

    inst_segments: list[Segment] = []
    base = 1
    for seg in first_segs:
        idxs = tuple(range(base, base + len(seg)))
        inst_segments.append(Segment(idxs, seg.char_span))
        base += len(seg)
    base += 1  # SEP
    for seg in second_segs:
        idxs = tuple(range(base, base + len(seg)))
        cs = (seg.char_span[0] + shift, seg.char_span[1] + shift)
        inst_segments.append(Segment(idxs, cs))
        base += len(seg)

    inst = PretrainInstance(
        token_ids=tuple(ids),
        s_arr=tuple(s_arr),
        e_arr=tuple(e_arr),
        mask_positions=(),
        msp_targets=(),
        sop_label=SOP_SWAPPED if swap else SOP_IN_ORDER,
        n_chars=first_chars + second_chars + 2,
    )
    return inst, inst_segments


def select_mask_segments(
    segments: list[Segment], ratio: float, rng: np.random.Generator
) -> list[Segment]:
    """Uniform segment draws without replacement until the token budget.

    Stops at the first draw where the cumulative token count reaches
    ratio * total tokens (overshoot at most one segment); always selects
    at least one segment when any exists.
    """
    if not 0 < ratio < 1:
        raise ConfigError(f"mask ratio must be in (0, 1), got {ratio}")
    if not segments:
        return []
    total = sum(len(s) for s in segments)
    budget = ratio * total
    order = rng.permutation(len(segments))
    selected: list[Segment] = []
    cum = 0
    for i in order:
        selected.append(segments[i])
        cum += len(segments[i])
        if cum >= budget:
            break
    return selected


def apply_msp_mask(
    inst: PretrainInstance,
    selected: list[Segment],
    rng: np.random.Generator,
    vocab_size: int,
) -> PretrainInstance:
    """Corrupt every token of each selected segment and record targets.

    Per token: 80% MASK, 10% random vocabulary id, 10% kept unchanged;
    kept tokens are still prediction targets. Draws happen in ascending
    index order so a seed fixes the output.
    """
    targets = sorted(i for seg in selected for i in seg.token_indices)
    ids = list(inst.token_ids)
    msp_targets = []
    for i in targets:
        original = ids[i]
        msp_targets.append((i, original))
        u = rng.random()
        if u < 0.8:
            ids[i] = MASK_ID
        elif u < 0.9:
            ids[i] = int(rng.integers(_FIRST_REAL_ID, max(vocab_size, _FIRST_REAL_ID + 1)))
    return replace(
        inst,
        token_ids=tuple(ids),
        mask_positions=tuple(targets),
        msp_targets=tuple(msp_targets),
    )


def apply_random_token_mask(
    inst: PretrainInstance,
    ratio: float,
    rng: np.random.Generator,
    vocab_size: int,
) -> PretrainInstance:
    """Per-token random masking at the same rate, ignoring segments.

    The leakage ablation baseline: overlapping neighbors of a target
    usually stay visible.
    """
    if not 0 < ratio < 1:
        raise ConfigError(f"mask ratio must be in (0, 1), got {ratio}")
    maskable = [
        i
        for i, t in enumerate(inst.token_ids)
        if i != 0 and t != SEP_ID
    ]
    if not maskable:
        return inst
    k = max(1, round(ratio * len(maskable)))
    chosen = sorted(rng.choice(len(maskable), size=min(k, len(maskable)), replace=False))
    targets = [maskable[i] for i in chosen]
    ids = list(inst.token_ids)
    msp_targets = []
    for i in targets:
        original = ids[i]
        msp_targets.append((i, original))
        u = rng.random()
        if u < 0.8:
            ids[i] = MASK_ID
        elif u < 0.9:
            ids[i] = int(rng.integers(_FIRST_REAL_ID, max(vocab_size, _FIRST_REAL_ID + 1)))
    return replace(
        inst,
        token_ids=tuple(ids),
        mask_positions=tuple(targets),
        msp_targets=tuple(msp_targets),
    )


def encode_single(lat: Lattice) -> PretrainInstance:
    """CLS + tokens + SEP for one sentence, unmasked (inference layout)."""
    ids = [CLS_ID] + [t.id for t in lat.tokens] + [SEP_ID]
    s_arr = [0] + [t.s for t in lat.tokens] + [lat.n_chars + 1]
    e_arr = [0] + [t.e for t in lat.tokens] + [lat.n_chars + 1]
    return PretrainInstance(
        token_ids=tuple(ids),
        s_arr=tuple(s_arr),
        e_arr=tuple(e_arr),
        mask_positions=(),
        msp_targets=(),
        sop_label=SOP_IN_ORDER,
        n_chars=lat.n_chars + 1,
    )


# ---------------------------------------------------------------------------
# instance files: line-delimited JSON or length-prefixed binary records

_BINARY_MAGIC = 0x01


def write_instances(
    path, instances: Iterable[PretrainInstance], fmt: str = "jsonl"
) -> int:
    n = 0
    if fmt == "jsonl":
        with open(path, "w", encoding="utf-8") as f:
            f.write(json.dumps({"schema_version": SCHEMA_VERSION}) + "\n")
            for inst in instances:
                f.write(inst.to_json() + "\n")
                n += 1
    elif fmt == "binary":
        with open(path, "wb") as f:
            f.write(bytes([_BINARY_MAGIC]))
            for inst in instances:
                payload = inst.to_json().encode("utf-8")
                f.write(struct.pack("<I", len(payload)))
                f.write(payload)
                n += 1
    else:
        raise ConfigError(f"unknown record format: {fmt!r}")
    return n


def read_instances(path) -> Iterator[PretrainInstance]:
    with open(path, "rb") as f:
        first = f.read(1)
        if first == bytes([_BINARY_MAGIC]):
            yield from _read_binary(f)
            return
    with open(path, encoding="utf-8") as ftxt:
        header = json.loads(ftxt.readline())
        if header.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema version: {header}")
        for line in ftxt:
            line = line.strip()
            if line:
                yield PretrainInstance.from_record(json.loads(line))


def _read_binary(f: IO[bytes]) -> Iterator[PretrainInstance]:
    while True:
        head = f.read(4)
        if not head:
            return
        (length,) = struct.unpack("<I", head)
        payload = f.read(length)
        yield PretrainInstance.from_record(json.loads(payload.decode("utf-8")))
