"""Positional geometry between lattice-token spans.

Seven mutually exclusive relations classify every ordered pair of
span-deduplicated tokens, and four signed start/end distances feed the
per-head distance tables after clipping to [-128, 128]. Overlap uses the
closed-interval reading s_i <= s_j <= e_i <= e_j minus the containment,
self, and detached cases, so boundary-sharing pairs like (1,3)/(3,4)
classify cleanly.
"""

from __future__ import annotations

from enum import IntEnum
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidSpan

CLIP_BOUND = 128
N_DISTANCE_BUCKETS = 2 * CLIP_BOUND + 1  # 257 per table
N_RELATIONS = 7


class PositionRelation(IntEnum):
    """Relation of a target span to a source span; wire codes 0-6."""

    SELF = 0
    LEFT_DETACHED = 1
    LEFT_OVERLAPPED = 2
    CONTAINS = 3
    CONTAINED_BY = 4
    RIGHT_OVERLAPPED = 5
    RIGHT_DETACHED = 6


_MIRROR = {
    PositionRelation.SELF: PositionRelation.SELF,
    PositionRelation.LEFT_DETACHED: PositionRelation.RIGHT_DETACHED,
    PositionRelation.RIGHT_DETACHED: PositionRelation.LEFT_DETACHED,
    PositionRelation.LEFT_OVERLAPPED: PositionRelation.RIGHT_OVERLAPPED,
    PositionRelation.RIGHT_OVERLAPPED: PositionRelation.LEFT_OVERLAPPED,
    PositionRelation.CONTAINS: PositionRelation.CONTAINED_BY,
    PositionRelation.CONTAINED_BY: PositionRelation.CONTAINS,
}


def mirror(rel: PositionRelation) -> PositionRelation:
    """The relation seen from the swapped pair."""
    return _MIRROR[rel]


class DistanceOffsets(NamedTuple):
    dss: int
    dse: int
    des: int
    dee: int


def clip(t: int) -> int:
    """Clamp a signed distance into [-128, 128] (inclusive)."""
    return max(-CLIP_BOUND, min(CLIP_BOUND, t))


def _check(span: tuple[int, int]) -> None:
    s, e = span
    if s > e:
        raise InvalidSpan(f"span ({s}, {e}) has s > e")


def relation(
    src: tuple[int, int], tgt: tuple[int, int], same_index: bool = False
) -> PositionRelation:
    """Classify the target span relative to the source span.

    Identical spans with distinct indices violate the lattice dedup
    invariant and raise InvalidSpan rather than guessing a direction.
    """
    _check(src)
    _check(tgt)
    if same_index:
        if src != tgt:
            raise InvalidSpan("same_index requires identical spans")
        return PositionRelation.SELF
    s_i, e_i = src
    s_j, e_j = tgt
    if src == tgt:
        raise InvalidSpan(f"duplicate span {src} for distinct tokens")
    if e_i < s_j:
        return PositionRelation.RIGHT_DETACHED
    if e_j < s_i:
        return PositionRelation.LEFT_DETACHED
    if s_i <= s_j and e_j <= e_i:
        return PositionRelation.CONTAINS
    if s_j <= s_i and e_i <= e_j:
        return PositionRelation.CONTAINED_BY
    if s_i < s_j:
        return PositionRelation.RIGHT_OVERLAPPED
    return PositionRelation.LEFT_OVERLAPPED


def distance_offsets(src: tuple[int, int], tgt: tuple[int, int]) -> DistanceOffsets:
    """Four clipped start/end differences, target minus source."""
    _check(src)
    _check(tgt)
    s_i, e_i = src
    s_j, e_j = tgt
    return DistanceOffsets(
        dss=clip(s_j - s_i),
        dse=clip(s_j - e_i),
        des=clip(e_j - s_i),
        dee=clip(e_j - e_i),
    )


def relation_matrix(
    s_arr: Sequence[int] | np.ndarray, e_arr: Sequence[int] | np.ndarray
) -> np.ndarray:
    """(n, n) int8 matrix of relation codes; row = source, column = target."""
    s = np.asarray(s_arr, dtype=np.int64)
    e = np.asarray(e_arr, dtype=np.int64)
    if np.any(s > e):
        raise InvalidSpan("some span has s > e")
    n = s.shape[0]
    s_i, s_j = s[:, None], s[None, :]
    e_i, e_j = e[:, None], e[None, :]
    eye = np.eye(n, dtype=bool)
    equal = (s_i == s_j) & (e_i == e_j)
    if np.any(equal & ~eye):
        raise InvalidSpan("duplicate spans for distinct tokens")
    out = np.empty((n, n), dtype=np.int8)
    out[...] = PositionRelation.LEFT_OVERLAPPED
    out[s_i < s_j] = PositionRelation.RIGHT_OVERLAPPED
    out[(s_j <= s_i) & (e_i <= e_j)] = PositionRelation.CONTAINED_BY
    out[(s_i <= s_j) & (e_j <= e_i)] = PositionRelation.CONTAINS
    out[e_j < s_i] = PositionRelation.LEFT_DETACHED
    out[e_i < s_j] = PositionRelation.RIGHT_DETACHED
    out[eye] = PositionRelation.SELF
    return out


def offsets_matrix(
    s_arr: Sequence[int] | np.ndarray, e_arr: Sequence[int] | np.ndarray
) -> np.ndarray:
    """(n, n, 4) clipped distance offsets in table order (ss, se, es, ee)."""
    s = np.asarray(s_arr, dtype=np.int64)
    e = np.asarray(e_arr, dtype=np.int64)
    if np.any(s > e):
        raise InvalidSpan("some span has s > e")
    offs = np.stack(
        [
            s[None, :] - s[:, None],
            s[None, :] - e[:, None],
            e[None, :] - s[:, None],
            e[None, :] - e[:, None],
        ],
        axis=-1,
    )
    return np.clip(offs, -CLIP_BOUND, CLIP_BOUND)


def concurrent_in_one_segmentation(
    src: tuple[int, int], tgt: tuple[int, int], same_index: bool = False
) -> bool:
    """Whether two tokens can co-occur in a single segmentation path."""
    rel = relation(src, tgt, same_index)
    return rel in (PositionRelation.LEFT_DETACHED, PositionRelation.RIGHT_DETACHED)
