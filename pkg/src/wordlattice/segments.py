"""Minimal-segment detection over a lattice.

A segment is a maximal group of tokens no outside token overlaps: the
connected components of the token overlap graph. Detection streams the
character positions in order and cuts wherever no token crosses to the
next position, which is equivalent because tokens are intervals and the
backbone covers every position.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lattice import Lattice


@dataclass(frozen=True)
class Segment:
    token_indices: tuple[int, ...]
    char_span: tuple[int, int]

    def __len__(self) -> int:
        return len(self.token_indices)


def detect_segments(lat: Lattice) -> list[Segment]:
    n = lat.n_chars
    max_end_from = [0] * (n + 2)
    for tok in lat.tokens:
        if tok.e > max_end_from[tok.s]:
            max_end_from[tok.s] = tok.e
    cuts = []
    reach = 0
    for p in range(1, n + 1):
        reach = max(reach, max_end_from[p])
        if reach <= p:
            cuts.append(p)
    segments = []
    start = 1
    idx = 0
    order = sorted(range(len(lat.tokens)), key=lambda i: (lat.tokens[i].s, lat.tokens[i].e))
    for cut in cuts:
        members = []
        while idx < len(order) and lat.tokens[order[idx]].s <= cut:
            members.append(order[idx])
            idx += 1
        segments.append(Segment(tuple(members), (start, cut)))
        start = cut + 1
    return segments
