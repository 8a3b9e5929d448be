import itertools

import numpy as np
import pytest

from wordlattice.errors import InvalidSpan
from wordlattice.geometry import (
    CLIP_BOUND,
    DistanceOffsets,
    PositionRelation as R,
    clip,
    concurrent_in_one_segmentation,
    distance_offsets,
    mirror,
    offsets_matrix,
    relation,
    relation_matrix,
)

ALL_SPANS_8 = [(s, e) for s in range(1, 9) for e in range(s, 9)]


def oracle_relation(src, tgt, same_index):
    """Independent amended case table (priority-ordered, no reuse of the
    implementation's branch structure)."""
    (s1, e1), (s2, e2) = src, tgt
    if same_index:
        return R.SELF
    if e1 < s2:
        return R.RIGHT_DETACHED
    if e2 < s1:
        return R.LEFT_DETACHED
    inter_lo, inter_hi = max(s1, s2), min(e1, e2)
    assert inter_lo <= inter_hi
    if (s2, e2) != (s1, e1) and s1 <= s2 and e2 <= e1:
        return R.CONTAINS
    if (s2, e2) != (s1, e1) and s2 <= s1 and e1 <= e2:
        return R.CONTAINED_BY
    return R.RIGHT_OVERLAPPED if s1 < s2 else R.LEFT_OVERLAPPED


def test_contains_example():
    assert relation((1, 3), (1, 2)) == R.CONTAINS


def test_self_example():
    assert relation((1, 2), (1, 2), same_index=True) == R.SELF


def test_right_detached_example():
    assert relation((1, 2), (3, 4)) == R.RIGHT_DETACHED


def test_right_overlapped_shared_boundary():
    assert relation((1, 3), (3, 4)) == R.RIGHT_OVERLAPPED


def test_exhaustive_totality_and_oracle():
    seen = set()
    for src, tgt in itertools.product(ALL_SPANS_8, repeat=2):
        same = src == tgt
        rel = relation(src, tgt, same_index=same)
        assert rel == oracle_relation(src, tgt, same)
        seen.add(rel)
    assert seen == set(R)


def test_antisymmetry():
    for src, tgt in itertools.product(ALL_SPANS_8, repeat=2):
        same = src == tgt
        assert relation(tgt, src, same_index=same) == mirror(
            relation(src, tgt, same_index=same)
        )


def test_duplicate_span_distinct_index_raises():
    with pytest.raises(InvalidSpan):
        relation((2, 4), (2, 4), same_index=False)


def test_invalid_span_raises():
    with pytest.raises(InvalidSpan):
        relation((3, 2), (1, 1))
    with pytest.raises(InvalidSpan):
        distance_offsets((1, 1), (5, 4))


def test_same_index_span_mismatch_raises():
    with pytest.raises(InvalidSpan):
        relation((1, 2), (1, 3), same_index=True)


def test_relation_codes_stable():
    assert [int(r) for r in R] == [0, 1, 2, 3, 4, 5, 6]
    assert R.SELF == 0 and R.RIGHT_DETACHED == 6


def test_clip():
    assert clip(200) == 128
    assert clip(0) == 0
    assert clip(-129) == -128
    assert clip(128) == 128 and clip(-128) == -128


def test_distance_offsets_basic():
    assert distance_offsets((1, 2), (3, 4)) == DistanceOffsets(2, 1, 3, 2)


def test_distance_offsets_identical_spans():
    # dss = 0, dse = s - e, des = e - s, dee = 0 per the defining formula
    s, e = 2, 5
    assert distance_offsets((s, e), (s, e)) == DistanceOffsets(0, s - e, e - s, 0)


def test_distance_offsets_clip_far_spans():
    assert distance_offsets((1, 1), (300, 300)) == DistanceOffsets(128, 128, 128, 128)
    assert distance_offsets((300, 300), (1, 1)) == DistanceOffsets(
        -128, -128, -128, -128
    )


def test_offsets_always_in_clip_range(rng):
    for _ in range(300):
        s1 = int(rng.integers(1, 600))
        e1 = s1 + int(rng.integers(0, 600))
        s2 = int(rng.integers(1, 600))
        e2 = s2 + int(rng.integers(0, 600))
        offs = distance_offsets((s1, e1), (s2, e2))
        for v in offs:
            assert -CLIP_BOUND <= v <= CLIP_BOUND


def test_relation_distance_consistency():
    for src, tgt in itertools.product(ALL_SPANS_8, repeat=2):
        if src == tgt:
            continue
        rel = relation(src, tgt)
        (s1, e1), (s2, e2) = src, tgt
        if rel == R.RIGHT_DETACHED:
            assert s2 - e1 > 0
        if rel == R.CONTAINS:
            assert s2 - s1 >= 0 and e2 - e1 <= 0


def brute_force_concurrent(tokens, a, b):
    """Path enumeration over a tiny lattice: a and b can co-occur iff some
    full segmentation path uses both."""
    n = max(e for _, e in tokens)
    starts = {}
    for i, (s, e) in enumerate(tokens):
        starts.setdefault(s, []).append(i)
    paths = []

    def walk(pos, used):
        if pos == n + 1:
            paths.append(frozenset(used))
            return
        for i in starts.get(pos, []):
            walk(tokens[i][1] + 1, used + [i])

    walk(1, [])
    return any(a in p and b in p for p in paths)


def test_concurrency_matches_path_enumeration(rng):
    for _ in range(60):
        n = int(rng.integers(2, 7))
        tokens = [(p, p) for p in range(1, n + 1)]
        for _ in range(int(rng.integers(0, 5))):
            s = int(rng.integers(1, n))
            e = min(n, s + int(rng.integers(1, 3)))
            if (s, e) not in tokens:
                tokens.append((s, e))
        for a in range(len(tokens)):
            for b in range(len(tokens)):
                if a == b:
                    continue
                expected = brute_force_concurrent(tokens, a, b)
                got = concurrent_in_one_segmentation(tokens[a], tokens[b])
                assert got == expected, (tokens, a, b)


def test_relation_matrix_matches_scalar(rng):
    spans = [(1, 1), (1, 3), (2, 2), (2, 5), (4, 5), (6, 6)]
    s = [x for x, _ in spans]
    e = [y for _, y in spans]
    mat = relation_matrix(s, e)
    for i, src in enumerate(spans):
        for j, tgt in enumerate(spans):
            assert mat[i, j] == relation(src, tgt, same_index=i == j)


def test_relation_matrix_rejects_duplicates():
    with pytest.raises(InvalidSpan):
        relation_matrix([1, 1], [2, 2])


def test_offsets_matrix_matches_scalar():
    spans = [(1, 1), (1, 3), (2, 2), (140, 400)]
    s = [x for x, _ in spans]
    e = [y for _, y in spans]
    offs = offsets_matrix(s, e)
    for i, src in enumerate(spans):
        for j, tgt in enumerate(spans):
            assert tuple(offs[i, j]) == distance_offsets(src, tgt)
