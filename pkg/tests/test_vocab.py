import pytest

from wordlattice.vocab import (
    CHARACTER,
    CLS_ID,
    MASK_ID,
    PAD_ID,
    SEP_ID,
    SPECIAL,
    SPECIAL_SURFACES,
    UNK_ID,
    WORD,
    WORD_PIECE,
    Vocabulary,
    VocabEntry,
    build_vocabulary,
)


def test_special_ids_reserved():
    v = build_vocabulary([], max_words=0)
    assert (CLS_ID, SEP_ID, MASK_ID, UNK_ID, PAD_ID) == (0, 1, 2, 3, 4)
    for i, surf in enumerate(SPECIAL_SURFACES):
        assert v.id_of(surf) == i
        assert v.entries[i].flag == SPECIAL


def test_empty_corpus_specials_only():
    v = build_vocabulary([], max_words=5)
    assert len(v) == 5


def test_hand_counted_example():
    # corpus {研究生活, 生活} with word list {研究:1, 生活:2}, max_words=1
    v = build_vocabulary(
        ["研究生活", "生活"], max_words=1, words={"研究": 1, "生活": 2}
    )
    chars = {e.surface for e in v.entries if e.flag == CHARACTER}
    words = {e.surface for e in v.entries if e.flag == WORD}
    assert chars == {"研", "究", "生", "活"}
    assert words == {"生活"}


def test_max_words_zero_chars_only():
    v = build_vocabulary(["研究"], max_words=0, words={"研究": 9})
    assert all(e.flag != WORD for e in v.entries)
    assert "研" in v and "研究" not in v


def test_tie_break_lexicographic():
    # equal frequency: lexicographically smaller surface wins the last slot
    v = build_vocabulary(
        ["甲乙丙丁"], max_words=1, words={"丙丁": 3, "甲乙": 3}
    )
    words = [e.surface for e in v.entries if e.flag == WORD]
    assert words == [min("丙丁", "甲乙")]


def test_char_frequencies_counted():
    v = build_vocabulary(["生生活"], max_words=0)
    by_surface = {e.surface: e.freq for e in v.entries if e.flag == CHARACTER}
    assert by_surface == {"生": 2, "活": 1}


def test_rejects_undecodable_record():
    stats = {}
    v = build_vocabulary([b"\xff\xfe\xff", "研"], max_words=0, stats=stats)
    assert stats["rejected_records"] == 1
    assert "研" in v


def test_word_normalization_and_filtering():
    # one-char and whitespace-carrying word entries never become words
    v = build_vocabulary(["abc def"], max_words=10, words={"A": 4, "a b": 5, "DeF": 2})
    words = [e.surface for e in v.entries if e.flag == WORD]
    assert words == ["def"]


def test_bare_word_list_counts_substrings():
    v = build_vocabulary(["生活生活", "生活"], max_words=5, words=["生活", "究生"])
    freq = {e.surface: e.freq for e in v.entries if e.flag == WORD}
    assert freq["生活"] == 3
    assert freq.get("究生", 0) == 0 or "究生" not in freq


def test_pieces_flagged():
    v = build_vocabulary(["gpu"], max_words=0, pieces=[("gpu", 7)])
    assert v.flag_of("gpu") == WORD_PIECE
    assert v.max_match_len == 3


def test_save_load_roundtrip_stable_ids(tmp_path):
    v = build_vocabulary(
        ["研究生活", "生活 gpu"], max_words=5, words={"研究": 1, "生活": 2},
        pieces=[("gpu", 1)],
    )
    path = tmp_path / "vocab.tsv"
    v.save(path)
    w = Vocabulary.load(path)
    assert len(w) == len(v)
    for e in v.entries:
        assert w.id_of(e.surface) == v.id_of(e.surface)
        assert w.flag_of(e.surface) == e.flag
    # byte-stable across repeated saves
    v.save(tmp_path / "vocab2.tsv")
    assert (tmp_path / "vocab.tsv").read_bytes() == (tmp_path / "vocab2.tsv").read_bytes()


def test_load_skips_malformed_lines(tmp_path):
    path = tmp_path / "vocab.tsv"
    path.write_text("研\t3\tcharacter\nbadline\n砸\t1\tnotaflag\n究\t2\tcharacter\n")
    v = Vocabulary.load(path)
    assert "研" in v and "究" in v
    assert "砸" not in v and "badline" not in v


def test_id_or_unk():
    v = build_vocabulary(["研"], max_words=0)
    assert v.id_or_unk("研") == v.id_of("研")
    assert v.id_or_unk("missing") == UNK_ID


def test_counts_by_flag():
    v = build_vocabulary(["研究"], max_words=1, words={"研究": 2})
    c = v.counts_by_flag()
    assert c[SPECIAL] == 5 and c[CHARACTER] == 2 and c[WORD] == 1


def test_duplicate_surfaces_keep_first():
    v = Vocabulary(
        [
            VocabEntry("研", 3, CHARACTER),
            VocabEntry("研", 9, WORD),
        ]
    )
    assert v.flag_of("研") == CHARACTER


def test_invalid_flag_raises():
    with pytest.raises(ValueError):
        Vocabulary([VocabEntry("x", 1, "bogus")])
