import numpy as np
import pytest

from wordlattice.matcher import PatternMatcher, compile_matcher, default_backend
from wordlattice.vocab import build_vocabulary

BACKENDS = ["python"]
try:
    from wordlattice import _acscan  # noqa: F401

    BACKENDS.append("compiled")
except ImportError:
    pass


def brute_force_spans(patterns, text):
    found = []
    pats = set(patterns)
    n = len(text)
    for i in range(n):
        for j in range(i + 1, n + 1):
            if text[i:j] in pats:
                found.append((i + 1, j))
    return sorted(found)


@pytest.mark.parametrize("backend", BACKENDS)
def test_figure1_spans(backend):
    m = PatternMatcher(["研究", "研究生", "生活", "充实"], backend=backend)
    assert sorted(m.find_spans("研究生活很充实")) == [(1, 2), (1, 3), (3, 4), (6, 7)]


@pytest.mark.parametrize("backend", BACKENDS)
def test_empty_pattern_set(backend):
    m = PatternMatcher([], backend=backend)
    assert m.find_spans("任何文本") == []


@pytest.mark.parametrize("backend", BACKENDS)
def test_overlapping_patterns(backend):
    m = PatternMatcher(["aba", "bab"], backend=backend)
    assert sorted(m.find_spans("ababab")) == [(1, 3), (2, 4), (3, 5), (4, 6)]


@pytest.mark.parametrize("backend", BACKENDS)
def test_nested_and_shared_suffix_patterns(backend):
    m = PatternMatcher(["ab", "bc", "abc", "c"], backend=backend)
    assert sorted(m.find_spans("abc")) == sorted(
        brute_force_spans(["ab", "bc", "abc", "c"], "abc")
    )


@pytest.mark.parametrize("backend", BACKENDS)
def test_random_equivalence_with_brute_force(backend, rng):
    alphabet = [chr(0x4E00 + i) for i in range(6)]
    for _ in range(120):
        n_pat = int(rng.integers(1, 12))
        patterns = {
            "".join(rng.choice(alphabet, size=int(rng.integers(1, 5))))
            for _ in range(n_pat)
        }
        patterns = {p for p in patterns if len(p) >= 2}
        text = "".join(rng.choice(alphabet, size=int(rng.integers(1, 48))))
        m = PatternMatcher(patterns, backend=backend)
        assert sorted(m.find_spans(text)) == brute_force_spans(patterns, text)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernel unavailable")
def test_backends_agree(rng):
    alphabet = list("abcdef") + [chr(0x4E00 + i) for i in range(4)]
    for _ in range(60):
        patterns = {
            "".join(rng.choice(alphabet, size=int(rng.integers(2, 5))))
            for _ in range(int(rng.integers(1, 10)))
        }
        text = "".join(rng.choice(alphabet, size=int(rng.integers(1, 80))))
        py = PatternMatcher(patterns, backend="python")
        cy = PatternMatcher(patterns, backend="compiled")
        assert sorted(py.find_spans(text)) == sorted(cy.find_spans(text))


def test_compile_matcher_takes_only_multichar_words(fig1_vocab):
    m = compile_matcher(fig1_vocab)
    assert m.n_patterns == 4
    spans = m.find_spans("研")
    assert spans == []


def test_empty_text():
    m = PatternMatcher(["ab"])
    assert m.find_spans("") == []


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        PatternMatcher(["ab"], backend="gpu")


def test_default_backend_env(monkeypatch):
    monkeypatch.setenv("WORDLATTICE_PURE_PY", "1")
    assert default_backend() == "python"


def test_matcher_deterministic(fig1_vocab):
    m = compile_matcher(fig1_vocab)
    text = "研究生活很充实研究生活"
    assert m.find_spans(text) == m.find_spans(text)


def test_scan_time_scales_linearly(rng):
    # smoke check: doubling the text at fixed vocabulary ~doubles scan time
    import time

    alphabet = [chr(0x4E00 + i) for i in range(40)]
    words = {
        "".join(rng.choice(alphabet, size=int(rng.integers(2, 5))))
        for _ in range(200)
    }
    m = PatternMatcher(words, backend=default_backend())
    base = "".join(rng.choice(alphabet, size=40_000))
    double = base + base

    def med_time(text, reps=7):
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            m.find_spans(text)
            times.append(time.perf_counter() - t0)
        times.sort()
        return times[len(times) // 2]

    m.find_spans(double)  # warm up
    ratio = med_time(double) / med_time(base)
    assert 1.6 <= ratio <= 2.6, ratio
