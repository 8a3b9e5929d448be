#!/usr/bin/env python3
"""Benchmark the compiled matcher kernel against the pure-Python fallback.

Builds one automaton per backend from the same random vocabulary and
scans the same synthetic corpus, reporting chars/sec, match counts (they
must agree), and speedup.

    python3 benchmarks/bench_matcher.py [--chars 2000000] [--words 5000]
"""

import argparse
import time

import numpy as np

from wordlattice.matcher import PatternMatcher


def make_inputs(n_chars: int, n_words: int, seed: int):
    rng = np.random.default_rng(seed)
    alphabet = [chr(0x4E00 + i) for i in range(120)]
    words = {
        "".join(rng.choice(alphabet, size=int(rng.integers(2, 6))))
        for _ in range(n_words)
    }
    text = "".join(rng.choice(alphabet, size=n_chars))
    return sorted(words), text


def bench(backend: str, words, text: str, reps: int):
    try:
        matcher = PatternMatcher(words, backend=backend)
    except RuntimeError as exc:
        print(f"{backend:>9}: unavailable ({exc})")
        return None, None
    matcher.find_spans(text[:10_000])  # warm up
    times = []
    n_matches = 0
    for _ in range(reps):
        t0 = time.perf_counter()
        spans = matcher.find_spans(text)
        times.append(time.perf_counter() - t0)
        n_matches = len(spans)
    best = min(times)
    rate = len(text) / best
    print(
        f"{backend:>9}: {best * 1e3:8.1f} ms  {rate / 1e6:7.2f} Mchars/s"
        f"  ({n_matches} matches)"
    )
    return best, n_matches


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--chars", type=int, default=2_000_000)
    ap.add_argument("--words", type=int, default=5_000)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    words, text = make_inputs(args.chars, args.words, args.seed)
    print(f"corpus: {len(text)} chars, vocabulary: {len(words)} words")
    t_py, m_py = bench("python", words, text, args.reps)
    t_cy, m_cy = bench("compiled", words, text, args.reps)
    if t_py and t_cy:
        assert m_py == m_cy, "backends disagree on match count"
        print(f"  speedup: {t_py / t_cy:.1f}x (compiled over python)")


if __name__ == "__main__":
    main()
