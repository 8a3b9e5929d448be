"""Pure-Python Aho-Corasick scan kernel (fallback backend).

Same contract as the compiled kernel in _acscan.pyx: walk the automaton
over the text once and report every vocabulary match as a 1-based closed
character span.
"""

from __future__ import annotations


def scan(
    text: str,
    children: list[dict[int, int]],
    fail: list[int],
    out: list[list[int]],
) -> list[tuple[int, int]]:
    matches: list[tuple[int, int]] = []
    state = 0
    root = children[0]
    for i, ch in enumerate(text):
        c = ord(ch)
        nxt = children[state].get(c, -1)
        while nxt < 0 and state:
            state = fail[state]
            nxt = children[state].get(c, -1)
        state = nxt if nxt >= 0 else 0
        lens = out[state]
        if lens:
            e = i + 1
            for length in lens:
                matches.append((e - length + 1, e))
    return matches
