"""Independent language oracle: bounded enumeration of a regex's strings."""
from __future__ import annotations

import itertools

from hypothesis import strategies as st

from demosynth.regexcore import Alt, Concat, Eps, Opt, Power, Star, StarPower, Tok, act_tok

A, B, C, D = act_tok("a", "x"), act_tok("b", "x"), act_tok("c", "x"), act_tok("d", "x")


def lang(r, n: int) -> frozenset:
    """All strings of length <= n in L(r)."""
    if isinstance(r, Eps):
        return frozenset({()})
    if isinstance(r, Tok):
        return frozenset({(r.tok,)}) if n >= 1 else frozenset()
    if isinstance(r, Concat):
        return _cat(lang(r.left, n), lang(r.right, n), n)
    if isinstance(r, Alt):
        return lang(r.left, n) | lang(r.right, n)
    if isinstance(r, Opt):
        return lang(r.body, n) | {()}
    if isinstance(r, Power):
        out = frozenset({()})
        body = lang(r.body, n)
        for _ in range(r.n):
            out = _cat(out, body, n)
        return out
    body = lang(r.body, n)
    out = frozenset({()})
    while True:
        nxt = out | _cat(out, body, n)
        if nxt == out:
            return out
        out = nxt


def _cat(xs, ys, n):
    return frozenset(x + y for x in xs for y in ys if len(x) + len(y) <= n)


def all_strings(alphabet, n: int):
    for k in range(n + 1):
        yield from itertools.product(alphabet, repeat=k)


def regexes(alphabet=(A, B, C), max_leaves: int = 6):
    leaves = st.sampled_from([Tok(t) for t in alphabet]) | st.just(Eps())

    def extend(children):
        return st.one_of(
            st.builds(Concat, children, children),
            st.builds(Alt, children, children),
            st.builds(Star, children),
            st.builds(Opt, children),
            st.builds(StarPower, children),
            st.builds(Power, children, st.integers(0, 3)),
        )
    return st.recursive(leaves, extend, max_leaves=max_leaves)
