"""Regex inference from positive token strings, plus the rewrite-variant stream.

Each sample is folded on its own (literal tandem repeats, then adjacent
blocks that unify under an existing star), then the folded samples are
merged by sequence alignment. Every result is checked with the matcher; a
plain alternation of the samples is the fallback, so the output always
accepts every sample.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable, Iterator, Sequence

from .regexcore import (Alt, Concat, Opt, Power, Regex, Star, StarPower, Tok, alt, concat, has_alt, matches,
                        regex_size)


def _is_tok(e: Regex) -> bool:
    return isinstance(e, Tok)


def _covers(star: Star, run: Sequence[Regex]) -> bool:
    """True if every string of the run's language is in L(star)."""
    if not run:
        return True
    toks: list = []
    for e in run:
        if isinstance(e, Tok):
            toks.append(e.tok)
            continue
        if toks and not matches(star, toks):
            return False
        toks = []
        if e != star and e != star.body:
            return False
    return not toks or matches(star, toks)


def _tandem(seq: list) -> bool:
    n = len(seq)
    for L in range(1, n // 2 + 1):
        for i in range(0, n - 2 * L + 1):
            unit = seq[i:i + L]
            if seq[i + L:i + 2 * L] != unit:
                continue
            k = 2
            while seq[i + k * L:i + (k + 1) * L] == unit:
                k += 1
            if L == 1:
                e = unit[0]
                rep = e if isinstance(e, Star) else Star(e)
            elif all(_is_tok(e) for e in unit):
                rep = Star(Alt(unit[0], concat(unit[1:])))
            else:
                rep = Star(concat(unit))
            seq[i:i + k * L] = [rep]
            return True
    return False


def _unify(a: Sequence[Regex], b: Sequence[Regex]):
    """Elementwise generalization of two blocks, letting stars absorb covered runs."""
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def go(x: int, y: int):
        if x == len(a) and y == len(b):
            return ()
        if x < len(a) and y < len(b) and a[x] == b[y]:
            rest = go(x + 1, y + 1)
            if rest is not None:
                return (a[x],) + rest
        if x < len(a) and isinstance(a[x], Star):
            for y2 in range(len(b), y, -1):
                if _covers(a[x], b[y:y2]):
                    rest = go(x + 1, y2)
                    if rest is not None:
                        return (a[x],) + rest
        if y < len(b) and isinstance(b[y], Star):
            for x2 in range(len(a), x, -1):
                if _covers(b[y], a[x:x2]):
                    rest = go(x2, y + 1)
                    if rest is not None:
                        return (b[y],) + rest
        return None

    return go(0, 0)


def _blocks(seq: list) -> bool:
    n = len(seq)
    for span in range(2, n + 1):
        for i in range(0, n - span + 1):
            k = i + span
            for j in range(i + 1, k):
                if seq[i] != seq[j]:
                    continue
                u = _unify(seq[i:j], seq[j:k])
                if u is not None and len(u) >= 1:
                    seq[i:k] = [Star(concat(u))]
                    return True
    return False


def _absorb(seq: list) -> bool:
    for p, e in enumerate(seq):
        if not isinstance(e, Star):
            continue
        for q in range(len(seq), p + 1, -1):
            if _covers(e, seq[p + 1:q]):
                seq[p + 1:q] = []
                return True
        for q in range(0, p):
            if _covers(e, seq[q:p]):
                seq[q:p] = []
                return True
    return False


def fold_sample(sample: Sequence) -> list:
    """Fold one token string into a list of regex elements."""
    seq: list = [Tok(t) for t in sample]
    while _tandem(seq) or _blocks(seq) or _absorb(seq):
        pass
    return seq


def _merge(x: Regex, y: Regex) -> Regex | None:
    if x == y:
        return x
    if isinstance(x, Star) and _covers(x, [y]):
        return x
    if isinstance(y, Star) and _covers(y, [x]):
        return y
    return None


def _align(u: Sequence[Regex], v: Sequence[Regex]) -> list:
    n, m = len(u), len(v)
    merged = [[_merge(x, y) for y in v] for x in u]
    INF = float("inf")
    d = [[INF] * (m + 1) for _ in range(n + 1)]
    d[0][0] = 0
    for i in range(n + 1):
        for j in range(m + 1):
            c = d[i][j]
            if c == INF:
                continue
            if i < n and j < m:
                w = 0 if merged[i][j] is not None else 2
                if c + w < d[i + 1][j + 1]:
                    d[i + 1][j + 1] = c + w
            if i < n and c + 1 < d[i + 1][j]:
                d[i + 1][j] = c + 1
            if j < m and c + 1 < d[i][j + 1]:
                d[i][j + 1] = c + 1
    ops: list = []
    i, j = n, m
    while i or j:
        mm = merged[i - 1][j - 1] if i and j else None
        if i and j and d[i][j] == d[i - 1][j - 1] + (0 if mm is not None else 2):
            ops.append(("m", mm, None) if mm is not None else ("s", u[i - 1], v[j - 1]))
            i, j = i - 1, j - 1
        elif i and d[i][j] == d[i - 1][j] + 1:
            ops.append(("u", u[i - 1], None))
            i -= 1
        else:
            ops.append(("v", None, v[j - 1]))
            j -= 1
    ops.reverse()
    out: list = []
    k = 0
    while k < len(ops):
        kind, x, y = ops[k]
        if kind == "m":
            out.append(x)
            k += 1
        elif kind == "s":
            out.append(Alt(x, y))
            k += 1
        else:
            run = []
            while k < len(ops) and ops[k][0] == kind:
                run.append(ops[k][1] if kind == "u" else ops[k][2])
                k += 1
            out.append(Opt(concat(run)))
    return out


def learn_regex(samples: Sequence[Sequence]) -> Regex:
    uniq: list = []
    for s in samples:
        s = tuple(s)
        if s not in uniq:
            uniq.append(s)
    if not uniq:
        raise ValueError("learn_regex needs at least one sample")
    folded = [fold_sample(s) for s in uniq]
    merged = folded[0]
    for f in folded[1:]:
        merged = _align(merged, f)
    r = concat(merged)
    if all(matches(r, s) for s in uniq):
        return r
    r = alt([concat(f) for f in folded])
    if all(matches(r, s) for s in uniq):
        return r
    return alt([concat([Tok(t) for t in s]) for s in uniq])


# ---------------------------------------------------------------- rewrites

RULES = ("alt-to-concat-opt-right", "alt-to-concat-opt-left", "alt-to-opt-concat", "star-to-star-star",
         "alt-to-concat")


def _rule_results(r: Regex, parent: Regex | None) -> list:
    out = []
    if isinstance(r, Star):
        x = r.body
        if isinstance(x, Alt):
            # the guarded whole body first: it is the one shape that keeps both parts together
            out.append((4, Star(Concat(x.left, x.right))))
            out.append((2, Star(Opt(Concat(x.left, x.right)))))
            out.append((0, Star(Concat(x.left, Opt(x.right)))))
            out.append((1, Star(Concat(Opt(x.left), x.right))))
        if not isinstance(x, Star) and not isinstance(parent, Star):
            out.append((3, Star(r)))
    return out


def rewrite_once(r: Regex) -> Iterator[tuple]:
    """All single rule applications, outermost first then left to right: (rule name, result)."""
    def go(node: Regex, parent):
        for rule, res in _rule_results(node, parent):
            yield rule, res
        if isinstance(node, (Concat, Alt)):
            for rule, res in go(node.left, node):
                yield rule, type(node)(res, node.right)
            for rule, res in go(node.right, node):
                yield rule, type(node)(node.left, res)
        elif isinstance(node, (Star, Opt)):
            for rule, res in go(node.body, node):
                yield rule, type(node)(res)
    for rule, res in go(r, None):
        yield RULES[rule], res


def alt_removable(r: Regex, parent: Regex | None = None) -> bool:
    """True if every alternation is the direct body of a star, the only place the rules can remove it."""
    if isinstance(r, Alt):
        return isinstance(parent, (Star, StarPower)) and not isinstance(r.left, Alt) \
            and not isinstance(r.right, Alt) and alt_removable(r.left, r) and alt_removable(r.right, r)
    if isinstance(r, Concat):
        return alt_removable(r.left, r) and alt_removable(r.right, r)
    if isinstance(r, (Star, StarPower, Opt, Power)):
        return alt_removable(r.body, r)
    return True


def rewrite_variants(r: Regex, samples: Sequence[Sequence] = (),
                     viable: Callable[[Regex], bool] | None = None) -> Iterator[tuple]:
    """Yield (k, variant) by nondecreasing rewrite count k, then size.

    Variants rejecting a sample are dropped together with everything derived
    from them, since every rule either keeps or shrinks the language. The
    same happens to variants failing `viable`.
    """
    if viable is not None and not viable(r):
        return
    seen = {r}
    level = [r]
    k = 0
    while level:
        level.sort(key=regex_size)
        for v in level:
            yield k, v
        nxt = []
        for v in level:
            for _, w in rewrite_once(v):
                if w in seen:
                    continue
                seen.add(w)
                if (viable is None or viable(w)) and all(matches(w, s) for s in samples):
                    nxt.append(w)
        level = nxt
        k += 1


class RegexCandidateStream:
    """Alternation-free, sample-accepting regexes in (rewrite count, size) order."""

    def __init__(self, samples: Sequence[Sequence], max_regexes: int = 64):
        self.samples = [tuple(s) for s in samples]
        self.base = learn_regex(self.samples)
        self.max_regexes = max_regexes
        self.emitted: list = []
        self.keys: list = []
        self._it = rewrite_variants(self.base, self.samples, alt_removable)

    def __iter__(self):
        return self

    def __next__(self) -> Regex:
        r = next_regex(self)
        if r is None:
            raise StopIteration
        return r


def next_regex(stream: RegexCandidateStream) -> Regex | None:
    if len(stream.emitted) >= stream.max_regexes:
        return None
    for k, r in stream._it:
        if has_alt(r):
            continue
        stream.emitted.append(r)
        stream.keys.append((k, regex_size(r)))
        return r
    return None
