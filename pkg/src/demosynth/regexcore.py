"""Token alphabet, trace abstraction and regular expressions over tokens."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .dsl import GotoEv
from .envmodel import Environment
from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class Token:
    kind: str  # "G" for goto, "A" for actions
    name: str  # location type for G, action name for A
    types: tuple = ()

    def __str__(self) -> str:
        if self.kind == "G":
            return f"G[{self.name}]"
        return "A[" + ",".join((self.name,) + self.types) + "]"


def goto_tok(loc_type: str) -> Token:
    return Token("G", loc_type)


def act_tok(action: str, *types: str) -> Token:
    return Token("A", action, tuple(types))


class Regex:
    __slots__ = ()


@dataclass(frozen=True)
class Eps(Regex):
    pass


@dataclass(frozen=True)
class Tok(Regex):
    tok: Token


@dataclass(frozen=True)
class Concat(Regex):
    left: Regex
    right: Regex


@dataclass(frozen=True)
class Alt(Regex):
    left: Regex
    right: Regex


@dataclass(frozen=True)
class Star(Regex):
    body: Regex


@dataclass(frozen=True)
class Opt(Regex):
    body: Regex


@dataclass(frozen=True)
class Power(Regex):
    body: Regex
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValidationError("Power exponent must be nonnegative")


@dataclass(frozen=True)
class StarPower(Regex):
    """Loop of unknown iteration count; same language as Star."""
    body: Regex


def concat(parts: Sequence[Regex]) -> Regex:
    """Right-nested concatenation; empty gives Eps."""
    parts = [p for p in parts if not isinstance(p, Eps)]
    if not parts:
        return Eps()
    r = parts[-1]
    for p in reversed(parts[:-1]):
        r = Concat(p, r)
    return r


def alt(parts: Sequence[Regex]) -> Regex:
    out: list = []
    for p in parts:
        if p not in out:
            out.append(p)
    r = out[-1]
    for p in reversed(out[:-1]):
        r = Alt(p, r)
    return r


def concat_items(r: Regex) -> list:
    """Flatten a concat spine into a list (Eps contributes nothing)."""
    out: list = []
    stack = [r]
    while stack:
        x = stack.pop()
        if isinstance(x, Concat):
            stack.append(x.right)
            stack.append(x.left)
        elif not isinstance(x, Eps):
            out.append(x)
    return out


def alt_items(r: Regex) -> list:
    out: list = []
    stack = [r]
    while stack:
        x = stack.pop()
        if isinstance(x, Alt):
            stack.append(x.right)
            stack.append(x.left)
        else:
            out.append(x)
    return out


def regex_size(r: Regex) -> int:
    if isinstance(r, (Eps, Tok)):
        return 1
    if isinstance(r, (Concat, Alt)):
        return 1 + regex_size(r.left) + regex_size(r.right)
    return 1 + regex_size(r.body)


def has_alt(r: Regex) -> bool:
    if isinstance(r, Alt):
        return True
    if isinstance(r, Concat):
        return has_alt(r.left) or has_alt(r.right)
    if isinstance(r, (Star, Opt, Power, StarPower)):
        return has_alt(r.body)
    return False


def normalize(r: Regex) -> Regex:
    """Structural normal form: powers expanded, StarPower as Star, concat right-nested, Eps dropped."""
    if isinstance(r, (Eps, Tok)):
        return r
    if isinstance(r, Concat):
        return concat([y for x in concat_items(r) for y in concat_items(normalize(x))])
    if isinstance(r, Alt):
        return alt([normalize(x) for x in alt_items(r)])
    if isinstance(r, Power):
        return concat(concat_items(normalize(r.body)) * r.n)
    if isinstance(r, (Star, StarPower)):
        return Star(normalize(r.body))
    return Opt(normalize(r.body))


# ---------------------------------------------------------------- abstraction

def abstract_event(ev, env: Environment) -> Token:
    if isinstance(ev, GotoEv):
        t = env.loc_types.get(ev.loc)
        if t is None:
            raise ValidationError(f"unknown location id {ev.loc!r}")
        return goto_tok(t)
    types = []
    for a in ev.args:
        t = env.obj_types.get(a)
        if t is None:
            raise ValidationError(f"unknown object id {a!r}")
        types.append(t)
    return act_tok(ev.action, *types)


def abstract_trace(trace, env: Environment) -> tuple:
    return tuple(abstract_event(e, env) for e in trace)


# ---------------------------------------------------------------- matching

class _Matcher:
    """Computes, for a node and a start position, the set of reachable end positions."""

    def __init__(self, s: Sequence[Token]):
        self.s = s
        self.memo: dict = {}

    def ends(self, r: Regex, i: int) -> frozenset:
        key = (id(r), i)
        got = self.memo.get(key)
        if got is not None:
            return got
        res = self._ends(r, i)
        self.memo[key] = res
        return res

    def _seq(self, parts: Sequence[Regex], starts: frozenset) -> frozenset:
        cur = starts
        for p in parts:
            if not cur:
                break
            nxt: set = set()
            for j in cur:
                nxt |= self.ends(p, j)
            cur = frozenset(nxt)
        return cur

    def _closure(self, body: Regex, i: int) -> frozenset:
        seen = {i}
        todo = [i]
        while todo:
            j = todo.pop()
            for k in self.ends(body, j):
                if k not in seen:
                    seen.add(k)
                    todo.append(k)
        return frozenset(seen)

    def _ends(self, r: Regex, i: int) -> frozenset:
        s = self.s
        if isinstance(r, Eps):
            return frozenset((i,))
        if isinstance(r, Tok):
            return frozenset((i + 1,)) if i < len(s) and s[i] == r.tok else frozenset()
        if isinstance(r, Concat):
            return self._seq(concat_items(r), frozenset((i,)))
        if isinstance(r, Alt):
            return self.ends(r.left, i) | self.ends(r.right, i)
        if isinstance(r, Opt):
            return self.ends(r.body, i) | {i}
        if isinstance(r, (Star, StarPower)):
            return self._closure(r.body, i)
        if isinstance(r, Power):
            return self._seq([r.body] * r.n, frozenset((i,)))
        raise ValidationError(f"not a regex: {r!r}")


def matches(r: Regex, s: Sequence[Token]) -> bool:
    return len(s) in _Matcher(s).ends(r, 0)


# ---------------------------------------------------------------- text syntax

_RTOK = re.compile(r"\s*(?:(?P<tok>[GA]\[[^\]]*\])|(?P<pow>\^(?:\d+|\*))|(?P<op>[()|*?]))")


def regex_print(r: Regex) -> str:
    return _pr(r, 0)


def _pr(r: Regex, ctx: int) -> str:
    # ctx: 0 top/alt operand, 1 concat operand, 2 postfix operand
    if isinstance(r, Eps):
        return "()"
    if isinstance(r, Tok):
        return str(r.tok)
    if isinstance(r, Alt):
        s = _pr(r.left, 1) + "|" + _pr(r.right, 0)
        return f"({s})" if ctx > 0 else s
    if isinstance(r, Concat):
        s = _pr(r.left, 2 if isinstance(r.left, Concat) else 1) + " " + _pr(r.right, 1)
        return f"({s})" if ctx > 1 else s
    inner = _pr(r.body, 2)
    if isinstance(r, Star):
        return inner + "*"
    if isinstance(r, Opt):
        return inner + "?"
    if isinstance(r, Power):
        return f"{inner}^{r.n}"
    return inner + "^*"


def regex_parse(text: str) -> Regex:
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _RTOK.match(text, pos)
        if not m:
            raise ParseError(f"bad regex syntax at offset {pos}: {text[pos:pos + 10]!r}", 1, pos + 1)
        toks.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    i = 0

    def peek():
        return toks[i]

    def err(msg):
        raise ParseError(msg, 1, peek()[2] + 1)

    def p_alt():
        nonlocal i
        left = p_concat()
        if peek()[1] == "|":
            i += 1
            return Alt(left, p_alt())
        return left

    def p_concat():
        left = p_post()
        if peek()[0] == "tok" or peek()[1] == "(":
            return Concat(left, p_concat())
        return left

    def p_post():
        nonlocal i
        r = p_atom()
        while True:
            kind, val, _ = peek()
            if val == "*":
                r = Star(r)
            elif val == "?":
                r = Opt(r)
            elif kind == "pow":
                r = StarPower(r) if val == "^*" else Power(r, int(val[1:]))
            else:
                return r
            i += 1

    def p_atom():
        nonlocal i
        kind, val, _ = peek()
        if kind == "tok":
            i += 1
            parts = [x.strip() for x in val[2:-1].split(",")]
            if val[0] == "G":
                if len(parts) != 1:
                    err("G token takes one location type")
                return Tok(goto_tok(parts[0]))
            if len(parts) not in (2, 3):
                err("A token takes an action and one or two types")
            return Tok(act_tok(*parts))
        if val == "(":
            i += 1
            if peek()[1] == ")":
                i += 1
                return Eps()
            r = p_alt()
            if peek()[1] != ")":
                err("expected ')'")
            i += 1
            return r
        err("expected token or '('")

    r = p_alt()
    if peek()[0] != "eof":
        err("trailing input")
    return r


def parse_tokens(text: str) -> tuple:
    """Parse a whitespace separated token string such as 'G[room] A[open,bin]'."""
    r = regex_parse(text) if text.strip() else Eps()
    out = []
    for x in concat_items(r):
        if not isinstance(x, Tok):
            raise ParseError("token string may contain only tokens")
        out.append(x.tok)
    return tuple(out)


def format_tokens(s: Sequence[Token]) -> str:
    return " ".join(str(t) for t in s)
