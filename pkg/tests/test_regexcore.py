import random

import pytest
from hypothesis import given, settings, strategies as st

from demosynth.dsl import ActEv, GotoEv, run
from demosynth.envmodel import make_env
from demosynth.errors import ParseError, ValidationError
from demosynth.regexcore import (Alt, Concat, Eps, Opt, Power, Star, StarPower, Tok, abstract_trace, act_tok, alt,
                                 concat, format_tokens, goto_tok, has_alt, matches, normalize, parse_tokens,
                                 regex_parse, regex_print, regex_size)
from progen import random_env, random_program
from regex_oracle import A, B, C, all_strings, lang, regexes

G_ROOM = goto_tok("room")
OPEN, CLOSE = act_tok("open", "bin"), act_tok("close", "bin")
GRAB, PUT = act_tok("grab", "sheet"), act_tok("put-in", "sheet", "bin")


def test_abstract_demo(demo):
    toks = abstract_trace(demo.trace, demo.env)
    expected = [G_ROOM, OPEN, GRAB, PUT, CLOSE, G_ROOM, OPEN, GRAB, PUT, GRAB, PUT, CLOSE]
    assert list(toks) == expected
    assert str(toks[3]) == "A[put-in,sheet,bin]"
    assert abstract_trace([], demo.env) == ()


def test_abstract_unknown_id(e0):
    with pytest.raises(ValidationError):
        abstract_trace([ActEv("grab", ("zz",))], e0)
    with pytest.raises(ValidationError):
        abstract_trace([GotoEv("zz")], e0)


def test_correct_regex_accepts_demo(demo):
    s = abstract_trace(demo.trace, demo.env)
    r = regex_parse("(G[room] A[open,bin] (A[grab,sheet] A[put-in,sheet,bin])?** A[close,bin])*")
    assert matches(r, s)
    single_loop = regex_parse("(G[room] A[open,bin] (A[grab,sheet] A[put-in,sheet,bin])^2 A[close,bin])^2")
    assert not matches(single_loop, s)


def test_eps_only_empty():
    assert matches(Eps(), ())
    assert not matches(Eps(), (A,))


def test_power_zero_matches_only_empty():
    assert matches(Power(Tok(A), 0), ())
    assert not matches(Power(Tok(A), 0), (A,))
    with pytest.raises(ValidationError):
        Power(Tok(A), -1)


def test_sizes():
    assert regex_size(Tok(A)) == 1
    assert regex_size(Star(Concat(Tok(A), Tok(B)))) == 4


def test_print_examples():
    r = Star(Concat(Tok(G_ROOM), Opt(Tok(OPEN))))
    assert regex_print(r) == "(G[room] A[open,bin]?)*"
    assert regex_parse("A[a,x]^3") == Power(Tok(A), 3)
    assert regex_parse("A[a,x]^*") == StarPower(Tok(A))
    assert regex_parse("()") == Eps()


def test_parse_errors():
    for bad in ("(A[a,x]", "A[a]", "G[a,b]", "A[a,x] )", "|"):
        with pytest.raises(ParseError):
            regex_parse(bad)


def test_token_strings():
    s = (G_ROOM, OPEN, PUT)
    assert parse_tokens(format_tokens(s)) == s
    assert parse_tokens("") == ()


@settings(max_examples=1000, deadline=None)
@given(regexes())
def test_print_parse_round_trip(r):
    assert regex_parse(regex_print(r)) == r


@settings(max_examples=300, deadline=None)
@given(regexes(max_leaves=8))
def test_matcher_agrees_with_oracle(r):
    if regex_size(r) > 12:
        return
    words = lang(r, 6)
    for s in all_strings((A, B, C), 5):
        assert matches(r, s) == (s in words)


@settings(max_examples=100, deadline=None)
@given(regexes(max_leaves=4), st.integers(0, 3))
def test_power_is_repeated_concat(r, n):
    expanded = concat([r] * n)
    for s in all_strings((A, B), 5):
        assert matches(Power(r, n), s) == matches(expanded, s)


@settings(max_examples=200, deadline=None)
@given(regexes(max_leaves=6))
def test_normalize_preserves_language(r):
    n = normalize(r)
    for s in all_strings((A, B, C), 4):
        assert matches(r, s) == matches(n, s)


def test_normalize_expands_single_loop_form():
    r = regex_parse("(G[room] A[open,bin] (A[grab,sheet] A[put-in,sheet,bin])^2 A[close,bin])^2")
    flat = regex_parse(" ".join(["G[room] A[open,bin] A[grab,sheet] A[put-in,sheet,bin] A[grab,sheet] "
                                 "A[put-in,sheet,bin] A[close,bin]"] * 2))
    assert normalize(r) == normalize(flat)


def test_alt_and_has_alt():
    assert alt([Tok(A), Tok(A)]) == Tok(A)
    assert has_alt(Star(Alt(Tok(A), Tok(B))))
    assert not has_alt(Star(Opt(Tok(A))))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_abstraction_ignores_ids(seed):
    rng = random.Random(seed)
    env = random_env(rng)
    prog = random_program(rng)
    try:
        trace, _ = run(prog, env)
    except Exception:
        return
    rename = {o: f"x_{o}" for o, _, _ in env.objects}
    env2 = make_env(env.vocab, env.locations, [(rename[o], t, l) for o, t, l in env.objects], env.current_loc,
                    [(p, rename[o]) for p, o in env.props], [(r, rename[a], rename[b]) for r, a, b in env.rels])
    trace2, _ = run(prog, env2)
    assert abstract_trace(trace, env) == abstract_trace(trace2, env2)
