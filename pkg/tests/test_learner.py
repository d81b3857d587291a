import pytest
from hypothesis import given, settings, strategies as st

from demosynth.learner import RULES, RegexCandidateStream, learn_regex, next_regex, rewrite_once, rewrite_variants
from demosynth.regexcore import (Alt, Concat, Opt, Star, Tok, abstract_trace, has_alt, matches, regex_parse,
                                 regex_print, regex_size)
from regex_oracle import A, B, C, D, all_strings, lang

AB_STAR = Star(Alt(Tok(A), Tok(B)))


def _word(s):
    return "".join("A" if t == A else "B" for t in s)


# hand-written membership predicates for each rule's result over {A, B}
SHAPES = {
    "alt-to-concat-opt-right": (Star(Concat(Tok(A), Opt(Tok(B)))),
                                lambda w: w == "" or (w[0] == "A" and "BB" not in w)),
    "alt-to-concat-opt-left": (Star(Concat(Opt(Tok(A)), Tok(B))),
                               lambda w: w == "" or (w[-1] == "B" and "AA" not in w)),
    "alt-to-opt-concat": (Star(Opt(Concat(Tok(A), Tok(B)))), lambda w: w == "AB" * (len(w) // 2)),
}


@pytest.mark.parametrize("rule", sorted(SHAPES))
def test_alt_rules_shapes_and_languages(rule):
    shape, member = SHAPES[rule]
    got = [r for name, r in rewrite_once(AB_STAR) if name == rule]
    assert got == [shape]
    for s in all_strings((A, B), 5):
        assert matches(shape, s) == member(_word(s))
        if matches(shape, s):
            assert matches(AB_STAR, s)


def test_star_star_rule():
    got = [r for name, r in rewrite_once(Star(Tok(A))) if name == "star-to-star-star"]
    assert got == [Star(Star(Tok(A)))]
    for s in all_strings((A, B), 5):
        assert matches(got[0], s) == (_word(s) == "A" * len(s))


def test_star_star_not_reapplied():
    assert [r for n, r in rewrite_once(Star(Star(Tok(A)))) if n == "star-to-star-star"] == []


def test_rule_names():
    assert RULES[:4] == ("alt-to-concat-opt-right", "alt-to-concat-opt-left", "alt-to-opt-concat",
                         "star-to-star-star")


def test_variants_include_rule_shapes():
    found = {r for _, r in rewrite_variants(AB_STAR) if regex_size(r) <= 6}
    for shape, _ in SHAPES.values():
        assert shape in found


def test_alt_free_regex_has_no_variants():
    r = Concat(Tok(A), Tok(B))
    assert [v for _, v in rewrite_variants(r)] == [r]


def test_learn_ab_aab():
    r = learn_regex([(A, B), (A, A, B)])
    assert matches(r, (A, B)) and matches(r, (A, A, B))
    assert regex_print(r) == "A[a,x]* A[b,x]"


def test_learn_single_token():
    r = learn_regex([(A,)])
    assert r in (Tok(A), Star(Tok(A)))


def test_learn_motivating(demo):
    s = abstract_trace(demo.trace, demo.env)
    r = learn_regex([s])
    assert matches(r, s)
    assert regex_print(r) == \
        "(G[room] A[open,bin] (A[grab,sheet]|A[put-in,sheet,bin])* A[close,bin])*"


def test_learn_requires_samples():
    with pytest.raises(ValueError):
        learn_regex([])


def test_motivating_stream_reaches_conditional_shapes(demo):
    s = abstract_trace(demo.trace, demo.env)
    stream = RegexCandidateStream([s])
    got = [regex_print(r) for r in stream]
    assert got[0] == "(G[room] A[open,bin] (A[grab,sheet] A[put-in,sheet,bin])* A[close,bin])*"
    assert "(G[room] A[open,bin] (A[grab,sheet] A[put-in,sheet,bin]?)* A[close,bin])*" in got
    # the three-loop shape of the hand-written program
    assert "(G[room] A[open,bin] (A[grab,sheet] A[put-in,sheet,bin])?** A[close,bin])*" in got
    assert not any(has_alt(regex_parse(x)) for x in got)


def test_stream_cap_and_order():
    stream = RegexCandidateStream([(A, B, A, B, C, A, B)], max_regexes=5)
    got = list(stream)
    assert len(got) <= 5 and next_regex(stream) is None
    assert stream.keys == sorted(stream.keys)
    assert len(set(got)) == len(got)


def _alphabet_st():
    return st.integers(1, 4).map(lambda k: [A, B, C, D][:k])


@st.composite
def sample_sets(draw):
    alpha = draw(_alphabet_st())
    strings = draw(st.lists(st.lists(st.sampled_from(alpha), max_size=12).map(tuple), min_size=1, max_size=5))
    return strings


@settings(max_examples=200, deadline=None)
@given(sample_sets())
def test_learner_and_stream_soundness(samples):
    r = learn_regex(samples)
    assert all(matches(r, s) for s in samples)
    stream = RegexCandidateStream(samples, max_regexes=16)
    emitted = list(stream)
    for v in emitted:
        assert all(matches(v, s) for s in samples)
    assert stream.keys == sorted(stream.keys)
    assert len(set(emitted)) == len(emitted)


@settings(max_examples=100, deadline=None)
@given(sample_sets())
def test_rewrites_never_grow_the_language(samples):
    r = learn_regex(samples)
    words = lang(r, 5)
    for k, v in rewrite_variants(r):
        if k > 1:
            break
        for w in lang(v, 5):
            assert w in words


def test_alt_removable():
    from demosynth.learner import alt_removable
    assert alt_removable(AB_STAR)
    assert not alt_removable(Alt(Tok(A), Tok(B)))
    assert not alt_removable(Star(Alt(Tok(A), Alt(Tok(B), Tok(D)))))



def test_unremovable_alternation_yields_nothing():
    from demosynth.learner import alt_removable
    assert list(rewrite_variants(Alt(Tok(A), Tok(B)), viable=alt_removable)) == []
