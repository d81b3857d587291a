import random

from hypothesis import given, settings, strategies as st

from demosynth.dsl import (ActUnary, Demonstration, Goto, HoleVar, ScanLoc, ScanObj, is_complete,
                           parse_program, run)
from demosynth.envmodel import LOC_R
from demosynth.errors import DemoSynthError
from demosynth.pruner import (STAR, TOP, AbstractEnvironment, Cell, Infeasible, Pruner, alpha, compatible, join,
                              leq, loop_invariant, partial_eval, prog_to_regex, scan_cards, update_abs_env)
from demosynth.regexcore import abstract_trace, matches, normalize, regex_parse
from progen import hollow, random_env, random_program


def _trial(seed: int):
    """(program, env, trace, hollowed) with a nonempty trace, or None."""
    rng = random.Random(seed)
    env = random_env(rng)
    prog = random_program(rng, 2, 4)
    try:
        trace, _ = run(prog, env)
    except DemoSynthError:
        return None
    if not trace:
        return None
    return prog, env, tuple(trace), hollow(prog, rng, rng.choice((0.2, 0.4, 0.7)))


def test_soundness_harness():
    trials = 0
    seed = 0
    while trials < 250:
        case = _trial(seed)
        seed += 1
        if case is None:
            continue
        prog, env, trace, partial = case
        trials += 1
        d = Demonstration(env, trace)
        pr = Pruner([d])
        s = abstract_trace(trace, env)
        for p in (prog, partial):
            res, r = pr.explain(p)
            assert not isinstance(res, Infeasible), (seed, res)
            assert matches(r, s), seed
            assert matches(prog_to_regex(res, alpha(env), env.vocab), s), seed
        assert pr.compatible(partial)
    assert trials >= 200


def test_single_loop_incompatible_and_regex(demo, single_loop):
    pr = Pruner([demo])
    assert not pr.compatible(single_loop)
    _, r = pr.explain(single_loop)
    want = regex_parse("(G[room] A[open,bin] (A[grab,sheet] A[put-in,sheet,bin])^2 A[close,bin])^2")
    assert normalize(r) == normalize(want)


def test_ground_truth_compatible(demo, truth):
    assert compatible(truth, [demo])


def test_partial_eval_unrolls_known_scans(e0):
    prog = parse_program("foreach (v in scanLoc(room)) { goto(v); }")
    res = partial_eval(prog, e0)
    assert res == parse_program("goto(@r1); goto(@r2);")


def test_partial_eval_failures(e0):
    res = partial_eval(parse_program("let v := getNth(scanObj(bin), 2); actUnary(open, v);"), e0)
    assert isinstance(res, Infeasible)
    res = partial_eval(parse_program("let b := getNth(scanObj(bin), 0); let s := getNth(scanObj(sheet), 0); "
                                     "actBinary(put-in, s, b);"), e0)
    assert isinstance(res, Infeasible)


def test_partial_eval_keeps_holes(e0):
    prog = parse_program("foreach (v in scanLoc(room)) { goto(v); foreach (s in scanObj(sheet)) { "
                         "if (??:cond) { actUnary(grab, s); } } }")
    res = partial_eval(prog, e0)
    assert not isinstance(res, Infeasible) and not is_complete(res)
    assert isinstance(partial_eval(parse_program("goto(??:var:room);"), e0), Infeasible)


def test_scan_cards(e0):
    a = alpha(e0)
    assert scan_cards(a, ScanLoc("room")) == {2}
    assert scan_cards(a, ScanObj("sheet")) == {2}
    assert scan_cards(a, ScanObj("bed")) == {1}
    assert scan_cards(a, ScanObj("fridge")) == {0}


def test_goto_unions_locations(e0):
    a = alpha(e0)
    b = update_abs_env(a, Goto(HoleVar("room")), e0.vocab)
    assert b.cur_locs == frozenset({"r1", "r2"})
    assert scan_cards(b, ScanObj("sheet")) == {2}
    assert leq(a, b) and not leq(b, a)


def test_grab_moves_into_robot(e0):
    a = alpha(e0)
    b = update_abs_env(a, ActUnary("grab", HoleVar("sheet")), e0.vocab)
    assert leq(a, join(a, b))
    assert "s1" in b.cell(LOC_R, "sheet").may


def test_top_cells(e0):
    a = alpha(e0)
    t = a.copy()
    t.cells[("r1", "sheet")] = TOP
    assert leq(a, t) and not leq(t, a)
    assert scan_cards(t, ScanObj("sheet")) == {STAR}


def test_loop_invariant_is_stable(e0):
    body = parse_program("actUnary(grab, ??:var:sheet);")
    inv = loop_invariant(alpha(e0), body, e0.vocab)
    again = join(inv, update_abs_env(inv, body, e0.vocab))
    assert again == inv and leq(alpha(e0), inv)


# lattice laws over random abstract environments
def _cells():
    objs = st.frozensets(st.sampled_from("abcd"), max_size=4)
    cell = st.one_of(st.just(TOP), st.tuples(objs, objs).map(lambda p: Cell(p[0] & p[1], p[0] | p[1])))
    return st.dictionaries(st.tuples(st.sampled_from(["l1", "l2"]), st.sampled_from(["x", "y"])), cell, max_size=4)


absenv = st.builds(lambda locs, cells: AbstractEnvironment(frozenset(locs), {"room": ("l1", "l2")}, cells),
                   st.sets(st.sampled_from(["l1", "l2"]), min_size=1), _cells())


@settings(max_examples=200)
@given(absenv, absenv, absenv)
def test_join_is_least_upper_bound(a, b, c):
    j = join(a, b)
    assert leq(a, j) and leq(b, j)
    assert join(a, b) == join(b, a)
    assert join(a, a) == a
    if leq(a, c) and leq(b, c):
        assert leq(j, c)


@settings(max_examples=200)
@given(absenv, absenv)
def test_scan_cards_monotone(a, b):
    j = join(a, b)
    for t in ("x", "y"):
        small, big = scan_cards(a, ScanObj(t)), scan_cards(j, ScanObj(t))
        assert STAR in big or small <= big


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_pruning_never_rejects_true_completions(seed):
    case = _trial(seed)
    if case is None:
        return
    prog, env, trace, partial = case
    assert compatible(partial, [Demonstration(env, trace)])
