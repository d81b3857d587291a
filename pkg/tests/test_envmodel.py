import json

import pytest
from hypothesis import given, settings, strategies as st

from demosynth.envmodel import (LOC_R, ActionRule, Environment, Vocabulary, apply_action, env_from_json,
                                env_to_json, load_env, locs, objs, save_env)
from demosynth.errors import ActionPrecondition, ValidationError


def test_objs_in_declaration_order(e0):
    assert objs(e0, "r1", "sheet") == ["s1", "s2"]
    assert objs(e0, "r2", "sheet") == ["s3", "s4"]
    assert objs(e0, "r1", "chair") == []


def test_objs_after_grab(e0):
    e = apply_action(e0, "grab", ["s1"])
    assert objs(e, "r1", "sheet") == ["s2"]
    assert objs(e, LOC_R, "sheet") == ["s1"]
    assert not e.has_rel("on-top-of", "s1", "b1")


def test_objs_unknown_names(e0):
    with pytest.raises(ValidationError, match="basement"):
        objs(e0, "basement", "sheet")
    with pytest.raises(ValidationError, match="unicorn"):
        objs(e0, "r1", "unicorn")


def test_locs(e0):
    assert locs(e0, "room") == ["r1", "r2"]
    with pytest.raises(ValidationError):
        locs(e0, "basement")
    assert locs(apply_action(e0, "grab", ["s1"]), "room") == ["r1", "r2"]


def test_loaded_facts(e0):
    for p, o in [("dirty", "s1"), ("dirty", "s3"), ("dirty", "s4"), ("closed", "bn1")]:
        assert e0.has_prop(p, o)
    assert not e0.has_prop("dirty", "s2")
    assert e0.has_rel("on-top-of", "s1", "b1")


def test_open_adds_opened(e0):
    e = apply_action(e0, "open", ["bn1"])
    assert e.has_prop("opened", "bn1") and not e.has_prop("closed", "bn1")
    assert e0.has_prop("closed", "bn1")  # input untouched


def test_put_in_needs_open_target(e0):
    with pytest.raises(ActionPrecondition) as info:
        apply_action(e0, "put-in", ["s1", "bn1"])
    assert info.value.atom == "opened(bn1)"


def test_put_in_effects(e0):
    e = apply_action(apply_action(e0, "open", ["bn1"]), "grab", ["s1"])
    e = apply_action(e, "put-in", ["s1", "bn1"])
    assert e.has_rel("inside-of", "s1", "bn1")
    assert not e.has_prop("empty", "bn1")
    assert e.obj_locs["s1"] == "r1"


def test_unknown_action_and_object(e0):
    with pytest.raises(ValidationError):
        apply_action(e0, "fly", ["s1"])
    with pytest.raises(ValidationError):
        apply_action(e0, "grab", ["nothing"])
    with pytest.raises(ValidationError):
        apply_action(e0, "grab", ["s1", "s2"])


def test_round_trip(e0, tmp_path):
    save_env(e0, tmp_path / "e.json")
    assert load_env(tmp_path / "e.json") == e0
    assert env_from_json(env_to_json(e0)) == e0


def test_undeclared_object_in_interp(e0, tmp_path):
    d = env_to_json(e0)
    d["properties"].append(["dirty", "ghost"])
    (tmp_path / "bad.json").write_text(json.dumps(d))
    with pytest.raises(ValidationError, match="ghost"):
        load_env(tmp_path / "bad.json")


def test_bad_json_reports_line(tmp_path):
    (tmp_path / "bad.json").write_text("{\n  nope\n}")
    with pytest.raises(ValidationError, match="line 2"):
        load_env(tmp_path / "bad.json")


def test_current_loc_must_be_a_location(e0):
    d = env_to_json(e0)
    d["currentLoc"] = LOC_R
    with pytest.raises(ValidationError):
        env_from_json(d)


def test_action_rule_validation():
    with pytest.raises(ValidationError):
        ActionRule("bad", 3, ("any", "any", "any"))
    with pytest.raises(ValidationError):
        ActionRule("bad", 1, ("any",), effects=(("add-prop", "on", 1),))
    r = ActionRule("bad", 1, ("any",), effects=(("add-prop", "on", 0),))
    assert ActionRule.from_json(r.to_json()) == r


def test_vocabulary_round_trip(e0):
    v = e0.vocab
    assert Vocabulary.from_json(v.to_json()) == v
    assert "put-in" in v.binary_actions and "open" in v.unary_actions


def _snapshot(e: Environment):
    return e.obj_locs, e.prop_set, e.rel_set


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_frame_property(e0, data):
    """An action changes only facts and placements of the objects it names."""
    vocab = e0.vocab
    name = data.draw(st.sampled_from([r.name for r in vocab.actions]))
    rule = vocab.rule(name)
    ids = [o for o, _, _ in e0.objects]
    args = data.draw(st.lists(st.sampled_from(ids), min_size=rule.arity, max_size=rule.arity))
    try:
        e1 = apply_action(e0, name, args)
    except ActionPrecondition:
        return
    locs0, props0, rels0 = _snapshot(e0)
    locs1, props1, rels1 = _snapshot(e1)
    assert set(locs0) == set(locs1)
    assert e1.locations == e0.locations
    touched = set(args)
    for o in locs0:
        if o not in touched:
            assert locs0[o] == locs1[o]
    for fact in props0 ^ props1:
        assert fact[1] in touched
    for fact in rels0 ^ rels1:
        assert fact[1] in touched or fact[2] in touched


def test_scan_determinism(e0):
    again = env_from_json(env_to_json(e0))
    assert objs(e0, "r2", "sheet") == objs(again, "r2", "sheet")
