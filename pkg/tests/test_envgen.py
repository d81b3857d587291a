import pytest
from hypothesis import given, settings, strategies as st

from demosynth.envgen import SCALES, env_stats, generate_env
from demosynth.envmodel import env_to_json


@pytest.mark.parametrize("scale", sorted(SCALES))
def test_magnitudes(scale):
    sc = SCALES[scale]
    stats = env_stats(generate_env(scale, 0))
    assert stats["objectTypes"] == sc.object_types
    assert abs(stats["instances"] - sc.instances) <= 0.1 * sc.instances
    assert abs(stats["propertyFacts"] - sc.facts) <= 0.1 * sc.facts
    assert stats["locations"] == sc.locations


def test_hard_instance_band():
    for seed in range(3):
        assert 998 <= env_stats(generate_env("hard", seed))["instances"] <= 1220


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6))
def test_deterministic(seed):
    assert env_to_json(generate_env("easy", seed)) == env_to_json(generate_env("easy", seed))


def test_seeds_differ():
    assert env_to_json(generate_env("easy", 0)) != env_to_json(generate_env("easy", 1))


def test_motivating_entities_present():
    env = generate_env("medium", 3)
    types = dict(env.obj_types)
    assert types["sheet1"] == "sheet" and ("dirty", "sheet1") in env.props
    assert ("on-top-of", "sheet3", "bed2") in env.rels
    assert env.current_loc == "r1"


def test_unknown_scale():
    with pytest.raises(ValueError):
        generate_env("huge")


def test_perturbed_variants_keep_the_sheet_task_runnable(e0, truth):
    from demosynth.dsl import run
    from demosynth.envgen import perturb_env
    for seed in range(5):
        v = perturb_env(e0, seed)
        assert perturb_env(e0, seed) == v
        assert len(v.locations) > len(e0.locations)
        assert sum(t == "sheet" for _, t, _ in v.objects) > 4
        trace, _ = run(truth, v)
        assert len(trace) >= 12
