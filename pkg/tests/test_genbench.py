import json

import jsonschema
import pytest

from conftest import SMALL_CONFIG
from affordsim.genbench import (
    GEN_CONFIG_SCHEMA,
    UNSEEN_SEED_OFFSET,
    Dataset,
    GenConfig,
    NoDynamicObject,
    TargetCountUnreachable,
    build_dataset,
    compatible_tasks,
    difficulty_of,
    difficulty_violations,
    inject_affordance,
    render_instructions,
    scene_for,
    scene_seed,
)
from affordsim.tasks import Difficulty, EpisodeSpec, Mode, TaskSpec, TaskType
from affordsim.world import CLASSES, AffordanceCategory, Category


def test_compatible_tasks_respect_counts(kitchen):
    counts = kitchen.class_counts()
    opts = compatible_tasks(kitchen)
    for tt, specs in opts.items():
        for t in specs:
            assert t.receptacle in counts and CLASSES[t.receptacle].placeable
            moved = t.mrecep or t.target
            hosts = {kitchen.objects[o.inside].cls for o in kitchen.instances(moved) if o.inside}
            assert t.receptacle not in hosts
            if tt is TaskType.PICK_TWO_AND_PLACE:
                assert counts[t.target] == 2
            else:
                assert counts[t.target] == 1
            if tt is TaskType.STACK_AND_PLACE:
                assert CLASSES[t.target].category is Category.PLAIN and CLASSES[t.mrecep].mrecep
    assert set(opts) == set(TaskType)


def test_bathroom_supports_cleaning(bathroom):
    opts = compatible_tasks(bathroom)
    assert TaskType.CLEAN_AND_PLACE in opts
    assert TaskType.HEAT_AND_PLACE not in opts


def test_task_spec_requires_mrecep_only_for_stack():
    with pytest.raises(ValueError):
        TaskSpec(TaskType.STACK_AND_PLACE, "Apple", "CounterTop")
    with pytest.raises(ValueError):
        TaskSpec(TaskType.PICK_AND_PLACE, "Apple", "CounterTop", "Pot")


def test_difficulty_rules():
    assert difficulty_of(TaskSpec(TaskType.HEAT_AND_PLACE, "Mug", "CounterTop")) is Difficulty.ADVANCED
    assert difficulty_of(TaskSpec(TaskType.HEAT_AND_PLACE, "Apple", "CounterTop")) is Difficulty.BASIC
    assert difficulty_of(TaskSpec(TaskType.CLEAN_AND_PLACE, "Mug", "CounterTop")) is Difficulty.BASIC


def test_injection_rules(kitchen):
    task = TaskSpec(TaskType.HEAT_AND_PLACE, "Mug", "DiningTable")
    mug = kitchen.instances("Mug")[0].id
    mw = kitchen.instances("Microwave")[0].id
    apple = kitchen.instances("Apple")[0].id
    assert inject_affordance(task, kitchen, "static", "Advanced", 1, [mug, mw]) == ()
    for seed in range(30):
        basic = inject_affordance(task, kitchen, "dynamic", "Basic", seed, [mug, mw, apple])
        assert len(basic) == 1 and basic[0].object_id in (mug, mw)
        adv = inject_affordance(task, kitchen, "dynamic", "Advanced", seed, [mug, mw], (5, 30))
        assert {i.object_id for i in adv} == {mug, mw}
        occ = [i for i in adv if i.category is AffordanceCategory.OCCUPIED]
        assert len(occ) == 1 and 5 <= occ[0].param <= 30
    with pytest.raises(NoDynamicObject):
        inject_affordance(task, kitchen, "dynamic", "Basic", 0, [apple])
    with pytest.raises(NoDynamicObject):
        inject_affordance(task, kitchen, "dynamic", "Advanced", 0, [mw])


def test_instructions(kitchen):
    task = TaskSpec(TaskType.STACK_AND_PLACE, "Apple", "DiningTable", "Bowl")
    for k in range(3, 7):
        anns = render_instructions(task, kitchen, k, seed=4)
        assert len(anns) == k
        assert len({a.goal_text for a in anns}) == k
        for a in anns:
            assert "{" not in a.goal_text and a.step_texts
            assert "apple" in a.goal_text.lower() and "bowl" in a.goal_text.lower()
    assert render_instructions(task, kitchen, 3, 4) == render_instructions(task, kitchen, 3, 4)
    for bad in (2, 7):
        with pytest.raises(ValueError):
            render_instructions(task, kitchen, bad)


def test_instructions_never_mention_hidden_state(kitchen):
    for tt in TaskType:
        task = next(iter(compatible_tasks(kitchen)[tt]))
        for a in render_instructions(task, kitchen, 6):
            text = (a.goal_text + " ".join(a.step_texts)).lower()
            assert "dirty" not in text and "occupied" not in text and "busy" not in text


def test_default_config_is_schema_valid():
    jsonschema.validate(GenConfig().to_dict(), GEN_CONFIG_SCHEMA)
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({"n_demos": 0}, GEN_CONFIG_SCHEMA)
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({"bogus": 1}, GEN_CONFIG_SCHEMA)


def test_seen_and_unseen_scene_pools_disjoint():
    cfg = GenConfig(seed=2)
    seen = {scene_for(cfg, i, True).seed for i in range(cfg.n_scenes_seen)}
    unseen = {scene_for(cfg, i, False).seed for i in range(cfg.n_scenes_unseen)}
    assert not seen & unseen
    assert all(s >= UNSEEN_SEED_OFFSET for s in unseen)
    assert scene_seed(cfg, 0, False) - scene_seed(cfg, 0, True) == UNSEEN_SEED_OFFSET


def test_small_dataset_composition(small_ds):
    m = small_ds.manifest
    c = m["counts"]
    assert c["episodes"] == SMALL_CONFIG["n_demos"] == len(small_ds.episodes)
    assert c["static"] == round(SMALL_CONFIG["n_demos"] * 0.5)
    assert sum(c["cells"].values()) == c["episodes"]
    assert not set(m["scenes"]["seen"]) & set(m["scenes"]["unseen"])
    for e in small_ds.episodes:
        assert difficulty_violations(e, small_ds.scene(e)) == []
        assert (e.mode is Mode.DYNAMIC) == bool(e.injections)
        assert 3 <= len(e.annotations) <= 6
        assert e.static_plan and e.expert_steps >= 1
        assert e.scene_id in (m["scenes"]["seen"] if e.seen else m["scenes"]["unseen"])
        if e.split == "train":
            assert e.seen
        if e.mode is Mode.STATIC:
            assert e.expert == e.static_plan


def test_dataset_round_trip(small_ds, tmp_path):
    small_ds.write(tmp_path / "ds")
    again = Dataset.load(tmp_path / "ds")
    assert [e.to_json() for e in again.episodes] == [e.to_json() for e in small_ds.episodes]
    assert {k: v.to_json() for k, v in again.scenes.items()} == {k: v.to_json() for k, v in small_ds.scenes.items()}
    ep = json.loads((tmp_path / "ds" / "episodes" / f"{small_ds.episodes[0].id}.json").read_text())
    assert "expert" not in ep and "expert_steps" not in ep


def test_episode_json_round_trip(small_ds):
    for e in small_ds.episodes[:10]:
        assert EpisodeSpec.from_json(e.to_json()).to_json() == e.to_json()


def test_generation_is_deterministic_and_parallel_safe():
    cfg = dict(n_demos=8, seed=21, n_scenes_seen=2, n_scenes_unseen=1)
    a = build_dataset(GenConfig(**cfg))
    b = build_dataset(GenConfig(**cfg, parallel=2))
    assert [e.to_json() for e in a.episodes] == [e.to_json() for e in b.episodes]
    assert json.dumps(a.manifest, sort_keys=True) == json.dumps(
        {**b.manifest, "config": {**b.manifest["config"], "parallel": 1}}, sort_keys=True)


def test_retry_budget_exhaustion():
    # only Stack tasks, which bathrooms cannot host
    cfg = GenConfig(n_demos=1, seed=0, kitchen_fraction=0.0, retry_budget=2,
                    task_weights={"StackAndPlace": 1.0})
    with pytest.raises(TargetCountUnreachable):
        build_dataset(cfg)
