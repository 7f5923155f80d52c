import random

import pytest

import oracles as O
from affordsim.actions import from_record
from affordsim.pddl import household_domain, parse_domain, parse_problem
from affordsim.planner import (
    ASTAR,
    BudgetExhausted,
    Plan,
    PlanConfig,
    Unsolvable,
    compile_task,
    final_state,
    generate_demonstration,
    h_ff,
    plan,
    validate_plan,
)
from affordsim.pddl import ground
from affordsim.sim import replay, score_goal
from affordsim.tasks import EpisodeSpec, TaskSpec, TaskType, goal_text

COURIER = parse_domain(O.LOGISTICS_DOMAIN)


def instance(seed):
    rng = random.Random(seed)
    if seed % 2:
        return COURIER, parse_problem(O.random_courier(rng), COURIER)
    dt, pt = O.random_propositional(rng)
    d = parse_domain(dt)
    return d, parse_problem(pt, d)


def solvable(start, min_len=1):
    for seed in range(start, start + 200):
        d, p = instance(seed)
        try:
            if len(plan(d, p, PlanConfig(ASTAR))) >= min_len:
                return d, p
        except Unsolvable:
            pass
    raise AssertionError("no solvable instance")


def oracle_cost(d, p):
    acts = O.ground_all(d, p)
    init = frozenset((l.predicate, *l.args) for l in p.init)
    groups = O.typed_objects(d, p.objects)
    return O.uniform_cost(init, acts, lambda s: O.evaluate(p.goal, s, groups)), acts, init, groups


@pytest.mark.parametrize("seed", range(1000, 1030))
def test_astar_cost_and_gbfs_validity_against_oracle(seed):
    d, p = instance(seed)
    cost, acts, init, groups = oracle_cost(d, p)
    if cost is None:
        with pytest.raises(Unsolvable):
            plan(d, p, PlanConfig(ASTAR))
        with pytest.raises(Unsolvable):
            plan(d, p)
        return
    assert plan(d, p, PlanConfig(ASTAR)).total_cost == cost
    g = plan(d, p)
    assert validate_plan(d, p, g).ok
    end = O.run_plan(init, acts, [(a.name, a.args) for a in g.steps])
    assert end is not None and O.evaluate(p.goal, end, groups)
    assert g.total_cost >= cost


def test_search_is_deterministic():
    d, p = solvable(7)
    assert plan(d, p).to_json() == plan(d, p).to_json()


def test_plan_records_round_trip():
    d, p = solvable(3)
    pl = plan(d, p)
    again = Plan.from_records(pl.to_records(), d)
    assert again.steps == pl.steps
    assert final_state(p, again) == final_state(p, pl)


def test_validate_plan_reports_first_bad_step():
    d, p = solvable(5, min_len=2)
    pl = plan(d, p)
    broken = Plan(pl.steps[1:])
    v = validate_plan(d, p, broken)
    assert not v.ok
    v2 = validate_plan(d, p, Plan(pl.steps[:-1]))
    assert not v2.ok and v2.step == len(pl) - 1 and "goal" in v2.reason


def test_budget_exhausted():
    d, p = solvable(1, min_len=3)
    with pytest.raises(BudgetExhausted):
        plan(d, p, PlanConfig(ASTAR, max_expansions=1))


def test_h_ff_zero_at_goal_and_none_when_relaxed_unreachable():
    d = parse_domain("(define (domain t) (:predicates (p) (q) (r)) "
                     "(:action a :parameters () :precondition (p) :effect (q)) "
                     "(:action b :parameters () :precondition (r) :effect (p)))")
    p = parse_problem("(define (problem x) (:domain t) (:init (p)) (:goal (q)))", d)
    acts = ground(d, p)
    assert h_ff(p.init, p.goal, acts, d, p) == 1
    assert h_ff(frozenset(p.init | {next(iter(acts[0].add))}), p.goal, acts, d, p) == 0
    assert h_ff(frozenset(), p.goal, acts, d, p) is None


@pytest.mark.parametrize("seed", range(2000, 2040))
def test_relaxed_unreachable_implies_unsolvable(seed):
    d, p = instance(seed)
    task = compile_task(d, p)
    if task.h_ff(task.init) is None:
        assert oracle_cost(d, p)[0] is None


TASKS = [
    TaskSpec(TaskType.PICK_AND_PLACE, "Apple", "DiningTable"),
    TaskSpec(TaskType.CLEAN_AND_PLACE, "Mug", "Shelf"),
    TaskSpec(TaskType.HEAT_AND_PLACE, "Potato", "DiningTable"),
    TaskSpec(TaskType.COOL_AND_PLACE, "Tomato", "DiningTable"),
    TaskSpec(TaskType.PICK_TWO_AND_PLACE, "Plate", "DiningTable"),
    TaskSpec(TaskType.STACK_AND_PLACE, "Egg", "DiningTable", "Bowl"),
]


@pytest.mark.parametrize("task", TASKS, ids=lambda t: t.task_type.value)
def test_demonstrations_replay_in_simulator(kitchen, task):
    from affordsim.world import CLASSES

    relevant = tuple(sorted(o.id for o in kitchen.objects.values() if o.cls in task.movable_classes))
    spec = EpisodeSpec(id="demo", scene_id=kitchen.id, task=task,
                       goal=goal_text(task, CLASSES[task.target].cleanable), relevant=relevant)
    demo = generate_demonstration(kitchen, spec)
    actions = [from_record(r) for r in demo.plan.to_records()]
    state, _ = replay(kitchen, spec, actions)
    assert score_goal(state, spec.goal).success
    assert state.step_count == demo.expert_steps


def test_dataset_expert_costs_equal_simulated_steps(small_ds):
    for e in small_ds.episodes:
        state, _ = replay(small_ds.scene(e), e, [from_record(r) for r in e.expert])
        assert score_goal(state, e.goal).success, e.id
        assert state.step_count == e.expert_steps, e.id


def test_household_domain_grounds_costs(kitchen):
    from affordsim.planner import costed_actions, episode_problem
    from affordsim.world import shortest_path

    task = TASKS[0]
    spec = EpisodeSpec(id="c", scene_id=kitchen.id, task=task, goal=goal_text(task, False),
                       relevant=tuple(o.id for o in kitchen.instances("Apple")))
    p = episode_problem(kitchen, spec)
    for a in costed_actions(household_domain(), p, kitchen):
        if a.name == "Goto":
            assert a.cost == shortest_path(kitchen.graph, *a.args)
        elif a.name in ("Heat", "Cool"):
            assert a.cost == 4
