"""Expert demonstrations: compile an episode to PDDL and plan it."""

from __future__ import annotations

from dataclasses import dataclass

from ..encoding import scene_problem
from ..pddl import Domain, GroundAction, Problem, ground, household_domain, parse_goal
from ..world import Scene, shortest_path
from .search import Plan, PlanConfig, plan


@dataclass(frozen=True)
class Demonstration:
    plan: Plan
    problem: Problem

    @property
    def expert_steps(self) -> int:
        return self.plan.total_cost


def costed_actions(domain: Domain, problem: Problem, scene: Scene) -> list[GroundAction]:
    """Ground actions with Goto priced at the shortest-path distance."""
    out = []
    for a in ground(domain, problem):
        if a.name == "Goto":
            a = a.with_cost(shortest_path(scene.graph, a.args[0], a.args[1]))
        out.append(a)
    return out


def episode_problem(scene: Scene, spec, domain: Domain | None = None) -> Problem:
    """Initial state of ``spec`` (injections applied) as a planning problem.

    Occupied appliances carry a tick counter that only the WaitTick/WaitFree
    chain lowers, so any plan waits out the full occupancy on the clock.
    """
    from ..sim import reset

    domain = domain or household_domain()
    state = reset(scene, spec)
    goal = parse_goal(spec.goal, domain)
    return scene_problem(scene, state.objects, state.pose, goal, include=spec.relevant, name=spec.id or "episode")


def generate_demonstration(scene: Scene, spec, config: PlanConfig | None = None) -> Demonstration:
    """Plan an expert demonstration; raises Unsolvable or BudgetExhausted."""
    domain = household_domain()
    problem = episode_problem(scene, spec, domain)
    actions = costed_actions(domain, problem, scene)
    return Demonstration(plan(domain, problem, config, actions=actions), problem)
