"""Forward state-space search: greedy best-first on h_ff and uniform-cost A*."""

from __future__ import annotations

import heapq
import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

from ..pddl import (
    Domain,
    Formula,
    GroundAction,
    Literal,
    PDDLError,
    Problem,
    applicable,
    apply,
    goal_satisfied,
    ground,
    instantiate,
)
from ..pddl.grounding import DEFAULT_GROUNDING_CAP
from .task import RelaxedPlanningGraph, Task


class Unsolvable(PDDLError):
    pass


class BudgetExhausted(PDDLError):
    pass


GBFS = "gbfs"
ASTAR = "astar"


@dataclass(frozen=True)
class PlanConfig:
    strategy: str = GBFS
    max_expansions: int = 200_000
    grounding_cap: int = DEFAULT_GROUNDING_CAP


@dataclass
class Plan:
    steps: list[GroundAction] = field(default_factory=list)

    @property
    def total_cost(self) -> int:
        return sum(a.cost for a in self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def to_records(self) -> list[dict]:
        return [{"action": a.name, "args": list(a.args), "cost": a.cost} for a in self.steps]

    def to_json(self) -> str:
        return json.dumps(self.to_records(), separators=(",", ":"))

    @classmethod
    def from_records(cls, records: Sequence[dict], domain: Domain) -> "Plan":
        steps = []
        for r in records:
            steps.append(instantiate(domain.schema(r["action"]), tuple(r["args"]), int(r["cost"])))
        return cls(steps)


@dataclass(frozen=True)
class Validation:
    ok: bool
    step: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate_plan(domain: Domain, problem: Problem, plan: Plan) -> Validation:
    """Replay a plan from the initial state; report the first failing step."""
    universe = problem.universe(domain)
    state = problem.init
    for k, a in enumerate(plan.steps):
        if not applicable(state, a):
            return Validation(False, k, f"{a} not applicable")
        state = apply(state, a)
    if not goal_satisfied(state, problem.goal, universe):
        return Validation(False, len(plan.steps), "goal not satisfied")
    return Validation(True)


def compile_task(domain: Domain, problem: Problem, actions: Sequence[GroundAction] | None = None,
                 cap: int = DEFAULT_GROUNDING_CAP) -> Task:
    if actions is None:
        actions = ground(domain, problem, cap=cap)
    return Task(domain, problem, actions)


def h_ff(state, goal: Formula, ground_actions: Sequence[GroundAction], domain: Domain,
         problem: Problem) -> int | None:
    """Relaxed-plan length from ``state`` (None when the goal is relaxed-unreachable).

    Convenience wrapper that compiles a task around ``state``; search code
    uses :meth:`Task.h_ff` directly.
    """
    p = Problem(problem.name, problem.domain_name, problem.objects, frozenset(state), goal)
    task = Task(domain, p, ground_actions)
    return task.h_ff(task.init)


def relaxed_planning_graph(domain: Domain, problem: Problem,
                           actions: Sequence[GroundAction] | None = None) -> RelaxedPlanningGraph:
    task = compile_task(domain, problem, actions)
    return task.relaxed_graph(task.init)


def _extract(parents: dict, state) -> list[int]:
    out = []
    while parents[state] is not None:
        state, a = parents[state]
        out.append(a)
    out.reverse()
    return out


def search(task: Task, strategy: str = GBFS, max_expansions: int = 200_000) -> list[int]:
    """Return action indices of a plan.

    GBFS orders by (h, g, generation order); successors are generated in
    lexicographic (name, args) order, so ties resolve lexicographically.
    ASTAR is uniform-cost (h = 0) and therefore optimal in total cost.
    """
    init = task.init
    counter = itertools.count()
    parents: dict = {init: None}
    g_best = {init: 0}
    if strategy == GBFS:
        h0 = task.h_ff(init)
        if h0 is None:
            raise Unsolvable("goal unreachable under delete relaxation")
        heap = [(h0, 0, next(counter), init)]
    elif strategy == ASTAR:
        heap = [(0, next(counter), init)]
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    closed: set = set()
    expansions = 0
    while heap:
        entry = heapq.heappop(heap)
        state = entry[-1]
        g = entry[1] if strategy == GBFS else entry[0]
        if state in closed:
            continue
        if strategy == ASTAR and g > g_best[state]:
            continue
        if task.goal_holds(state):
            return _extract(parents, state)
        closed.add(state)
        expansions += 1
        if expansions > max_expansions:
            raise BudgetExhausted(f"more than {max_expansions} expansions")
        for i, succ in task.successors(state):
            if succ in closed:
                continue
            ng = g + task.cost[i]
            if strategy == GBFS:
                if succ in parents:
                    continue
                h = task.h_ff(succ)
                if h is None:
                    closed.add(succ)
                    continue
                parents[succ] = (state, i)
                g_best[succ] = ng
                heapq.heappush(heap, (h, ng, next(counter), succ))
            else:
                if ng < g_best.get(succ, ng + 1):
                    g_best[succ] = ng
                    parents[succ] = (state, i)
                    heapq.heappush(heap, (ng, next(counter), succ))
    raise Unsolvable("search space exhausted")


def plan(domain: Domain, problem: Problem, config: PlanConfig | None = None,
         actions: Sequence[GroundAction] | None = None) -> Plan:
    config = config or PlanConfig()
    task = compile_task(domain, problem, actions, cap=config.grounding_cap)
    idx = search(task, config.strategy, config.max_expansions)
    return Plan([task.actions[i] for i in idx])


def final_state(problem: Problem, plan_: Plan) -> frozenset[Literal]:
    state = problem.init
    for a in plan_.steps:
        state = apply(state, a)
    return state
