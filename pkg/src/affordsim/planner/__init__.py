"""FF-style forward planning over the household domain."""

from .search import (
    ASTAR,
    GBFS,
    BudgetExhausted,
    Plan,
    PlanConfig,
    Unsolvable,
    Validation,
    compile_task,
    final_state,
    h_ff,
    plan,
    relaxed_planning_graph,
    search,
    validate_plan,
)
from .demonstration import Demonstration, costed_actions, episode_problem, generate_demonstration
from .task import RelaxedPlanningGraph, Task

__all__ = [
    "ASTAR", "BudgetExhausted", "Demonstration", "GBFS", "Plan", "PlanConfig", "RelaxedPlanningGraph", "Task",
    "Unsolvable", "Validation", "compile_task", "costed_actions", "episode_problem", "final_state", "generate_demonstration", "h_ff", "plan",
    "relaxed_planning_graph", "search", "validate_plan",
]
