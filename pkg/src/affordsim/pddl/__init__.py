"""Typed-STRIPS PDDL subset: parsing, grounding and transition semantics."""

from importlib import resources

from .grounding import DEFAULT_GROUNDING_CAP, GroundAction, GroundingExplosion, ground, instantiate
from .parser import parse_domain, parse_goal, parse_problem
from .semantics import (
    GoalCondition,
    NotApplicable,
    applicable,
    apply,
    goal_conditions,
    goal_satisfied,
    holds,
)
from .syntax import (
    ActionSchema,
    And,
    ArityError,
    Domain,
    Exists,
    Forall,
    Formula,
    Literal,
    Not,
    Or,
    ParseError,
    PDDLError,
    Problem,
    UnknownSymbol,
    UnknownType,
    Universe,
    domain_to_pddl,
    problem_to_pddl,
    to_pddl,
)

DYNAMIC_PREDICATES = ("isClean", "cleanable", "isUsed", "isOccupied")

_HOUSEHOLD: Domain | None = None


def household_domain_text() -> str:
    return resources.files(__package__).joinpath("household.pddl").read_text(encoding="utf-8")


def household_domain() -> Domain:
    """The bundled household domain (parsed once per process)."""
    global _HOUSEHOLD
    if _HOUSEHOLD is None:
        dom = parse_domain(household_domain_text())
        missing = [p for p in DYNAMIC_PREDICATES if p not in dom.predicates]
        if missing:
            raise UnknownSymbol(f"household domain lacks dynamic predicates {missing}")
        _HOUSEHOLD = dom
    return _HOUSEHOLD


__all__ = [
    "ActionSchema", "And", "ArityError", "DEFAULT_GROUNDING_CAP", "DYNAMIC_PREDICATES", "Domain",
    "Exists", "Forall", "Formula", "GoalCondition", "GroundAction", "GroundingExplosion", "Literal", "Not",
    "NotApplicable", "Or", "PDDLError", "ParseError", "Problem", "UnknownSymbol", "UnknownType",
    "Universe", "applicable", "apply", "domain_to_pddl", "goal_conditions", "goal_satisfied", "ground",
    "holds", "household_domain", "household_domain_text", "instantiate", "parse_domain",
    "parse_goal", "parse_problem", "problem_to_pddl", "to_pddl",
]
