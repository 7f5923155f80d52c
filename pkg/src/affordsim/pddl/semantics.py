"""STRIPS transition semantics and goal evaluation over ground states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .grounding import GroundAction
from .syntax import (
    EQUALITY,
    And,
    Exists,
    Forall,
    Formula,
    Literal,
    Not,
    Or,
    PDDLError,
    Universe,
    to_pddl,
)

State = frozenset  # of positive ground Literals


class NotApplicable(PDDLError):
    pass


def applicable(state: State, action: GroundAction) -> bool:
    for lit in action.pre:
        if (lit.positive() in state) == lit.negated:
            return False
    return True


def apply(state: State, action: GroundAction) -> State:
    if not applicable(state, action):
        raise NotApplicable(str(action))
    return frozenset((state - action.delete) | action.add)


def substitute(f: Formula, binding: dict[str, str]) -> Formula:
    if isinstance(f, Literal):
        return f.substitute(binding)
    if isinstance(f, And):
        return And(tuple(substitute(p, binding) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(substitute(p, binding) for p in f.parts))
    if isinstance(f, Not):
        return Not(substitute(f.part, binding))
    inner = {k: v for k, v in binding.items() if k not in dict(f.variables)}
    return type(f)(f.variables, substitute(f.body, inner))


TRUE = And(())
FALSE = Or(())


def simplify(f: Formula, truth: Callable[[Literal], bool | None]) -> Formula:
    """Partially evaluate ground literals whose truth is known.

    ``truth`` maps a ground positive atom to True/False, or None when it is
    unknown.  Known-true and known-false subformulas collapse to TRUE/FALSE
    (the empty conjunction and disjunction).
    """
    if isinstance(f, Literal):
        if not f.is_ground():
            return f
        if f.predicate == EQUALITY:
            value = f.args[0] == f.args[1]
        else:
            value = truth(f.positive())
            if value is None:
                return f
        return TRUE if value != f.negated else FALSE
    if isinstance(f, (And, Or)):
        conj = isinstance(f, And)
        absorbing, neutral = (FALSE, TRUE) if conj else (TRUE, FALSE)
        parts = []
        for p in f.parts:
            q = simplify(p, truth)
            if q == absorbing:
                return absorbing
            if q != neutral:
                parts.append(q)
        if len(parts) == 1:
            return parts[0]
        return type(f)(tuple(parts))
    if isinstance(f, Not):
        q = simplify(f.part, truth)
        if q == TRUE:
            return FALSE
        if q == FALSE:
            return TRUE
        return Not(q)
    body = simplify(f.body, truth)
    # sound for any domain, including an empty one
    if isinstance(f, Exists) and body == FALSE:
        return FALSE
    if isinstance(f, Forall) and body == TRUE:
        return TRUE
    return type(f)(f.variables, body)


def split_quantifier(f: Exists | Forall, universe: Universe) -> Iterable[Formula]:
    """Instances of a quantified formula with its first variable bound."""
    (v, t), rest = f.variables[0], f.variables[1:]
    inner = type(f)(rest, f.body) if rest else f.body
    for c in universe.of(t):
        yield substitute(inner, {v: c})


def holds(f: Formula, state: State, universe: Universe) -> bool:
    """Evaluate a closed formula; quantifiers enumerate typed constants.

    Variables are bound one at a time and the partially ground formula is
    simplified after each binding, so hopeless branches are cut early.
    """
    f = simplify(f, state.__contains__)
    return _holds(f, state, universe)


def _holds(f: Formula, state: State, universe: Universe) -> bool:
    if f == TRUE:
        return True
    if f == FALSE:
        return False
    if isinstance(f, Literal):
        raise PDDLError(f"free variable in {f}")
    if isinstance(f, And):
        return all(_holds(p, state, universe) for p in f.parts)
    if isinstance(f, Or):
        return any(_holds(p, state, universe) for p in f.parts)
    if isinstance(f, Not):
        return not _holds(f.part, state, universe)
    branches = (holds(g, state, universe) for g in split_quantifier(f, universe))
    return any(branches) if isinstance(f, Exists) else all(branches)


@dataclass(frozen=True)
class GoalCondition:
    formula: Formula

    def satisfied(self, state: State, universe: Universe) -> bool:
        return holds(self.formula, state, universe)

    def __str__(self) -> str:
        return to_pddl(self.formula)


def goal_conditions(goal: Formula) -> list[GoalCondition]:
    """Top-level conjuncts of the goal; each counts as one scored condition."""
    if isinstance(goal, And):
        out: list[GoalCondition] = []
        for p in goal.parts:
            if isinstance(p, And):
                out.extend(goal_conditions(p))
            else:
                out.append(GoalCondition(p))
        return out
    return [GoalCondition(goal)]


def goal_satisfied(state: State, goal: Formula, universe: Universe) -> bool:
    return holds(goal, state, universe)
