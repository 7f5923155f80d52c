"""Grounding of action schemas against a problem's typed constants."""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import EQUALITY, ActionSchema, Domain, Literal, PDDLError, Problem

DEFAULT_GROUNDING_CAP = 10**6


class GroundingExplosion(PDDLError):
    pass


@dataclass(frozen=True, order=True)
class GroundAction:
    name: str
    args: tuple[str, ...]
    pre: frozenset[Literal]
    add: frozenset[Literal]
    delete: frozenset[Literal]
    cost: int = 1

    @property
    def pre_pos(self) -> frozenset[Literal]:
        return frozenset(l for l in self.pre if not l.negated)

    @property
    def pre_neg(self) -> frozenset[Literal]:
        return frozenset(l.positive() for l in self.pre if l.negated)

    def with_cost(self, cost: int) -> "GroundAction":
        return GroundAction(self.name, self.args, self.pre, self.add, self.delete, cost)

    def __str__(self) -> str:
        return f"({' '.join((self.name,) + self.args)})"


def _static_ok(lit: Literal, init: frozenset[Literal]) -> bool:
    if lit.predicate == EQUALITY:
        equal = lit.args[0] == lit.args[1]
        return equal != lit.negated
    holds = lit.positive() in init
    return holds != lit.negated


def instantiate(schema: ActionSchema, args: tuple[str, ...], cost: int | None = None) -> GroundAction:
    binding = {v: a for (v, _), a in zip(schema.params, args)}
    pre = frozenset(l.substitute(binding) for l in schema.pre if l.predicate != EQUALITY)
    add = frozenset(l.substitute(binding) for l in schema.add)
    delete = frozenset(l.substitute(binding) for l in schema.delete)
    return GroundAction(schema.name, tuple(args), pre, add, delete, schema.base_cost if cost is None else cost)


def ground(domain: Domain, problem: Problem, cap: int = DEFAULT_GROUNDING_CAP) -> list[GroundAction]:
    """All type-consistent bindings that survive static-precondition pruning.

    Static literals are checked as soon as their variables are bound, so
    hopeless partial bindings are cut early.  Output is sorted by
    (name, args).
    """
    universe = problem.universe(domain)
    static = domain.static_predicates() | {EQUALITY}
    init = problem.init
    out: list[GroundAction] = []
    for schema in domain.schemas:
        params = [v for v, _ in schema.params]
        domains = [universe.of(t) for _, t in schema.params]
        static_lits = [l for l in schema.pre if l.predicate in static]
        # check each static literal at the depth where its last variable is bound
        checks: list[list[Literal]] = [[] for _ in range(len(params) + 1)]
        for lit in static_lits:
            depth = 0
            for a in lit.args:
                if a.startswith("?"):
                    depth = max(depth, params.index(a) + 1)
            checks[depth].append(lit)
        if not all(_static_ok(l, init) for l in checks[0]):
            continue
        binding: dict[str, str] = {}

        def rec(i: int) -> None:
            if i == len(params):
                args = tuple(binding[p] for p in params)
                out.append(instantiate(schema, args))
                if len(out) > cap:
                    raise GroundingExplosion(f"more than {cap} ground actions")
                return
            for c in domains[i]:
                binding[params[i]] = c
                if all(_static_ok(l.substitute(binding), init) for l in checks[i + 1]):
                    rec(i + 1)
            binding.pop(params[i], None)

        rec(0)
    out.sort(key=lambda a: (a.name, a.args))
    return out
