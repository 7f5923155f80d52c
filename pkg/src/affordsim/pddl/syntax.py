"""AST for the supported PDDL fragment plus a pretty-printer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union


class PDDLError(Exception):
    pass


class ParseError(PDDLError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ArityError(PDDLError):
    pass


class UnknownType(PDDLError):
    pass


class UnknownSymbol(PDDLError):
    pass


ROOT_TYPE = "object"
EQUALITY = "="


@dataclass(frozen=True, order=True)
class Literal:
    predicate: str
    args: tuple[str, ...] = ()
    negated: bool = False

    def positive(self) -> "Literal":
        return Literal(self.predicate, self.args) if self.negated else self

    def negate(self) -> "Literal":
        return Literal(self.predicate, self.args, not self.negated)

    def is_ground(self) -> bool:
        return not any(a.startswith("?") for a in self.args)

    def substitute(self, binding: dict[str, str]) -> "Literal":
        return Literal(self.predicate, tuple(binding.get(a, a) for a in self.args), self.negated)

    def __str__(self) -> str:
        return to_pddl(self)


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...] = ()


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...] = ()


@dataclass(frozen=True)
class Not:
    part: "Formula"


@dataclass(frozen=True)
class Exists:
    variables: tuple[tuple[str, str], ...]
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    variables: tuple[tuple[str, str], ...]
    body: "Formula"


Formula = Union[Literal, And, Or, Not, Exists, Forall]


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...]
    pre: tuple[Literal, ...]
    add: tuple[Literal, ...]
    delete: tuple[Literal, ...]
    base_cost: int = 1


@dataclass(frozen=True)
class Domain:
    name: str
    types: dict[str, str]  # child -> parent
    predicates: dict[str, tuple[str, ...]]
    schemas: tuple[ActionSchema, ...]
    constants: dict[str, str] = field(default_factory=dict)
    requirements: tuple[str, ...] = ()

    def schema(self, name: str) -> ActionSchema:
        for s in self.schemas:
            if s.name == name:
                return s
        raise KeyError(name)

    def is_subtype(self, t: str, ancestor: str) -> bool:
        seen = set()
        while t not in seen:
            if t == ancestor:
                return True
            seen.add(t)
            if t == ROOT_TYPE:
                return False
            t = self.types.get(t, ROOT_TYPE)
        return False

    def static_predicates(self) -> frozenset[str]:
        fluent = {l.predicate for s in self.schemas for l in s.add + s.delete}
        return frozenset(p for p in self.predicates if p not in fluent)

    def __hash__(self) -> int:
        return hash((self.name, self.schemas))


@dataclass(frozen=True)
class Problem:
    name: str
    domain_name: str
    objects: dict[str, str]
    init: frozenset[Literal]
    goal: Formula

    def universe(self, domain: Domain) -> "Universe":
        return Universe.build(domain, {**domain.constants, **self.objects})


@dataclass(frozen=True)
class Universe:
    """Constants grouped by (transitive) type, each group sorted."""

    by_type: dict[str, tuple[str, ...]]

    @classmethod
    def build(cls, domain: Domain, objects: dict[str, str]) -> "Universe":
        types = set(domain.types) | set(domain.types.values()) | {ROOT_TYPE}
        groups: dict[str, list[str]] = {t: [] for t in types}
        for name, t in objects.items():
            for anc in types:
                if domain.is_subtype(t, anc):
                    groups[anc].append(name)
        return cls({t: tuple(sorted(v)) for t, v in groups.items()})

    def of(self, t: str) -> tuple[str, ...]:
        try:
            return self.by_type[t]
        except KeyError:
            raise UnknownType(t) from None


# -- printing ------------------------------------------------------------------

def _typed(vars_: tuple[tuple[str, str], ...], sep: str = "-") -> str:
    return " ".join(f"{v} {sep} {t}" for v, t in vars_)


def to_pddl(f: Formula) -> str:
    if isinstance(f, Literal):
        atom = f"({' '.join((f.predicate,) + f.args)})"
        return f"(not {atom})" if f.negated else atom
    if isinstance(f, And):
        return "(and" + "".join(" " + to_pddl(p) for p in f.parts) + ")"
    if isinstance(f, Or):
        return "(or" + "".join(" " + to_pddl(p) for p in f.parts) + ")"
    if isinstance(f, Not):
        return f"(not {to_pddl(f.part)})"
    if isinstance(f, Exists):
        return f"(exists ({_typed(f.variables)}) {to_pddl(f.body)})"
    if isinstance(f, Forall):
        return f"(forall ({_typed(f.variables)}) {to_pddl(f.body)})"
    raise TypeError(f)


def domain_to_pddl(d: Domain) -> str:
    lines = [f"(define (domain {d.name})"]
    if d.requirements:
        lines.append(f"  (:requirements {' '.join(d.requirements)})")
    by_parent: dict[str, list[str]] = {}
    for child, parent in d.types.items():
        by_parent.setdefault(parent, []).append(child)
    if by_parent:
        chunks = [f"{' '.join(sorted(cs))} - {p}" for p, cs in sorted(by_parent.items())]
        lines.append(f"  (:types {' '.join(chunks)})")
    if d.constants:
        lines.append("  (:constants " + " ".join(f"{c} - {t}" for c, t in d.constants.items()) + ")")
    lines.append("  (:predicates")
    for name, arg_types in d.predicates.items():
        args = " ".join(f"?a{i} - {t}" for i, t in enumerate(arg_types))
        lines.append(f"    ({name}{' ' + args if args else ''})")
    lines.append("  )")
    for s in d.schemas:
        lines.append(f"  (:action {s.name}")
        lines.append(f"    :parameters ({_typed(s.params)})")
        lines.append(f"    :precondition {to_pddl(And(s.pre))}")
        effects = tuple(s.add) + tuple(l.negate() for l in s.delete)
        lines.append(f"    :effect {to_pddl(And(effects))}")
        if s.base_cost != 1:
            lines.append(f"    :cost {s.base_cost}")
        lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"


def problem_to_pddl(p: Problem) -> str:
    lines = [f"(define (problem {p.name})", f"  (:domain {p.domain_name})"]
    lines.append("  (:objects")
    for name, t in p.objects.items():
        lines.append(f"    {name} - {t}")
    lines.append("  )")
    lines.append("  (:init")
    for lit in sorted(p.init):
        lines.append(f"    {to_pddl(lit)}")
    lines.append("  )")
    lines.append(f"  (:goal {to_pddl(p.goal)})")
    lines.append(")")
    return "\n".join(lines) + "\n"
