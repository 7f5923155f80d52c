"""Recursive-descent parser for typed STRIPS domains and problems.

Variables may be typed with the usual ``?x - t`` or with ``?x # t``.  Actions
accept an optional ``:cost N`` field (default 1).
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    EQUALITY,
    ROOT_TYPE,
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
    Problem,
    UnknownSymbol,
    UnknownType,
)


@dataclass(frozen=True)
class Token:
    text: str
    line: int
    column: int


class SExpr(list):
    """A parenthesised list remembering where it opened."""

    line: int = 0
    column: int = 0


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, i, n = 1, 1, 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col, i = line + 1, 1, i + 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            tokens.append(Token(ch, line, col))
            i += 1
            col += 1
            continue
        start, start_col = i, col
        while i < n and not text[i].isspace() and text[i] not in "();":
            i += 1
            col += 1
        tokens.append(Token(text[start:i], line, start_col))
    return tokens


def read_sexpr(text: str) -> SExpr:
    tokens = tokenize(text)
    if not tokens:
        raise ParseError("empty input", 1, 1)
    pos = 0

    def parse() -> SExpr | Token:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok.text == ")":
            raise ParseError("unexpected ')'", tok.line, tok.column)
        if tok.text != "(":
            return tok
        node = SExpr()
        node.line, node.column = tok.line, tok.column
        while True:
            if pos >= len(tokens):
                raise ParseError("unbalanced '('", tok.line, tok.column)
            if tokens[pos].text == ")":
                pos += 1
                return node
            node.append(parse())

    tree = parse()
    if pos != len(tokens):
        extra = tokens[pos]
        raise ParseError("trailing tokens after expression", extra.line, extra.column)
    if not isinstance(tree, SExpr):
        raise ParseError("expected '('", tree.line, tree.column)
    return tree


def _where(node) -> tuple[int, int]:
    return (node.line, node.column) if hasattr(node, "line") else (0, 0)


def _atom(node, what: str) -> str:
    if not isinstance(node, Token):
        raise ParseError(f"expected {what}", *_where(node))
    return node.text


def _expect_list(node, what: str) -> SExpr:
    if not isinstance(node, SExpr):
        raise ParseError(f"expected ({what} ...)", *_where(node))
    return node


def _head(node: SExpr) -> str:
    if not node or not isinstance(node[0], Token):
        raise ParseError("expected keyword", *_where(node))
    return node[0].text.lower()


def parse_typed_list(items: list, default: str = ROOT_TYPE) -> list[tuple[str, str]]:
    """``a b - t c # u d`` -> [(a,t), (b,t), (c,u), (d,default)]."""
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    i = 0
    while i < len(items):
        text = _atom(items[i], "name")
        if text in ("-", "#"):
            if i + 1 >= len(items) or not pending:
                raise ParseError("dangling type marker", *_where(items[i]))
            t = _atom(items[i + 1], "type name")
            out.extend((p, t) for p in pending)
            pending = []
            i += 2
            continue
        pending.append(text)
        i += 1
    out.extend((p, default) for p in pending)
    return out


class _Context:
    def __init__(self, types: dict[str, str], predicates: dict[str, tuple[str, ...]], constants: dict[str, str]):
        self.types = types
        self.predicates = predicates
        self.constants = constants

    def check_type(self, t: str, node) -> None:
        if t != ROOT_TYPE and t not in self.types:
            raise UnknownType(f"unknown type {t!r} at line {_where(node)[0]}")

    def literal(self, node: SExpr, scope: dict[str, str], negated: bool = False) -> Literal:
        name = _atom(node[0], "predicate")
        args = tuple(_atom(a, "argument") for a in node[1:])
        if name == EQUALITY:
            if len(args) != 2:
                raise ArityError(f"'=' takes 2 arguments at line {node.line}")
        else:
            if name not in self.predicates:
                raise UnknownSymbol(f"undeclared predicate {name!r} at line {node.line}")
            if len(self.predicates[name]) != len(args):
                raise ArityError(
                    f"{name} expects {len(self.predicates[name])} arguments, got {len(args)} "
                    f"at line {node.line}"
                )
        for a in args:
            if a.startswith("?") and a not in scope:
                raise UnknownSymbol(f"unbound variable {a} at line {node.line}")
        return Literal(name, args, negated)

    def formula(self, node, scope: dict[str, str]) -> Formula:
        node = _expect_list(node, "formula")
        if not node:
            raise ParseError("empty formula", node.line, node.column)
        head = _head(node)
        if head == "and":
            return And(tuple(self.formula(p, scope) for p in node[1:]))
        if head == "or":
            return Or(tuple(self.formula(p, scope) for p in node[1:]))
        if head == "not":
            if len(node) != 2:
                raise ParseError("not takes one argument", node.line, node.column)
            inner = self.formula(node[1], scope)
            if isinstance(inner, Literal):
                return inner.negate()
            return Not(inner)
        if head in ("exists", "forall"):
            if len(node) != 3:
                raise ParseError(f"{head} takes a variable list and a body", node.line, node.column)
            variables = tuple(parse_typed_list(_expect_list(node[1], "variables")))
            for _, t in variables:
                self.check_type(t, node)
            inner_scope = {**scope, **dict(variables)}
            body = self.formula(node[2], inner_scope)
            return Exists(variables, body) if head == "exists" else Forall(variables, body)
        if head in ("imply", "when"):
            raise ParseError(f"unsupported construct {head!r}", node.line, node.column)
        return self.literal(node, scope)

    def conjunction(self, node, scope: dict[str, str], allow_negation: bool = True) -> tuple[Literal, ...]:
        f = self.formula(node, scope)
        parts = f.parts if isinstance(f, And) else (f,)
        out = []
        for p in parts:
            if not isinstance(p, Literal):
                raise ParseError("only conjunctions of literals are supported here", *_where(node))
            if p.negated and not allow_negation:
                raise ParseError("negation not allowed here", *_where(node))
            out.append(p)
        return tuple(out)


def _sections(root: SExpr, kind: str) -> tuple[str, list[SExpr]]:
    if _head(root) != "define" or len(root) < 2:
        raise ParseError("expected (define ...)", root.line, root.column)
    header = _expect_list(root[1], kind)
    if len(header) != 2 or _head(header) != kind:
        raise ParseError(f"expected ({kind} <name>)", header.line, header.column)
    return _atom(header[1], "name"), [_expect_list(s, "section") for s in root[2:]]


def parse_domain(text: str) -> Domain:
    root = read_sexpr(text)
    name, sections = _sections(root, "domain")
    requirements: tuple[str, ...] = ()
    types: dict[str, str] = {}
    predicates: dict[str, tuple[str, ...]] = {}
    constants: dict[str, str] = {}
    action_nodes: list[SExpr] = []
    for sec in sections:
        head = _head(sec)
        if head == ":requirements":
            requirements = tuple(_atom(r, "requirement") for r in sec[1:])
        elif head == ":types":
            for child, parent in parse_typed_list(sec[1:]):
                if child != ROOT_TYPE:
                    types[child] = parent
        elif head == ":constants":
            constants.update(parse_typed_list(sec[1:]))
        elif head == ":predicates":
            for p in sec[1:]:
                p = _expect_list(p, "predicate")
                pname = _atom(p[0], "predicate name")
                if pname in predicates:
                    raise ParseError(f"duplicate predicate {pname}", p.line, p.column)
                predicates[pname] = tuple(t for _, t in parse_typed_list(p[1:]))
        elif head == ":action":
            action_nodes.append(sec)
        else:
            raise ParseError(f"unsupported section {head}", sec.line, sec.column)

    for parent in set(types.values()):
        if parent != ROOT_TYPE and parent not in types:
            raise UnknownType(f"undeclared parent type {parent!r}")
    ctx = _Context(types, predicates, constants)
    for arg_types in predicates.values():
        for t in arg_types:
            ctx.check_type(t, root)
    for c, t in constants.items():
        ctx.check_type(t, root)

    schemas = []
    for node in action_nodes:
        schemas.append(_parse_action(node, ctx))
    names = [s.name for s in schemas]
    if len(names) != len(set(names)):
        raise ParseError("duplicate action names", root.line, root.column)
    return Domain(name, types, predicates, tuple(schemas), constants, requirements)


def _parse_action(node: SExpr, ctx: _Context) -> ActionSchema:
    name = _atom(node[1], "action name")
    fields: dict[str, object] = {}
    i = 2
    while i < len(node):
        key = _atom(node[i], "action field").lower()
        if i + 1 >= len(node):
            raise ParseError(f"missing value for {key}", node[i].line, node[i].column)
        fields[key] = node[i + 1]
        i += 2
    params = tuple(parse_typed_list(_expect_list(fields.get(":parameters", SExpr()), "parameters")))
    for _, t in params:
        ctx.check_type(t, node)
    scope = dict(params)
    pre: tuple[Literal, ...] = ()
    if ":precondition" in fields:
        pre_node = fields[":precondition"]
        if isinstance(pre_node, SExpr) and len(pre_node) == 0:
            pre = ()
        else:
            pre = ctx.conjunction(pre_node, scope)
    add: list[Literal] = []
    delete: list[Literal] = []
    if ":effect" in fields:
        eff_node = fields[":effect"]
        if not (isinstance(eff_node, SExpr) and len(eff_node) == 0):
            for lit in ctx.conjunction(eff_node, scope):
                if lit.predicate == EQUALITY:
                    raise ParseError("equality in effect", *_where(eff_node))
                (delete if lit.negated else add).append(lit.positive())
    cost = 1
    if ":cost" in fields:
        try:
            cost = int(_atom(fields[":cost"], "cost"))
        except ValueError:
            raise ParseError("cost must be an integer", *_where(fields[":cost"])) from None
        if cost < 1:
            raise ParseError("cost must be positive", *_where(fields[":cost"]))
    overlap = set(add) & set(delete)
    if overlap:
        raise ParseError(f"{name}: add and delete overlap on {sorted(map(str, overlap))}", node.line, node.column)
    return ActionSchema(name, params, pre, tuple(add), tuple(delete), cost)


def parse_problem(text: str, domain: Domain) -> Problem:
    root = read_sexpr(text)
    name, sections = _sections(root, "problem")
    domain_name = domain.name
    objects: dict[str, str] = {}
    init: list[Literal] = []
    goal: Formula = And(())
    init_nodes: list = []
    goal_node = None
    for sec in sections:
        head = _head(sec)
        if head == ":domain":
            domain_name = _atom(sec[1], "domain name")
        elif head == ":objects":
            objects.update(parse_typed_list(sec[1:]))
        elif head == ":init":
            init_nodes.extend(sec[1:])
        elif head == ":goal":
            if len(sec) != 2:
                raise ParseError(":goal takes one formula", sec.line, sec.column)
            goal_node = sec[1]
        else:
            raise ParseError(f"unsupported section {head}", sec.line, sec.column)
    if domain_name != domain.name:
        raise ParseError(f"problem targets domain {domain_name!r}, not {domain.name!r}", root.line, root.column)
    ctx = _Context(domain.types, domain.predicates, domain.constants)
    for o, t in objects.items():
        ctx.check_type(t, root)
    known = {**domain.constants, **objects}
    for n in init_nodes:
        n = _expect_list(n, "fact")
        lit = ctx.literal(n, {})
        _check_constants(lit, known, domain, n)
        init.append(lit)
    if goal_node is not None:
        goal = ctx.formula(goal_node, {})
        _check_formula_constants(goal, known, domain, goal_node)
    return Problem(name, domain_name, objects, frozenset(init), goal)


def _check_constants(lit: Literal, known: dict[str, str], domain: Domain, node) -> None:
    if lit.predicate == EQUALITY:
        return
    for a, t in zip(lit.args, domain.predicates[lit.predicate]):
        if a.startswith("?"):
            continue
        if a not in known:
            raise UnknownSymbol(f"unknown constant {a!r} at line {_where(node)[0]}")
        if not domain.is_subtype(known[a], t):
            raise UnknownType(f"{a} is a {known[a]}, expected {t} at line {_where(node)[0]}")


def _check_formula_constants(f: Formula, known, domain, node) -> None:
    if isinstance(f, Literal):
        _check_constants(f, known, domain, node)
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            _check_formula_constants(p, known, domain, node)
    elif isinstance(f, Not):
        _check_formula_constants(f.part, known, domain, node)
    else:
        _check_formula_constants(f.body, known, domain, node)


def parse_goal(text: str, domain: Domain, objects: dict[str, str] | None = None) -> Formula:
    """Parse a standalone goal formula; constants are checked when ``objects`` is given."""
    node = read_sexpr(text)
    ctx = _Context(domain.types, domain.predicates, domain.constants)
    goal = ctx.formula(node, {})
    if objects is not None:
        _check_formula_constants(goal, {**domain.constants, **objects}, domain, node)
    return goal
