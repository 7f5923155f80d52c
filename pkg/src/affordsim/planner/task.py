"""Integer-indexed STRIPS task with a compiled goal and the FF relaxed-plan heuristic."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..pddl import (
    And,
    Domain,
    Exists,
    Forall,
    Formula,
    GroundAction,
    Literal,
    Not,
    Or,
    Problem,
    Universe,
)
from ..pddl.semantics import FALSE, TRUE, simplify, split_quantifier

# goal tree nodes: ("lit", fact_id, positive) | ("and", children) | ("or", children) | True | False
GoalNode = object


@dataclass(frozen=True)
class RelaxedPlanningGraph:
    fact_layers: list[frozenset[Literal]]
    action_layers: list[list[GroundAction]]
    first_level: dict[Literal, int]
    goal_level: int | None


def _push_not(f: Formula, negate: bool = False) -> Formula:
    """Negation normal form."""
    if isinstance(f, Literal):
        return f.negate() if negate else f
    if isinstance(f, Not):
        return _push_not(f.part, not negate)
    if isinstance(f, And):
        parts = tuple(_push_not(p, negate) for p in f.parts)
        return Or(parts) if negate else And(parts)
    if isinstance(f, Or):
        parts = tuple(_push_not(p, negate) for p in f.parts)
        return And(parts) if negate else Or(parts)
    if isinstance(f, Exists):
        body = _push_not(f.body, negate)
        return Forall(f.variables, body) if negate else Exists(f.variables, body)
    if isinstance(f, Forall):
        body = _push_not(f.body, negate)
        return Exists(f.variables, body) if negate else Forall(f.variables, body)
    raise TypeError(f)


class Task:
    """A grounded planning task over fact ids.

    Facts are the atoms of the initial state plus every add effect of a
    relaxed-reachable action.  Atoms that occur negatively in a
    precondition or the goal get a complementary fact in the relaxed
    problem, so the heuristic can see that e.g. a Close is needed.
    """

    def __init__(self, domain: Domain, problem: Problem, actions: Sequence[GroundAction]):
        self.domain = domain
        self.problem = problem
        self.universe: Universe = problem.universe(domain)
        self.static_preds = domain.static_predicates()
        init = problem.init
        reachable = self._reachable(init, actions)
        self.actions: list[GroundAction] = reachable
        atoms: set[Literal] = set(init)
        for a in reachable:
            atoms |= a.add
        self.facts: list[Literal] = sorted(atoms)
        self.index: dict[Literal, int] = {f: i for i, f in enumerate(self.facts)}
        idx = self.index
        self.pre_pos = [tuple(sorted(idx[l] for l in a.pre_pos)) for a in reachable]
        self.pre_neg = [tuple(sorted(idx[l] for l in a.pre_neg if l in idx)) for a in reachable]
        self.add = [tuple(sorted(idx[l] for l in a.add)) for a in reachable]
        self.dele = [tuple(sorted(idx[l] for l in a.delete if l in idx)) for a in reachable]
        self.cost = [a.cost for a in reachable]
        self.init = frozenset(idx[l] for l in init)
        self.goal = self._compile_goal(problem.goal)
        self._build_relaxed()

    # -- grounding helpers --------------------------------------------------
    @staticmethod
    def _reachable(init: frozenset[Literal], actions: Sequence[GroundAction]) -> list[GroundAction]:
        reached = set(init)
        pending = list(actions)
        keep: list[GroundAction] = []
        changed = True
        while changed:
            changed = False
            rest = []
            for a in pending:
                if a.pre_pos <= reached:
                    keep.append(a)
                    if not a.add <= reached:
                        reached |= a.add
                        changed = True
                else:
                    rest.append(a)
            pending = rest
        keep.sort(key=lambda a: (a.name, a.args))
        return keep

    def _compile_goal(self, goal: Formula) -> GoalNode:
        return self._ground_goal(_push_not(goal))

    def _known(self, atom: Literal) -> bool | None:
        """Truth of atoms that no action can change; None otherwise."""
        if atom.predicate in self.static_preds or atom not in self.index:
            return atom in self.problem.init
        return None

    def _ground_goal(self, f: Formula) -> GoalNode:
        f = simplify(f, self._known)
        if f == TRUE:
            return True
        if f == FALSE:
            return False
        if isinstance(f, Literal):
            return ("lit", self.index[f.positive()], not f.negated)
        conj = isinstance(f, (And, Forall))
        if isinstance(f, (And, Or)):
            pending = iter(f.parts)
        else:
            pending = split_quantifier(f, self.universe)
        kept = []
        for part in pending:
            child = self._ground_goal(part)
            if child is (not conj):
                return not conj
            if child is not conj:
                kept.append(child)
        if not kept:
            return conj
        if len(kept) == 1:
            return kept[0]
        return ("and" if conj else "or", tuple(kept))

    def goal_holds(self, state: frozenset[int]) -> bool:
        return _eval(self.goal, state)

    # -- successors ---------------------------------------------------------
    def applicable(self, state: frozenset[int], i: int) -> bool:
        for f in self.pre_pos[i]:
            if f not in state:
                return False
        for f in self.pre_neg[i]:
            if f in state:
                return False
        return True

    def successors(self, state: frozenset[int]):
        for i in range(len(self.actions)):
            if self.applicable(state, i):
                yield i, frozenset(state.difference(self.dele[i]).union(self.add[i]))

    def state_of(self, literals) -> frozenset[int]:
        return frozenset(self.index[l] for l in literals if l in self.index)

    # -- relaxed problem ----------------------------------------------------
    def _build_relaxed(self) -> None:
        n = len(self.facts)
        negatable: set[int] = set()
        for pn in self.pre_neg:
            negatable.update(pn)
        _collect_negative(self.goal, negatable)
        self.negatable = sorted(negatable)
        comp = {f: n + k for k, f in enumerate(self.negatable)}
        self.comp = comp
        total = n + len(comp)
        r_pre: list[list[int]] = []
        r_add: list[list[int]] = []
        pseudo: list[bool] = []
        for i in range(len(self.actions)):
            r_pre.append(list(self.pre_pos[i]) + [comp[f] for f in self.pre_neg[i]])
            r_add.append(list(self.add[i]) + [comp[f] for f in self.dele[i] if f in comp])
            pseudo.append(False)
        # goal tree -> pseudo facts and pseudo actions
        self.true_fact = total
        total += 1

        def node_fact(node) -> int:
            nonlocal total
            if node is True:
                return self.true_fact
            if node is False:
                fid = total
                total += 1
                return fid
            if node[0] == "lit":
                _, f, positive = node
                return f if positive else comp[f]
            kids = [node_fact(c) for c in node[1]]
            fid = total
            total += 1
            if node[0] == "and":
                r_pre.append(kids)
                r_add.append([fid])
                pseudo.append(True)
            else:
                for k in kids:
                    r_pre.append([k])
                    r_add.append([fid])
                    pseudo.append(True)
            return fid

        self.goal_fact = node_fact(self.goal)
        self.n_relaxed = total
        self.r_pre = r_pre
        self.r_add = r_add
        self.pseudo = pseudo
        self.pre_count = [len(p) for p in r_pre]
        pre_of: list[list[int]] = [[] for _ in range(total)]
        for a, pres in enumerate(r_pre):
            for f in pres:
                pre_of[f].append(a)
        self.pre_of = pre_of
        self.zero_pre = [a for a, p in enumerate(r_pre) if not p]

    def _relaxed_init(self, state: frozenset[int]) -> list[int]:
        facts = sorted(state)
        facts.extend(c for f, c in self.comp.items() if f not in state)
        facts.append(self.true_fact)
        return facts

    def explore(self, state: frozenset[int], stop_at_goal: bool = True):
        """Layered delete-relaxed exploration.

        Returns (fact level, fact achiever, action level) arrays.
        Pseudo actions (goal structure) fire within the layer their
        preconditions complete in.
        """
        level = [-1] * self.n_relaxed
        achiever = [-1] * self.n_relaxed
        alevel = [-1] * len(self.r_pre)
        counters = self.pre_count[:]
        pre_of, r_add, pseudo = self.pre_of, self.r_add, self.pseudo
        goal = self.goal_fact
        cur = []
        for f in self._relaxed_init(state):
            if level[f] < 0:
                level[f] = 0
                cur.append(f)
        ready: list[int] = []
        t = 0

        def fire_pseudo(a: int, stack: list[int]) -> None:
            alevel[a] = t
            for g in r_add[a]:
                if level[g] < 0:
                    level[g] = t
                    achiever[g] = a
                    stack.append(g)

        stack = cur
        for a in self.zero_pre:
            if pseudo[a]:
                fire_pseudo(a, stack)
            else:
                ready.append(a)
        while True:
            i = 0
            while i < len(stack):
                f = stack[i]
                i += 1
                for a in pre_of[f]:
                    counters[a] -= 1
                    if counters[a] == 0:
                        if pseudo[a]:
                            fire_pseudo(a, stack)
                        else:
                            ready.append(a)
            if stop_at_goal and level[goal] >= 0:
                break
            new: list[int] = []
            for a in ready:
                alevel[a] = t
                for g in r_add[a]:
                    if level[g] < 0:
                        level[g] = t + 1
                        achiever[g] = a
                        new.append(g)
            ready = []
            if not new:
                break
            t += 1
            stack = new
        return level, achiever, alevel

    def h_ff(self, state: frozenset[int]) -> int | None:
        level, achiever, _ = self.explore(state)
        if level[self.goal_fact] < 0:
            return None
        r_pre, pseudo = self.r_pre, self.pseudo
        selected: set[int] = set()
        seen: set[int] = set()
        stack = [self.goal_fact]
        while stack:
            f = stack.pop()
            if f in seen:
                continue
            seen.add(f)
            a = achiever[f]
            if a < 0:
                continue
            if not pseudo[a]:
                if a in selected:
                    continue
                selected.add(a)
            stack.extend(r_pre[a])
        return len(selected)

    def relaxed_graph(self, state: frozenset[int]) -> RelaxedPlanningGraph:
        level, _, alevel = self.explore(state, stop_at_goal=False)
        n = len(self.facts)
        depth = max(level[:n], default=0)
        fact_layers = []
        for t in range(depth + 1):
            fact_layers.append(frozenset(self.facts[f] for f in range(n) if 0 <= level[f] <= t))
        action_layers = []
        for t in range(depth + 1):
            action_layers.append(
                [self.actions[a] for a in range(len(self.actions)) if 0 <= alevel[a] <= t]
            )
        first = {self.facts[f]: level[f] for f in range(n) if level[f] >= 0}
        g = level[self.goal_fact]
        return RelaxedPlanningGraph(fact_layers, action_layers, first, g if g >= 0 else None)


def _collect_negative(node, out: set[int]) -> None:
    if node is True or node is False:
        return
    if node[0] == "lit":
        if not node[2]:
            out.add(node[1])
        return
    for c in node[1]:
        _collect_negative(c, out)


def _eval(node, state: frozenset[int]) -> bool:
    if node is True or node is False:
        return node
    kind = node[0]
    if kind == "lit":
        return (node[1] in state) == node[2]
    if kind == "and":
        return all(_eval(c, state) for c in node[1])
    return any(_eval(c, state) for c in node[1])
