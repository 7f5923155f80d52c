"""Plan-following policies: the literal executor and the affordance-aware wrapper."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .. import actions as A
from ..actions import Action
from ..sim import ActionOutcome, Observation
from ..world import CLASSES, SINK_CLASS, Persistence
from .reasoners import Probe, QueryContext, Reasoner, ReasonerVerdict, VerdictState

DEFAULT_RETRIES = 2
DEFAULT_LOOP_LIMIT = 100


class ResolutionLoop(RuntimeError):
    code = "loop"


class BaselinePolicy:
    """Executes a fixed plan, retrying a failed step ``retries`` times before moving on."""

    label = "vanilla"

    def __init__(self, plan: Sequence[Action], retries: int = DEFAULT_RETRIES):
        self.plan = list(plan)
        self.retries = retries
        self.cursor = 0
        self.failures = 0

    def next_action(self, observation: Observation, probe: Probe | None = None) -> Action | None:
        if self.cursor >= len(self.plan):
            return None
        return self.plan[self.cursor]

    def _advance_on(self, outcome: ActionOutcome) -> None:
        if outcome.ok:
            self.cursor += 1
            self.failures = 0
            return
        self.failures += 1
        if self.failures > self.retries:
            self.cursor += 1
            self.failures = 0

    def notify(self, action: Action, outcome: ActionOutcome) -> None:
        self._advance_on(outcome)


@dataclass
class Deferred:
    action: Action
    target: str
    category: object
    recheck_interval: int = 1
    inserted_subplan: list[Action] = field(default_factory=list)
    completes_action: bool = False


@dataclass
class PendingActionMemory:
    """Holds at most one deferred plan step."""

    deferred: Deferred | None = None

    def defer(self, item: Deferred) -> None:
        self.deferred = item

    def clear(self) -> None:
        self.deferred = None

    @property
    def empty(self) -> bool:
        return self.deferred is None


def stage_target(action: Action, class_of) -> str | None:
    """The object whose affordance decides whether ``action`` can succeed.

    Appliance actions look at the appliance; placing into a movable
    receptacle looks at that receptacle; Pickup/Put look at the carried
    object.  Cleaning is itself the remedy, so it is never gated.
    """
    n, args = action.name, action.args
    if n in (A.OPEN, A.CLOSE, A.TOGGLE_ON, A.TOGGLE_OFF):
        cand = args[0]
    elif n in (A.HEAT, A.COOL):
        cand = args[1]
    elif n == A.PUT:
        r_cls = class_of(args[1])
        cand = args[1] if r_cls is not None and CLASSES[r_cls].mrecep else args[0]
    elif n == A.PICKUP:
        cand = args[0]
    else:
        return None
    cls = class_of(cand)
    return cand if cls is not None and CLASSES[cls].dynamic else None


class AdaptPolicy(BaselinePolicy):
    """Wraps the plan executor with affordance checks and recovery.

    Before a step that touches a dynamic-class object, the reasoner is
    asked whether that object is usable.  Temporary unavailability is waited
    out one step at a time; persistent unavailability triggers a detour to
    the sink to clean the object before the step is retried.
    """

    label = "adapt"

    def __init__(self, plan: Sequence[Action], reasoner: Reasoner, episode_id: str, sink_location: str,
                 retries: int = DEFAULT_RETRIES, recheck_interval: int = 1,
                 loop_limit: int = DEFAULT_LOOP_LIMIT):
        super().__init__(plan, retries)
        self.reasoner = reasoner
        self.episode_id = episode_id
        self.sink_location = sink_location
        self.recheck_interval = recheck_interval
        self.loop_limit = loop_limit
        self.memory = PendingActionMemory()
        self.queue: deque[Action] = deque()
        self.deferrals: dict[int, int] = {}
        self.classes: dict[str, str] = {}
        self.last_seen: dict[str, str] = {}
        self.queries: list[tuple[int, str, ReasonerVerdict]] = []
        self._source = "plan"
        self._waits_left = 0

    # -- beliefs ------------------------------------------------------------
    def _observe(self, obs: Observation) -> None:
        for v in obs.visible:
            self.classes[v["id"]] = v["class"]
            self.last_seen[v["id"]] = obs.location

    def _class_of(self, oid: str) -> str | None:
        return self.classes.get(oid)

    # -- decision -----------------------------------------------------------
    def next_action(self, observation: Observation, probe: Probe | None = None) -> Action | None:
        self._observe(observation)
        while True:
            if self.queue:
                self._source = "queue"
                return self.queue[0]
            if self._waits_left > 0:
                self._source = "wait"
                return A.wait()
            if self.cursor >= len(self.plan):
                return None
            act = self.plan[self.cursor]
            self._source = "plan"
            target = stage_target(act, self._class_of)
            if target is None:
                return act
            if target not in observation.ids():
                seen_at = self.last_seen.get(target)
                if seen_at is not None and seen_at != observation.location:
                    self._source = "queue"
                    self.queue.append(Action(A.GOTO, (seen_at,)))
                    continue
                # unlocatable: never act on an object we cannot see
                self.cursor += 1
                self.failures = 0
                continue
            verdict = self.reasoner.reason(target, observation,
                                           QueryContext(self.episode_id, observation.step), probe)
            self.queries.append((observation.step, target, verdict))
            if verdict.state is VerdictState.AVAILABLE:
                self.memory.clear()
                return act
            if verdict.state is VerdictState.NOT_VISIBLE:
                self.cursor += 1
                self.failures = 0
                continue
            n = self.deferrals.get(self.cursor, 0) + 1
            self.deferrals[self.cursor] = n
            if n > self.loop_limit:
                raise ResolutionLoop(f"{act} deferred more than {self.loop_limit} times")
            if verdict.category.persistence is Persistence.TEMPORARY:
                self.memory.defer(Deferred(act, target, verdict.category, self.recheck_interval))
                self._waits_left = self.recheck_interval
                continue
            sub = self._resolution(act, target, observation)
            if sub is None:
                return act
            subplan, completes = sub
            self.memory.defer(Deferred(act, target, verdict.category, self.recheck_interval,
                                       list(subplan), completes))
            self.queue.extend(subplan)

    def _set_aside_surface(self, obs: Observation) -> str | None:
        for v in obs.visible:
            k = CLASSES[v["class"]]
            if k.placeable and (not k.openable or v["open"]) and v["class"] != SINK_CLASS:
                return v["id"]
        for v in obs.visible:
            k = CLASSES[v["class"]]
            if k.placeable and (not k.openable or v["open"]):
                return v["id"]
        return None

    def _resolution(self, act: Action, target: str, obs: Observation):
        """Clean-at-sink detour that leaves the world as the plan expects it."""
        held = obs.holding
        here = obs.location
        sub: list[Action] = []
        surface = None
        if held is not None and held != target:
            surface = self._set_aside_surface(obs)
            if surface is None:
                return None
            sub.append(Action(A.PUT, (held, surface)))
        container = None
        if held != target:
            entry = obs.get(target)
            container = entry["inside"] if entry else None
            sub.append(Action(A.PICKUP, (target,)))
        if here != self.sink_location:
            sub.append(Action(A.GOTO, (self.sink_location,)))
        sub.append(Action(A.CLEAN, (target,)))
        if here != self.sink_location:
            sub.append(Action(A.GOTO, (here,)))
        if act.name == A.PICKUP and act.args[0] == target:
            return sub, True
        if held != target:
            if container is None:
                container = surface or self._set_aside_surface(obs)
                if container is None:
                    return None
            sub.append(Action(A.PUT, (target, container)))
            if held is not None:
                sub.append(Action(A.PICKUP, (held,)))
        return sub, False

    def notify(self, action: Action, outcome: ActionOutcome) -> None:
        if self._source == "queue":
            self.queue.popleft()
            if not self.queue and self.memory.deferred is not None:
                if self.memory.deferred.completes_action:
                    self.cursor += 1
                    self.failures = 0
                self.memory.clear()
            return
        if self._source == "wait":
            self._waits_left -= 1
            return
        if outcome.ok:
            self.memory.clear()
        self._advance_on(outcome)
