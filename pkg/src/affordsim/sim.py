"""Episode state machine with latent preconditions, timers and goal scoring."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import actions as A
from .actions import Action
from .encoding import problem_objects, project
from .pddl import Formula, GroundAction, goal_conditions, household_domain, instantiate, parse_goal
from .pddl.syntax import Universe
from .tasks import EpisodeSpec, Injection
from .world import AffordanceCategory, AgentPose, ObjectInstance, Scene, shortest_path

DEFAULT_MAX_STEPS = 1000
HEAT_COOL_COST = 4


class UnknownObject(KeyError):
    pass


class Status(str, Enum):
    OK = "Ok"
    FAILED = "Failed"


class FailureReason(str, Enum):
    NOT_VISIBLE = "NotVisible"
    PRECONDITION_VIOLATED = "PreconditionViolated"
    INVALID_TARGET = "InvalidTarget"
    BUDGET_EXCEEDED = "BudgetExceeded"


@dataclass(frozen=True)
class ActionOutcome:
    status: Status
    reason: FailureReason | None = None
    category: AffordanceCategory | None = None
    cost: int = 1

    @property
    def ok(self) -> bool:
        return self.status is Status.OK

    def public(self) -> "ActionOutcome":
        """What an agent is told: success or failure, no reason."""
        return ActionOutcome(self.status, cost=self.cost)

    def label(self) -> str:
        if self.ok:
            return "Ok"
        if self.reason is FailureReason.PRECONDITION_VIOLATED:
            return f"Failed({self.reason.value}({self.category.value}))"
        return f"Failed({self.reason.value})"


OK = Status.OK


@dataclass(frozen=True)
class Observation:
    location: str
    visible: tuple[dict, ...]
    holding: str | None
    step: int = 0

    def ids(self) -> set[str]:
        return {v["id"] for v in self.visible}

    def get(self, oid: str) -> dict | None:
        for v in self.visible:
            if v["id"] == oid:
                return v
        return None

    def to_dict(self) -> dict:
        return {"location": self.location, "visible": [dict(v) for v in self.visible],
                "holding": self.holding, "step": self.step}

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class EpisodeState:
    scene: Scene
    objects: dict[str, ObjectInstance]
    pose: AgentPose
    step_count: int = 0
    max_steps: int = DEFAULT_MAX_STEPS
    rng_seed: int = 0
    episode_id: str = ""
    done: bool = False

    def copy(self) -> "EpisodeState":
        return EpisodeState(self.scene, copy.deepcopy(self.objects), copy.copy(self.pose),
                            self.step_count, self.max_steps, self.rng_seed, self.episode_id, self.done)

    def digest(self) -> str:
        """Hash of the mutable world state (objects and pose)."""
        payload = {
            "objects": {k: asdict(v) for k, v in sorted(self.objects.items())},
            "pose": asdict(self.pose),
        }
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def facts(self, include: Iterable[str] | None = None):
        return project(self.scene, self.objects, self.pose, include=include)


# -- transition rules ---------------------------------------------------------

@dataclass(frozen=True)
class TransitionRule:
    """A deterministic attribute update fired by elapsed time or by an action."""

    name: str
    trigger: str  # "tick" or an action name
    effect: Callable[[EpisodeState, Action | None, int], None]


def tick_timers(state: EpisodeState, action: Action | None, elapsed: int) -> None:
    for o in state.objects.values():
        if o.busy_remaining > 0:
            o.busy_remaining = max(0, o.busy_remaining - elapsed)


def _clean_effect(state: EpisodeState, action: Action | None, elapsed: int) -> None:
    o = state.objects[action.args[0]]
    o.clean = True
    o.used = False


def _heat_effect(state: EpisodeState, action: Action | None, elapsed: int) -> None:
    o = state.objects[action.args[0]]
    o.heated, o.cooled = True, False


def _cool_effect(state: EpisodeState, action: Action | None, elapsed: int) -> None:
    o = state.objects[action.args[0]]
    o.heated, o.cooled = False, True


RULES: tuple[TransitionRule, ...] = (
    TransitionRule("occupancy-countdown", "tick", tick_timers),
    TransitionRule("clean-at-sink", A.CLEAN, _clean_effect),
    TransitionRule("heat", A.HEAT, _heat_effect),
    TransitionRule("cool", A.COOL, _cool_effect),
)


# -- reset / observe ----------------------------------------------------------

def apply_injection(objects: dict[str, ObjectInstance], inj: Injection) -> None:
    if inj.object_id not in objects:
        raise UnknownObject(inj.object_id)
    o = objects[inj.object_id]
    if inj.category not in o.klass.applicable_categories:
        raise ValueError(f"{inj.category.value} does not apply to {o.cls}")
    if inj.category is AffordanceCategory.DIRTY:
        o.clean = False
    elif inj.category is AffordanceCategory.USED:
        o.used = True
    else:
        if not inj.param or inj.param < 1:
            raise ValueError("Occupied needs a positive duration")
        o.busy_remaining = int(inj.param)


def reset(scene: Scene, spec: EpisodeSpec | None = None, max_steps: int | None = None) -> EpisodeState:
    objects = copy.deepcopy(scene.objects)
    injections: Sequence[Injection] = spec.injections if spec is not None else ()
    for inj in injections:
        apply_injection(objects, inj)
    if max_steps is None:
        max_steps = spec.max_steps if spec is not None else DEFAULT_MAX_STEPS
    return EpisodeState(
        scene=scene,
        objects=objects,
        pose=AgentPose(scene.start_location, None),
        max_steps=max_steps,
        rng_seed=spec.seed if spec is not None else scene.seed,
        episode_id=spec.id if spec is not None else "",
    )


def _hidden(objects: dict[str, ObjectInstance], o: ObjectInstance) -> bool:
    host = o.inside
    while host is not None:
        h = objects[host]
        if h.klass.openable and not h.open:
            return True
        host = h.inside
    return False


def is_visible(state: EpisodeState, oid: str) -> bool:
    o = state.objects.get(oid)
    if o is None:
        return False
    if state.pose.holding == oid:
        return True
    return o.location == state.pose.location and not _hidden(state.objects, o)


def observe(state: EpisodeState, reveal_latent: bool = False) -> Observation:
    """Objects at the agent's location that are not shut inside a closed receptacle."""
    visible = []
    for oid in sorted(state.objects):
        if not is_visible(state, oid):
            continue
        o = state.objects[oid]
        entry = {"id": oid, "class": o.cls, "open": o.open, "inside": o.inside}
        if reveal_latent:
            entry.update(clean=o.clean, used=o.used, busy=o.busy_remaining)
        visible.append(entry)
    return Observation(state.pose.location, tuple(visible), state.pose.holding, state.step_count)


# -- step ---------------------------------------------------------------------

class _Fail(Exception):
    def __init__(self, reason: FailureReason, category: AffordanceCategory | None = None):
        self.reason = reason
        self.category = category


def _need(cond: bool, reason: FailureReason = FailureReason.INVALID_TARGET) -> None:
    if not cond:
        raise _Fail(reason)


def _get(state: EpisodeState, oid: str) -> ObjectInstance:
    o = state.objects.get(oid)
    _need(o is not None)
    return o


def _visible_receptacle(state: EpisodeState, rid: str) -> ObjectInstance:
    r = _get(state, rid)
    _need(r.klass.receptacle)
    _need(r.location == state.pose.location, FailureReason.NOT_VISIBLE)
    return r


def _move_held(state: EpisodeState, location: str) -> None:
    held = state.pose.holding
    if held is None:
        return
    stack = [held]
    while stack:
        cur = stack.pop()
        state.objects[cur].location = location
        stack.extend(o.id for o in state.objects.values() if o.inside == cur)


def _cost(state: EpisodeState, action: Action) -> int:
    if action.name == A.GOTO:
        to = action.args[0]
        if to not in state.scene.graph.nodes or to == state.pose.location:
            return 1
        return shortest_path(state.scene.graph, state.pose.location, to)
    if action.name in (A.HEAT, A.COOL):
        return HEAT_COOL_COST
    return 1


def _execute(state: EpisodeState, action: Action) -> None:
    """Check preconditions and mutate; raises _Fail before any mutation."""
    name, args = action.name, action.args
    pose = state.pose
    if name == A.WAIT:
        return
    if name == A.GOTO:
        to = args[0]
        _need(to in state.scene.graph.nodes and to != pose.location)
        pose.location = to
        _move_held(state, to)
        return
    if name == A.PICKUP:
        o = _get(state, args[0])
        _need(o.klass.movable and pose.holding is None)
        _need(is_visible(state, o.id), FailureReason.NOT_VISIBLE)
        o.inside = None
        pose.holding = o.id
        return
    if name == A.PUT:
        o = _get(state, args[0])
        _need(pose.holding == o.id)
        r = _get(state, args[1])
        _need(r.id != o.id)
        _need(is_visible(state, r.id) and pose.holding != r.id, FailureReason.NOT_VISIBLE)
        if r.klass.receptacle:
            _need(r.klass.placeable and (not r.klass.openable or r.open))
        else:
            _need(r.klass.mrecep)
            host = state.objects.get(r.inside) if r.inside else None
            _need(host is not None and host.klass.receptacle)
            if r.used:
                raise _Fail(FailureReason.PRECONDITION_VIOLATED, AffordanceCategory.USED)
            if not r.clean:
                raise _Fail(FailureReason.PRECONDITION_VIOLATED, AffordanceCategory.DIRTY)
        o.inside = r.id
        pose.holding = None
        return
    if name in (A.OPEN, A.CLOSE):
        r = _visible_receptacle(state, args[0])
        _need(r.klass.openable)
        if name == A.OPEN:
            _need(not r.open)
            if r.busy_remaining > 0:
                raise _Fail(FailureReason.PRECONDITION_VIOLATED, AffordanceCategory.OCCUPIED)
            r.open = True
        else:
            _need(r.open)
            r.open = False
        return
    if name in (A.TOGGLE_ON, A.TOGGLE_OFF):
        r = _visible_receptacle(state, args[0])
        _need(r.klass.toggleable)
        if name == A.TOGGLE_ON:
            _need(not r.toggled and not r.open)
            if r.busy_remaining > 0:
                raise _Fail(FailureReason.PRECONDITION_VIOLATED, AffordanceCategory.OCCUPIED)
            r.toggled = True
        else:
            _need(r.toggled)
            r.toggled = False
        return
    if name in (A.HEAT, A.COOL):
        o = _get(state, args[0])
        _need(pose.holding == o.id)
        r = _visible_receptacle(state, args[1])
        if name == A.HEAT:
            _need(o.klass.heatable and r.klass.heater)
        else:
            _need(o.klass.coolable and r.klass.cooler)
        _need(r.open)
        if r.busy_remaining > 0:
            raise _Fail(FailureReason.PRECONDITION_VIOLATED, AffordanceCategory.OCCUPIED)
        _fire(state, action)
        return
    if name == A.CLEAN:
        o = _get(state, args[0])
        _need(pose.holding == o.id and o.klass.cleanable)
        _need(pose.location == state.scene.sink_location)
        _fire(state, action)
        return
    raise _Fail(FailureReason.INVALID_TARGET)


def _fire(state: EpisodeState, action: Action) -> None:
    for rule in RULES:
        if rule.trigger == action.name:
            rule.effect(state, action, 0)


def _tick(state: EpisodeState, elapsed: int) -> None:
    for rule in RULES:
        if rule.trigger == "tick":
            rule.effect(state, None, elapsed)


def step(state: EpisodeState, action: Action) -> tuple[EpisodeState, ActionOutcome, Observation]:
    """Execute one high-level action in place.

    A failed action leaves the world untouched apart from the passage of one
    time step, i.e. it behaves exactly like Wait.
    """
    if state.done or state.step_count >= state.max_steps:
        state.done = True
        out = ActionOutcome(Status.FAILED, FailureReason.BUDGET_EXCEEDED, cost=0)
        return state, out, observe(state)
    cost = _cost(state, action)
    if state.step_count + cost > state.max_steps:
        state.step_count = state.max_steps
        state.done = True
        out = ActionOutcome(Status.FAILED, FailureReason.BUDGET_EXCEEDED, cost=0)
        return state, out, observe(state)
    try:
        _execute(state, action)
        out = ActionOutcome(Status.OK, cost=cost)
    except _Fail as f:
        cost = 1
        out = ActionOutcome(Status.FAILED, f.reason, f.category, cost=cost)
    state.step_count += cost
    _tick(state, cost)
    return state, out, observe(state)


# -- scoring ------------------------------------------------------------------

@dataclass(frozen=True)
class GoalScore:
    success: bool
    satisfied: int
    total: int

    @property
    def fraction(self) -> float:
        return 1.0 if self.total == 0 else self.satisfied / self.total


def _universe(state: EpisodeState) -> Universe:
    return Universe.build(household_domain(), problem_objects(state.scene, state.objects))


def score_goal(state: EpisodeState, goal: Formula | str) -> GoalScore:
    if isinstance(goal, str):
        goal = parse_goal(goal, household_domain())
    facts = state.facts()
    universe = _universe(state)
    conds = goal_conditions(goal)
    k = sum(1 for c in conds if c.satisfied(facts, universe))
    return GoalScore(k == len(conds), k, len(conds))


def ground_equivalent(state: EpisodeState, action: Action) -> GroundAction:
    """The ground PDDL action that the high-level action performs in ``state``."""
    dom = household_domain()
    loc = state.pose.location
    n, a = action.name, action.args
    if n == A.GOTO:
        return instantiate(dom.schema("Goto"), (loc, a[0]), _cost(state, action))
    if n == A.PICKUP:
        host = state.objects[a[0]].inside
        if host is None:
            return instantiate(dom.schema("PickupFloor"), (a[0], loc))
        h = state.objects[host]
        if not h.klass.receptacle:
            return instantiate(dom.schema("PickupFromObject"), (a[0], host, h.inside, loc))
        return instantiate(dom.schema("Pickup"), (a[0], host, loc))
    if n == A.PUT:
        r = state.objects[a[1]]
        if r.klass.receptacle:
            return instantiate(dom.schema("Put"), (a[0], a[1], loc))
        return instantiate(dom.schema("PutInObject"), (a[0], a[1], r.inside, loc))
    if n in (A.HEAT, A.COOL):
        return instantiate(dom.schema(n), (a[0], a[1], loc))
    if n in (A.OPEN, A.CLOSE, A.TOGGLE_ON, A.TOGGLE_OFF, A.CLEAN):
        return instantiate(dom.schema(n), (a[0], loc))
    return instantiate(dom.schema("Wait"), ())


# -- trajectories -------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryRecord:
    t: int
    action: str
    outcome: str
    steps: int
    observation_digest: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "TrajectoryRecord":
        return cls(**json.loads(text))


@dataclass
class Trajectory:
    records: list[TrajectoryRecord] = field(default_factory=list)

    def append(self, action: Action, outcome: ActionOutcome, obs: Observation, steps: int) -> None:
        self.records.append(
            TrajectoryRecord(len(self.records), str(action), outcome.label(), steps, obs.digest())
        )

    def to_jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records)

    def actions(self) -> list[Action]:
        return [Action.parse(r.action) for r in self.records]

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "Trajectory":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([TrajectoryRecord.from_json(l) for l in lines if l.strip()])


def replay(scene: Scene, spec: EpisodeSpec | None, action_seq: Iterable[Action],
           max_steps: int | None = None) -> tuple[EpisodeState, Trajectory]:
    """Run a fixed action sequence; stops early once the budget is exhausted."""
    state = reset(scene, spec, max_steps)
    traj = Trajectory()
    for act in action_seq:
        if state.done:
            break
        state, out, obs = step(state, act)
        traj.append(act, out, obs, state.step_count)
    return state, traj
