"""Task templates, episode records and the PDDL goals they induce."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from enum import Enum

from .encoding import type_constant
from .world import AffordanceCategory


class TaskType(str, Enum):
    PICK_AND_PLACE = "PickAndPlace"
    CLEAN_AND_PLACE = "CleanAndPlace"
    HEAT_AND_PLACE = "HeatAndPlace"
    COOL_AND_PLACE = "CoolAndPlace"
    PICK_TWO_AND_PLACE = "PickTwoAndPlace"
    STACK_AND_PLACE = "StackAndPlace"


TASK_TYPES = tuple(TaskType)


class Mode(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


class Difficulty(str, Enum):
    BASIC = "Basic"
    ADVANCED = "Advanced"


@dataclass(frozen=True)
class TaskSpec:
    task_type: TaskType
    target: str
    receptacle: str
    mrecep: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "task_type", TaskType(self.task_type))
        if (self.task_type is TaskType.STACK_AND_PLACE) != (self.mrecep is not None):
            raise ValueError("a movable receptacle is required for, and only for, StackAndPlace")

    @property
    def classes(self) -> tuple[str, ...]:
        extra = (self.mrecep,) if self.mrecep else ()
        return (self.target, self.receptacle) + extra

    @property
    def movable_classes(self) -> tuple[str, ...]:
        return (self.target,) + ((self.mrecep,) if self.mrecep else ())

    def to_dict(self) -> dict:
        return {"task_type": self.task_type.value, "target": self.target,
                "receptacle": self.receptacle, "mrecep": self.mrecep}

    @classmethod
    def from_dict(cls, d: dict) -> "TaskSpec":
        return cls(TaskType(d["task_type"]), d["target"], d["receptacle"], d.get("mrecep"))


def _clean(cls: str, var: str = "?o") -> str:
    return (f"(exists ({var} # object) (and (objectType {var} {type_constant(cls)}) "
            f"(cleanable {var}) (isClean {var})))")


_CLOSED = "(forall (?re # receptacle) (not (opened ?re)))"


def goal_text(task: TaskSpec, cleanable: bool) -> str:
    """PDDL goal for a task; ``cleanable`` says whether the target class can get dirty.

    Every goal ends with all receptacles closed, and cleanable targets must be
    clean, so the goal encodes constraints the instruction never states.
    """
    T = type_constant(task.target)
    R = type_constant(task.receptacle)
    tt = task.task_type
    parts: list[str] = []
    if tt is TaskType.STACK_AND_PLACE:
        M = type_constant(task.mrecep)
        parts.append(
            f"(exists (?mo # object) (and (objectType ?mo {M}) (isReceptacleObject ?mo) "
            f"(cleanable ?mo) (isClean ?mo)))"
        )
        parts.append(
            f"(exists (?mo # object) (and (objectType ?mo {M}) (exists (?r # receptacle) "
            f"(and (receptacleType ?r {R}) (exists (?o # object) (and (objectType ?o {T}) "
            f"(inReceptacleObject ?o ?mo) (inReceptacle ?mo ?r)))))))"
        )
    elif tt is TaskType.PICK_TWO_AND_PLACE:
        if cleanable:
            parts.append(f"(forall (?o # object) (or (not (objectType ?o {T})) (isClean ?o)))")
        parts.append(
            f"(exists (?o1 ?o2 # object ?r1 ?r2 # receptacle) (and (objectType ?o1 {T}) "
            f"(objectType ?o2 {T}) (not (= ?o1 ?o2)) (receptacleType ?r1 {R}) "
            f"(receptacleType ?r2 {R}) (inReceptacle ?o1 ?r1) (inReceptacle ?o2 ?r2)))"
        )
    else:
        if cleanable:
            parts.append(_clean(task.target))
        if tt is TaskType.HEAT_AND_PLACE:
            parts.append(f"(exists (?o # object) (and (objectType ?o {T}) (isHot ?o)))")
        elif tt is TaskType.COOL_AND_PLACE:
            parts.append(f"(exists (?o # object) (and (objectType ?o {T}) (isCold ?o)))")
        parts.append(
            f"(exists (?o # object ?r # receptacle) (and (objectType ?o {T}) "
            f"(receptacleType ?r {R}) (inReceptacle ?o ?r)))"
        )
    parts.append(_CLOSED)
    return "(and\n  " + "\n  ".join(parts) + ")"


@dataclass(frozen=True)
class Injection:
    object_id: str
    category: AffordanceCategory
    param: int | None = None  # occupancy duration for Occupied

    def __post_init__(self):
        object.__setattr__(self, "category", AffordanceCategory(self.category))

    def to_dict(self) -> dict:
        return {"object_id": self.object_id, "category": self.category.value, "param": self.param}

    @classmethod
    def from_dict(cls, d: dict) -> "Injection":
        return cls(d["object_id"], AffordanceCategory(d["category"]), d.get("param"))


@dataclass(frozen=True)
class InstructionAnnotation:
    goal_text: str
    step_texts: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"goal_text": self.goal_text, "step_texts": list(self.step_texts)}

    @classmethod
    def from_dict(cls, d: dict) -> "InstructionAnnotation":
        return cls(d["goal_text"], tuple(d["step_texts"]))


@dataclass
class EpisodeSpec:
    """One benchmark episode.

    ``relevant`` lists the movable object ids the planner reasons about;
    ``expert`` and ``static_plan`` hold ground-action records
    (``{"action", "args", "cost"}``) for this episode and its static twin.
    """

    id: str
    scene_id: int
    task: TaskSpec
    goal: str
    relevant: tuple[str, ...]
    mode: Mode = Mode.STATIC
    difficulty: Difficulty = Difficulty.BASIC
    seen: bool = True
    split: str = "train"
    injections: tuple[Injection, ...] = ()
    annotations: tuple[InstructionAnnotation, ...] = ()
    expert: tuple[dict, ...] = ()
    expert_steps: int = 0
    static_plan: tuple[dict, ...] = ()
    max_steps: int = 1000
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mode = Mode(self.mode)
        self.difficulty = Difficulty(self.difficulty)
        self.relevant = tuple(self.relevant)
        self.injections = tuple(self.injections)

    @property
    def dynamic(self) -> bool:
        return self.mode is Mode.DYNAMIC

    @property
    def scene_split(self) -> str:
        return "seen" if self.seen else "unseen"

    def static_twin(self) -> "EpisodeSpec":
        twin = EpisodeSpec.from_dict(self.to_dict())
        twin.mode = Mode.STATIC
        twin.injections = ()
        return twin

    def to_dict(self) -> dict:
        d = asdict(self)
        d["task"] = self.task.to_dict()
        d["mode"] = self.mode.value
        d["difficulty"] = self.difficulty.value
        d["relevant"] = list(self.relevant)
        d["injections"] = [i.to_dict() for i in self.injections]
        d["annotations"] = [a.to_dict() for a in self.annotations]
        d["expert"] = [dict(r) for r in self.expert]
        d["static_plan"] = [dict(r) for r in self.static_plan]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeSpec":
        d = dict(d)
        d["task"] = TaskSpec.from_dict(d["task"])
        d["injections"] = tuple(Injection.from_dict(i) for i in d.get("injections", ()))
        d["annotations"] = tuple(InstructionAnnotation.from_dict(a) for a in d.get("annotations", ()))
        d["expert"] = tuple(dict(r) for r in d.get("expert", ()))
        d["static_plan"] = tuple(dict(r) for r in d.get("static_plan", ()))
        d["meta"] = dict(d.get("meta", {}))
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "EpisodeSpec":
        return cls.from_dict(json.loads(text))
