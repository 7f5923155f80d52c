"""Benchmark generation: tasks, affordance injection, instructions and dataset assembly."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .planner import BudgetExhausted, PlanConfig, Unsolvable, generate_demonstration
from .tasks import (
    TASK_TYPES,
    Difficulty,
    EpisodeSpec,
    Injection,
    InstructionAnnotation,
    Mode,
    TaskSpec,
    TaskType,
    goal_text,
)
from .world import (
    CLASSES,
    SINK_CLASS,
    AffordanceCategory,
    Category,
    RoomType,
    Scene,
    build_scene,
)


class NoCompatibleObjects(ValueError):
    pass


class NoDynamicObject(ValueError):
    pass


class TargetCountUnreachable(RuntimeError):
    pass


SPLITS = ("train", "valid", "test")
UNSEEN_SEED_OFFSET = 1_000_000
REFERENCE_SCALE = {"demonstrations": 2628, "annotations": 10106, "scenes": 57}


# -- task sampling ------------------------------------------------------------

def _host_class(scene: Scene, oid: str) -> str | None:
    host = scene.objects[oid].inside
    return scene.objects[host].cls if host else None


def compatible_tasks(scene: Scene) -> dict[TaskType, list[TaskSpec]]:
    """Every task the scene supports, grouped by type (sorted, so deterministic)."""
    counts = scene.class_counts()
    present = sorted(counts)
    receptacles = [c for c in present if CLASSES[c].placeable and c != SINK_CLASS]
    movables = [c for c in present if CLASSES[c].movable]
    single = [c for c in movables if counts[c] == 1]
    out: dict[TaskType, list[TaskSpec]] = {t: [] for t in TASK_TYPES}

    def places(cls: str) -> list[str]:
        hosts = {_host_class(scene, o.id) for o in scene.instances(cls)}
        return [r for r in receptacles if r not in hosts]

    for t in single:
        k = CLASSES[t]
        for r in places(t):
            out[TaskType.PICK_AND_PLACE].append(TaskSpec(TaskType.PICK_AND_PLACE, t, r))
            if k.cleanable:
                out[TaskType.CLEAN_AND_PLACE].append(TaskSpec(TaskType.CLEAN_AND_PLACE, t, r))
            if k.heatable and "Microwave" in counts:
                out[TaskType.HEAT_AND_PLACE].append(TaskSpec(TaskType.HEAT_AND_PLACE, t, r))
            if k.coolable and "Fridge" in counts:
                out[TaskType.COOL_AND_PLACE].append(TaskSpec(TaskType.COOL_AND_PLACE, t, r))
        if k.category is Category.PLAIN:
            for m in single:
                if CLASSES[m].mrecep:
                    for r in places(m):
                        out[TaskType.STACK_AND_PLACE].append(TaskSpec(TaskType.STACK_AND_PLACE, t, r, m))
    for t in movables:
        if counts[t] == 2:
            for r in places(t):
                out[TaskType.PICK_TWO_AND_PLACE].append(TaskSpec(TaskType.PICK_TWO_AND_PLACE, t, r))
    return {k: v for k, v in out.items() if v}


def sample_task(scene: Scene, seed: int, weights: Mapping[str, float] | None = None) -> TaskSpec:
    """Pick a task type by weight among those the scene supports, then a concrete task."""
    options = compatible_tasks(scene)
    types = [t for t in TASK_TYPES if t in options and (weights is None or weights.get(t.value, 0) > 0)]
    if not types:
        raise NoCompatibleObjects(f"scene {scene.id} supports no task type")
    w = np.array([1.0 if weights is None else float(weights[t.value]) for t in types])
    rng = np.random.default_rng([int(seed), int(scene.seed)])
    tt = types[int(rng.choice(len(types), p=w / w.sum()))]
    cands = options[tt]
    return cands[int(rng.integers(0, len(cands)))]


def relevant_objects(scene: Scene, task: TaskSpec) -> tuple[str, ...]:
    """Movable instances of the task's object classes."""
    return tuple(sorted(o.id for o in scene.objects.values() if o.cls in task.movable_classes))


def difficulty_of(task: TaskSpec) -> Difficulty:
    """Advanced: an appliance plus a target that can itself become unavailable."""
    uses_appliance = task.task_type in (TaskType.HEAT_AND_PLACE, TaskType.COOL_AND_PLACE)
    if uses_appliance and CLASSES[task.target].dynamic:
        return Difficulty.ADVANCED
    return Difficulty.BASIC


def plan_objects(scene: Scene, records: Iterable[dict]) -> set[str]:
    return {a for r in records for a in r["args"] if a in scene.objects}


def inject_affordance(
    task: TaskSpec,
    scene: Scene,
    mode: Mode | str,
    difficulty: Difficulty | str,
    seed: int,
    task_objects: Iterable[str],
    occupancy_range: tuple[int, int] = (5, 30),
) -> tuple[Injection, ...]:
    """Choose unavailable objects among the task-relevant ones.

    ``task_objects`` are the ids referenced by the static expert plan.
    Basic episodes get one injection; Advanced ones get an occupied
    appliance plus a dirty or used tableware/cloth item.
    """
    if Mode(mode) is Mode.STATIC:
        return ()
    rng = np.random.default_rng([int(seed), 7])
    dyn = sorted(o for o in set(task_objects) if scene.objects[o].klass.dynamic)
    if not dyn:
        raise NoDynamicObject(f"{task.task_type.value}: no task object can become unavailable")

    def make(oid: str, allowed: Sequence[AffordanceCategory] | None = None) -> Injection:
        cats = sorted(allowed or scene.objects[oid].klass.applicable_categories, key=lambda c: c.value)
        cat = cats[int(rng.integers(0, len(cats)))]
        param = None
        if cat is AffordanceCategory.OCCUPIED:
            lo, hi = occupancy_range
            param = int(rng.integers(lo, hi + 1))
        return Injection(oid, cat, param)

    if Difficulty(difficulty) is Difficulty.BASIC:
        return (make(dyn[int(rng.integers(0, len(dyn)))]),)
    appliances = [o for o in dyn if scene.objects[o].klass.appliance]
    containers = [o for o in dyn if scene.objects[o].klass.category in (Category.TABLEWARE, Category.CLOTH)]
    if not appliances or not containers:
        raise NoDynamicObject("Advanced needs an appliance and a tableware or cloth item")
    a = appliances[int(rng.integers(0, len(appliances)))]
    c = containers[int(rng.integers(0, len(containers)))]
    return (make(a), make(c))


def difficulty_violations(spec: EpisodeSpec, scene: Scene) -> list[str]:
    out = []
    inj = spec.injections
    if spec.mode is Mode.STATIC and inj:
        out.append("static episode with injections")
    if spec.difficulty is Difficulty.BASIC and len(inj) > 1:
        out.append("Basic episode with more than one injection")
    if spec.difficulty is Difficulty.ADVANCED and spec.mode is Mode.DYNAMIC:
        kinds = [scene.objects[i.object_id].klass.category for i in inj]
        if len(inj) != 2 or Category.APPLIANCE not in kinds or not (
            Category.TABLEWARE in kinds or Category.CLOTH in kinds
        ):
            out.append("Advanced episode without appliance plus tableware/cloth injections")
    for i in inj:
        if i.category not in scene.objects[i.object_id].klass.applicable_categories:
            out.append(f"{i.category.value} not admitted by {i.object_id}")
    return out


# -- instructions -------------------------------------------------------------

_PLURAL = {"knife": "knives", "tomato": "tomatoes", "potato": "potatoes"}
_INSIDE = {"Cabinet", "Drawer", "SinkBasin", "BathtubBasin", "Fridge", "Microwave"}


def _article(noun: str) -> str:
    return ("an " if noun[0] in "aeiou" else "a ") + noun


def _plural(noun: str) -> str:
    if " of " in noun:
        head, _, tail = noun.partition(" of ")
        return f"{_plural(head)} of {tail}"
    return _PLURAL.get(noun, noun + "s")


_GOALS: dict[TaskType, tuple[str, ...]] = {
    TaskType.PICK_AND_PLACE: (
        "Put {a_obj} {prep} the {recep}.",
        "Move the {obj} to the {recep}.",
        "Pick up the {obj} and place it {prep} the {recep}.",
        "Take {a_obj} and leave it {prep} the {recep}.",
        "Place the {obj} {prep} the {recep}.",
        "Bring the {obj} over to the {recep}.",
    ),
    TaskType.CLEAN_AND_PLACE: (
        "Put a clean {obj} {prep} the {recep}.",
        "Rinse the {obj} and put it {prep} the {recep}.",
        "Wash {a_obj} and place it {prep} the {recep}.",
        "Place a washed {obj} {prep} the {recep}.",
        "Clean the {obj} in the sink, then put it {prep} the {recep}.",
        "Make sure the {obj} is clean and leave it {prep} the {recep}.",
    ),
    TaskType.HEAT_AND_PLACE: (
        "Microwave {a_obj} and place it {prep} the {recep}.",
        "Put a heated {obj} {prep} the {recep}.",
        "Warm up the {obj} and set it {prep} the {recep}.",
        "Heat {a_obj} in the microwave, then put it {prep} the {recep}.",
        "Place a hot {obj} {prep} the {recep}.",
        "Cook the {obj} in the microwave and move it to the {recep}.",
    ),
    TaskType.COOL_AND_PLACE: (
        "Chill {a_obj} and place it {prep} the {recep}.",
        "Put a cold {obj} {prep} the {recep}.",
        "Cool the {obj} in the fridge, then put it {prep} the {recep}.",
        "Refrigerate {a_obj} and set it {prep} the {recep}.",
        "Place a chilled {obj} {prep} the {recep}.",
        "Cool down the {obj} and move it to the {recep}.",
    ),
    TaskType.PICK_TWO_AND_PLACE: (
        "Put two {objs} {prep} the {recep}.",
        "Move both {objs} to the {recep}.",
        "Place two {objs} {prep} the {recep}.",
        "Pick up two {objs} and put them {prep} the {recep}.",
        "Take the two {objs} and leave them {prep} the {recep}.",
        "Bring a pair of {objs} to the {recep}.",
    ),
    TaskType.STACK_AND_PLACE: (
        "Put {a_obj} in {a_mrecep} and place it {prep} the {recep}.",
        "Place the {mrecep} holding {a_obj} {prep} the {recep}.",
        "Move {a_mrecep} with {a_obj} in it to the {recep}.",
        "Set {a_obj} inside the {mrecep}, then put the {mrecep} {prep} the {recep}.",
        "Carry the {obj} in {a_mrecep} over to the {recep}.",
        "Put the {mrecep} containing the {obj} {prep} the {recep}.",
    ),
}

_STEPS: dict[TaskType, tuple[tuple[str, ...], ...]] = {
    TaskType.PICK_AND_PLACE: (
        ("Go to the {obj}.", "Pick up the {obj}.", "Go to the {recep}.", "Put the {obj} {prep} the {recep}."),
        ("Find the {obj}.", "Grab the {obj}.", "Walk to the {recep}.", "Place it {prep} the {recep}."),
    ),
    TaskType.CLEAN_AND_PLACE: (
        ("Go to the {obj}.", "Pick up the {obj}.", "Go to the sink.", "Wash the {obj}.",
         "Go to the {recep}.", "Put the {obj} {prep} the {recep}."),
        ("Find the {obj}.", "Take the {obj}.", "Walk to the sink.", "Rinse the {obj}.",
         "Walk to the {recep}.", "Leave it {prep} the {recep}."),
    ),
    TaskType.HEAT_AND_PLACE: (
        ("Go to the {obj}.", "Pick up the {obj}.", "Go to the microwave.", "Heat the {obj}.",
         "Go to the {recep}.", "Put the {obj} {prep} the {recep}."),
        ("Find the {obj}.", "Take the {obj}.", "Walk to the microwave.", "Warm the {obj} up.",
         "Walk to the {recep}.", "Set it {prep} the {recep}."),
    ),
    TaskType.COOL_AND_PLACE: (
        ("Go to the {obj}.", "Pick up the {obj}.", "Go to the fridge.", "Cool the {obj}.",
         "Go to the {recep}.", "Put the {obj} {prep} the {recep}."),
        ("Find the {obj}.", "Take the {obj}.", "Walk to the fridge.", "Chill the {obj}.",
         "Walk to the {recep}.", "Set it {prep} the {recep}."),
    ),
    TaskType.PICK_TWO_AND_PLACE: (
        ("Go to the first {obj}.", "Pick it up.", "Put it {prep} the {recep}.",
         "Go to the second {obj}.", "Pick it up.", "Put it {prep} the {recep} as well."),
        ("Find one {obj}.", "Take it.", "Leave it {prep} the {recep}.",
         "Find the other {obj}.", "Take it too.", "Leave it {prep} the {recep}."),
    ),
    TaskType.STACK_AND_PLACE: (
        ("Go to the {obj}.", "Pick up the {obj}.", "Go to the {mrecep}.", "Put the {obj} in the {mrecep}.",
         "Pick up the {mrecep}.", "Put the {mrecep} {prep} the {recep}."),
        ("Find the {obj}.", "Take the {obj}.", "Find the {mrecep}.", "Drop the {obj} into the {mrecep}.",
         "Lift the {mrecep}.", "Set the {mrecep} {prep} the {recep}."),
    ),
}

N_TEMPLATES = 6


def _slots(task: TaskSpec) -> dict[str, str]:
    obj = CLASSES[task.target].label
    slots = {
        "obj": obj,
        "a_obj": _article(obj),
        "objs": _plural(obj),
        "recep": CLASSES[task.receptacle].label,
        "prep": "in" if task.receptacle in _INSIDE else "on",
    }
    if task.mrecep:
        m = CLASSES[task.mrecep].label
        slots.update(mrecep=m, a_mrecep=_article(m))
    return slots


def render_instructions(task: TaskSpec, scene: Scene | None = None, k: int = 3, seed: int = 0) -> list[InstructionAnnotation]:
    """``k`` templated annotations with distinct goal phrasings.

    Templates never mention cleanliness or occupancy beyond what the task
    type itself asks for, so a dynamic episode reads exactly like its static
    twin.
    """
    if not 3 <= k <= N_TEMPLATES:
        raise ValueError("k must be between 3 and 6")
    slots = _slots(task)
    goals = _GOALS[task.task_type]
    steps = _STEPS[task.task_type]
    out = []
    for i in range(k):
        j = (seed + i) % N_TEMPLATES
        out.append(InstructionAnnotation(
            goals[j].format(**slots),
            tuple(s.format(**slots) for s in steps[j % len(steps)]),
        ))
    return out


# -- dataset ------------------------------------------------------------------

@dataclass
class GenConfig:
    n_scenes_seen: int = 8
    n_scenes_unseen: int = 4
    n_demos: int = 100
    static_fraction: float = 0.5
    seed: int = 0
    kitchen_fraction: float = 0.5
    split_fractions: dict = field(default_factory=lambda: {"train": 0.6, "valid": 0.2, "test": 0.2})
    unseen_fraction: float = 0.5
    task_weights: dict | None = None
    annotations: tuple = (3, 6)
    occupancy_range: tuple = (5, 30)
    retry_budget: int = 20
    max_steps: int = 1000
    max_expansions: int = 200_000
    n_locations: int = 6
    parallel: int = 1

    def __post_init__(self):
        self.annotations = tuple(self.annotations)
        self.occupancy_range = tuple(self.occupancy_range)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["annotations"] = list(self.annotations)
        d["occupancy_range"] = list(self.occupancy_range)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "GenConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


GEN_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_scenes_seen": {"type": "integer", "minimum": 1},
        "n_scenes_unseen": {"type": "integer", "minimum": 0},
        "n_demos": {"type": "integer", "minimum": 1},
        "static_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "kitchen_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "split_fractions": {
            "type": "object",
            "properties": {s: {"type": "number", "minimum": 0} for s in SPLITS},
            "additionalProperties": False,
        },
        "unseen_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "task_weights": {
            "type": ["object", "null"],
            "properties": {t.value: {"type": "number", "minimum": 0} for t in TASK_TYPES},
            "additionalProperties": False,
        },
        "annotations": {"type": "array", "items": {"type": "integer", "minimum": 3, "maximum": 6},
                        "minItems": 2, "maxItems": 2},
        "occupancy_range": {"type": "array", "items": {"type": "integer", "minimum": 1},
                            "minItems": 2, "maxItems": 2},
        "retry_budget": {"type": "integer", "minimum": 1},
        "max_steps": {"type": "integer", "minimum": 1},
        "max_expansions": {"type": "integer", "minimum": 1},
        "n_locations": {"type": "integer", "minimum": 3},
        "parallel": {"type": "integer", "minimum": 1},
    },
}


def scene_seed(config: GenConfig, index: int, seen: bool) -> int:
    base = config.seed * 10_000 + index
    return base if seen else UNSEEN_SEED_OFFSET + base


@lru_cache(maxsize=512)
def _scene(seed: int, room: str, n_locations: int, scene_id: int) -> Scene:
    return build_scene(seed, room, {"n_locations": n_locations}, scene_id=scene_id)


def scene_for(config: GenConfig, index: int, seen: bool) -> Scene:
    """Scene ``index`` of the seen or unseen pool; seen and unseen ids never overlap."""
    n_seen = config.n_scenes_seen
    draw = np.random.default_rng([config.seed, index, int(seen), 99]).random()
    room = RoomType.KITCHEN if draw < config.kitchen_fraction else RoomType.BATHROOM
    scene_id = index if seen else n_seen + index
    return _scene(scene_seed(config, index, seen), room.value, config.n_locations, scene_id)


@dataclass(frozen=True)
class _Slot:
    index: int
    mode: Mode
    split: str
    seen: bool


def _slots_for(config: GenConfig) -> list[_Slot]:
    n = config.n_demos
    n_static = int(round(n * config.static_fraction))
    rng = np.random.default_rng([config.seed, 1])
    modes = [Mode.STATIC] * n_static + [Mode.DYNAMIC] * (n - n_static)
    modes = [modes[i] for i in rng.permutation(n)]
    names = [s for s in SPLITS if config.split_fractions.get(s, 0) > 0]
    w = np.array([config.split_fractions[s] for s in names], dtype=float)
    if config.n_scenes_unseen == 0:
        unseen_p = 0.0
    else:
        unseen_p = config.unseen_fraction
    out = []
    for i in range(n):
        split = names[int(rng.choice(len(names), p=w / w.sum()))]
        seen = split == "train" or rng.random() >= unseen_p
        out.append(_Slot(i, modes[i], split, seen))
    return out


def make_episode(config: GenConfig, slot: _Slot) -> tuple[EpisodeSpec, Scene]:
    """Generate one solvable episode for a slot, retrying up to the budget."""
    pool = config.n_scenes_seen if slot.seen else config.n_scenes_unseen
    pconf = PlanConfig(max_expansions=config.max_expansions)
    last_error = "no attempt"
    for attempt in range(config.retry_budget):
        seed = int(np.random.default_rng([config.seed, slot.index, attempt]).integers(0, 2**31))
        rng = np.random.default_rng(seed)
        scene = scene_for(config, int(rng.integers(0, pool)), slot.seen)
        try:
            task = sample_task(scene, seed, config.task_weights)
        except NoCompatibleObjects as e:
            last_error = str(e)
            continue
        k = int(rng.integers(config.annotations[0], config.annotations[1] + 1))
        cleanable = CLASSES[task.target].cleanable
        spec = EpisodeSpec(
            id=f"ep{slot.index:05d}",
            scene_id=scene.id,
            task=task,
            goal=goal_text(task, cleanable),
            relevant=relevant_objects(scene, task),
            mode=Mode.STATIC,
            difficulty=difficulty_of(task),
            seen=slot.seen,
            split=slot.split,
            annotations=tuple(render_instructions(task, scene, k, seed)),
            max_steps=config.max_steps,
            seed=seed,
        )
        try:
            static_demo = generate_demonstration(scene, spec, pconf)
        except (Unsolvable, BudgetExhausted) as e:
            last_error = f"static plan: {e}"
            continue
        if len(static_demo.plan) == 0:
            last_error = "goal already satisfied"
            continue
        spec.static_plan = tuple(static_demo.plan.to_records())
        spec.expert = spec.static_plan
        spec.expert_steps = static_demo.expert_steps
        if slot.mode is Mode.DYNAMIC:
            try:
                inj = inject_affordance(task, scene, Mode.DYNAMIC, spec.difficulty, seed,
                                        plan_objects(scene, spec.static_plan), config.occupancy_range)
            except NoDynamicObject as e:
                last_error = str(e)
                continue
            spec.mode = Mode.DYNAMIC
            spec.injections = inj
            try:
                demo = generate_demonstration(scene, spec, pconf)
            except (Unsolvable, BudgetExhausted) as e:
                last_error = f"dynamic plan: {e}"
                continue
            spec.expert = tuple(demo.plan.to_records())
            spec.expert_steps = demo.expert_steps
        spec.meta = {"attempt": attempt}
        return spec, scene
    raise TargetCountUnreachable(f"slot {slot.index}: retry budget exhausted ({last_error})")


def _make(args) -> tuple[EpisodeSpec, Scene]:
    return make_episode(*args)


@dataclass
class Dataset:
    config: GenConfig
    scenes: dict[int, Scene]
    episodes: list[EpisodeSpec]
    manifest: dict = field(default_factory=dict)

    def scene(self, spec: EpisodeSpec) -> Scene:
        return self.scenes[spec.scene_id]

    def episode(self, episode_id: str) -> EpisodeSpec:
        for e in self.episodes:
            if e.id == episode_id:
                return e
        raise KeyError(episode_id)

    def select(self, split: str | None = None, mode: Mode | str | None = None,
               seen: bool | None = None) -> list[EpisodeSpec]:
        out = self.episodes
        if split is not None:
            out = [e for e in out if e.split == split]
        if mode is not None:
            out = [e for e in out if e.mode is Mode(mode)]
        if seen is not None:
            out = [e for e in out if e.seen == seen]
        return list(out)

    # -- persistence --------------------------------------------------------
    def write(self, root: str | Path) -> Path:
        root = Path(root)
        for sub in ("scenes", "episodes", "experts"):
            (root / sub).mkdir(parents=True, exist_ok=True)
        for sid, sc in sorted(self.scenes.items()):
            (root / "scenes" / f"{sid}.json").write_text(sc.to_json() + "\n", encoding="utf-8")
        for e in self.episodes:
            body = e.to_dict()
            expert = {"plan": body.pop("expert"), "expert_steps": body.pop("expert_steps")}
            (root / "episodes" / f"{e.id}.json").write_text(_dumps(body), encoding="utf-8")
            (root / "experts" / f"{e.id}.json").write_text(_dumps(expert), encoding="utf-8")
        (root / "manifest.json").write_text(json.dumps(self.manifest, indent=2, sort_keys=True) + "\n",
                                            encoding="utf-8")
        return root

    @classmethod
    def load(cls, root: str | Path) -> "Dataset":
        root = Path(root)
        manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
        scenes = {}
        for sid in manifest["scenes"]["seen"] + manifest["scenes"]["unseen"]:
            scenes[sid] = Scene.from_json((root / "scenes" / f"{sid}.json").read_text(encoding="utf-8"))
        episodes = []
        for eid in manifest["episodes"]:
            body = json.loads((root / "episodes" / f"{eid}.json").read_text(encoding="utf-8"))
            expert = json.loads((root / "experts" / f"{eid}.json").read_text(encoding="utf-8"))
            body["expert"] = expert["plan"]
            body["expert_steps"] = expert["expert_steps"]
            episodes.append(EpisodeSpec.from_dict(body))
        return cls(GenConfig.from_dict(manifest["config"]), scenes, episodes, manifest)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def cell_key(spec: EpisodeSpec) -> str:
    return f"{spec.split}/{spec.scene_split}/{spec.mode.value}/{spec.difficulty.value}"


def build_manifest(config: GenConfig, scenes: Mapping[int, Scene], episodes: Sequence[EpisodeSpec]) -> dict:
    cells: dict[str, int] = {}
    for e in episodes:
        cells[cell_key(e)] = cells.get(cell_key(e), 0) + 1
    n_static = sum(1 for e in episodes if e.mode is Mode.STATIC)
    seen_ids = sorted({e.scene_id for e in episodes if e.seen})
    unseen_ids = sorted({e.scene_id for e in episodes if not e.seen})
    return {
        "config": config.to_dict(),
        "episodes": [e.id for e in episodes],
        "scenes": {"seen": seen_ids, "unseen": unseen_ids},
        "counts": {
            "episodes": len(episodes),
            "static": n_static,
            "dynamic": len(episodes) - n_static,
            "static_fraction": n_static / len(episodes) if episodes else 0.0,
            "annotations": sum(len(e.annotations) for e in episodes),
            "cells": dict(sorted(cells.items())),
            "task_types": _count(e.task.task_type.value for e in episodes),
        },
        "reference_scale": REFERENCE_SCALE,
    }


def _count(items: Iterable[str]) -> dict[str, int]:
    out: dict[str, int] = {}
    for x in items:
        out[x] = out.get(x, 0) + 1
    return dict(sorted(out.items()))


def build_dataset(config: GenConfig | Mapping, out: str | Path | None = None,
                  progress=None) -> Dataset:
    """Generate every episode slot, then assemble the manifest (and write it if ``out``)."""
    if not isinstance(config, GenConfig):
        config = GenConfig.from_dict(config)
    slots = _slots_for(config)
    jobs = [(config, s) for s in slots]
    if config.parallel > 1:
        with ProcessPoolExecutor(max_workers=config.parallel) as pool:
            results = list(pool.map(_make, jobs, chunksize=4))
    else:
        results = []
        for j in jobs:
            results.append(_make(j))
            if progress:
                progress(results[-1][0])
    episodes = [r[0] for r in results]
    scenes = {sc.id: sc for _, sc in results}
    ds = Dataset(config, dict(sorted(scenes.items())), episodes)
    ds.manifest = build_manifest(config, ds.scenes, episodes)
    if out is not None:
        ds.write(out)
    return ds
