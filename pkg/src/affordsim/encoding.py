"""Symbolic projection of scene state onto the household PDDL vocabulary."""

from __future__ import annotations

from typing import Iterable, Mapping

from .pddl import Formula, Literal, Problem, household_domain
from .world import CLASSES, AgentPose, ObjectInstance, Scene


def type_constant(cls: str) -> str:
    return f"{cls}Type"


def tick(k: int) -> str:
    return f"t{k}"


def _L(pred: str, *args: str) -> Literal:
    return Literal(pred, tuple(args))


def project(
    scene: Scene,
    objects: Mapping[str, ObjectInstance],
    pose: AgentPose,
    include: Iterable[str] | None = None,
    max_tick: int | None = None,
) -> frozenset[Literal]:
    """Ground facts describing the current world state.

    ``include`` restricts the movable objects that appear (fixed receptacles
    and locations always do).  Tick facts cover levels 0..max_tick, where
    max_tick defaults to the largest busy timer.
    """
    keep = None if include is None else set(include)
    facts: set[Literal] = {_L("atLocation", pose.location)}
    if pose.holding is None:
        facts.add(_L("handEmpty"))
    elif keep is None or pose.holding in keep:
        facts.add(_L("holds", pose.holding))
    facts.add(_L("sinkLocation", scene.sink_location))
    busiest = 0
    for o in objects.values():
        k = o.klass
        if k.receptacle:
            r = o.id
            facts.add(_L("receptacleAtLocation", r, o.location))
            facts.add(_L("receptacleType", r, type_constant(o.cls)))
            if k.openable:
                facts.add(_L("openable", r))
                if o.open:
                    facts.add(_L("opened", r))
            if not k.openable or o.open:
                facts.add(_L("reachable", r))
            if k.placeable:
                facts.add(_L("placeable", r))
            if k.heater:
                facts.add(_L("heater", r))
            if k.cooler:
                facts.add(_L("cooler", r))
            if k.toggleable:
                facts.add(_L("toggleable", r))
                if o.toggled:
                    facts.add(_L("isToggled", r))
            if o.busy_remaining > 0:
                busiest = max(busiest, o.busy_remaining)
                facts.add(_L("isOccupied", r))
                facts.add(_L("busyLevel", r, tick(o.busy_remaining)))
            continue
        if keep is not None and o.id not in keep:
            continue
        facts.add(_L("objectType", o.id, type_constant(o.cls)))
        facts.add(_L("pickupable", o.id))
        if k.mrecep:
            facts.add(_L("isReceptacleObject", o.id))
        if k.cleanable:
            facts.add(_L("cleanable", o.id))
            if o.clean and not o.used:
                facts.add(_L("isClean", o.id))
        if o.used:
            facts.add(_L("isUsed", o.id))
        if k.heatable:
            facts.add(_L("heatable", o.id))
        if k.coolable:
            facts.add(_L("coolable", o.id))
        if o.heated:
            facts.add(_L("isHot", o.id))
        if o.cooled:
            facts.add(_L("isCold", o.id))
        if pose.holding == o.id:
            continue
        host = objects.get(o.inside) if o.inside else None
        if host is None:
            facts.add(_L("onFloor", o.id))
            facts.add(_L("objectAtLocation", o.id, o.location))
        elif host.klass.receptacle:
            facts.add(_L("inReceptacle", o.id, host.id))
            facts.add(_L("objectAtLocation", o.id, o.location))
        else:
            facts.add(_L("inReceptacleObject", o.id, host.id))
    top = busiest if max_tick is None else max(max_tick, busiest)
    if top > 0:
        facts.add(_L("tickZero", tick(0)))
        for k in range(top):
            facts.add(_L("tickSucc", tick(k), tick(k + 1)))
    return frozenset(facts)


def problem_objects(
    scene: Scene,
    objects: Mapping[str, ObjectInstance],
    include: Iterable[str] | None = None,
    max_tick: int = 0,
) -> dict[str, str]:
    keep = None if include is None else set(include)
    out: dict[str, str] = {}
    for loc in scene.graph.nodes:
        out[loc] = "location"
    for o in sorted(objects.values(), key=lambda o: o.id):
        if o.klass.receptacle:
            out[o.id] = "receptacle"
        elif keep is None or o.id in keep:
            out[o.id] = "object"
    for cls in sorted(CLASSES):
        out[type_constant(cls)] = "rtype" if CLASSES[cls].receptacle else "otype"
    for k in range(max_tick + 1 if max_tick > 0 else 0):
        out[tick(k)] = "tick"
    return out


def scene_problem(
    scene: Scene,
    objects: Mapping[str, ObjectInstance],
    pose: AgentPose,
    goal: Formula,
    include: Iterable[str] | None = None,
    name: str = "episode",
) -> Problem:
    include = None if include is None else list(include)
    busiest = max((o.busy_remaining for o in objects.values()), default=0)
    init = project(scene, objects, pose, include=include)
    return Problem(
        name=name,
        domain_name=household_domain().name,
        objects=problem_objects(scene, objects, include=include, max_tick=busiest),
        init=init,
        goal=goal,
    )
