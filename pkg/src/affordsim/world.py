"""Symbolic household scenes: object classes, affordance attributes and the location graph."""

from __future__ import annotations

import copy
import heapq
import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable

import numpy as np


class SizeError(ValueError):
    pass


class NodeNotFound(KeyError):
    pass


class Category(str, Enum):
    APPLIANCE = "Appliance"
    TABLEWARE = "Tableware"
    CLOTH = "Cloth"
    PLAIN = "Plain"
    SURFACE = "Surface"


class Persistence(str, Enum):
    TEMPORARY = "Temporary"
    PERSISTENT = "Persistent"


class AffordanceCategory(str, Enum):
    OCCUPIED = "Occupied"
    USED = "Used"
    DIRTY = "Dirty"

    @property
    def persistence(self) -> Persistence:
        if self is AffordanceCategory.OCCUPIED:
            return Persistence.TEMPORARY
        return Persistence.PERSISTENT


_ADMITTED = {
    Category.APPLIANCE: frozenset({AffordanceCategory.OCCUPIED}),
    Category.TABLEWARE: frozenset({AffordanceCategory.USED, AffordanceCategory.DIRTY}),
    Category.CLOTH: frozenset({AffordanceCategory.DIRTY}),
    Category.PLAIN: frozenset(),
    Category.SURFACE: frozenset(),
}


class RoomType(str, Enum):
    KITCHEN = "Kitchen"
    BATHROOM = "Bathroom"


@dataclass(frozen=True)
class ObjectClass:
    name: str
    category: Category
    movable: bool = False
    openable: bool = False
    heatable: bool = False
    coolable: bool = False
    mrecep: bool = False
    heater: bool = False
    cooler: bool = False
    display: str = ""

    @property
    def applicable_categories(self) -> frozenset[AffordanceCategory]:
        return _ADMITTED[self.category]

    @property
    def dynamic(self) -> bool:
        return bool(self.applicable_categories)

    @property
    def appliance(self) -> bool:
        return self.category is Category.APPLIANCE

    @property
    def receptacle(self) -> bool:
        """Fixed receptacle (appliances included)."""
        return not self.movable

    @property
    def placeable(self) -> bool:
        return self.receptacle and not self.appliance

    @property
    def cleanable(self) -> bool:
        return self.category in (Category.TABLEWARE, Category.CLOTH)

    @property
    def toggleable(self) -> bool:
        return self.appliance

    @property
    def label(self) -> str:
        return self.display or self.name.lower()


def _cls(name, category, **kw) -> ObjectClass:
    return ObjectClass(name=name, category=Category(category), **kw)


_FOOD = dict(movable=True, heatable=True, coolable=True)
_TABLEWARE = dict(movable=True, mrecep=True, coolable=True)

CLASSES: dict[str, ObjectClass] = {
    c.name: c
    for c in [
        _cls("Microwave", "Appliance", openable=True, heater=True),
        _cls("Fridge", "Appliance", openable=True, cooler=True, display="fridge"),
        _cls("Mug", "Tableware", heatable=True, **_TABLEWARE),
        _cls("Cup", "Tableware", heatable=True, **_TABLEWARE),
        _cls("Bowl", "Tableware", heatable=True, **_TABLEWARE),
        _cls("Plate", "Tableware", heatable=True, **_TABLEWARE),
        _cls("Pot", "Tableware", **_TABLEWARE),
        _cls("Pan", "Tableware", **_TABLEWARE),
        _cls("Cloth", "Cloth", movable=True),
        _cls("Egg", "Plain", **_FOOD),
        _cls("Apple", "Plain", **_FOOD),
        _cls("Potato", "Plain", **_FOOD),
        _cls("Tomato", "Plain", **_FOOD),
        _cls("Bread", "Plain", **_FOOD),
        _cls("Spoon", "Plain", movable=True),
        _cls("Fork", "Plain", movable=True),
        _cls("Knife", "Plain", movable=True),
        _cls("SoapBar", "Plain", movable=True, display="bar of soap"),
        _cls("Candle", "Plain", movable=True),
        _cls("ToiletPaper", "Plain", movable=True, display="roll of toilet paper"),
        _cls("SprayBottle", "Plain", movable=True, display="spray bottle"),
        _cls("CounterTop", "Surface", display="countertop"),
        _cls("DiningTable", "Surface", display="dining table"),
        _cls("Shelf", "Surface"),
        _cls("SinkBasin", "Surface", display="sink"),
        _cls("Toilet", "Surface"),
        _cls("BathtubBasin", "Surface", display="bathtub"),
        _cls("Cabinet", "Surface", openable=True),
        _cls("Drawer", "Surface", openable=True),
    ]
}

SINK_CLASS = "SinkBasin"
# always-open surfaces that build_scene may add so that every location can hold a set-aside item
_FILLER_SURFACE = {RoomType.KITCHEN: "CounterTop", RoomType.BATHROOM: "Shelf"}

DEFAULT_COUNTS: dict[RoomType, dict[str, int]] = {
    RoomType.KITCHEN: {
        "Microwave": 1, "Fridge": 1, "SinkBasin": 1, "CounterTop": 2, "DiningTable": 1,
        "Shelf": 1, "Cabinet": 2, "Drawer": 1,
        "Mug": 1, "Cup": 1, "Bowl": 1, "Plate": 2, "Pot": 1, "Pan": 1, "Cloth": 1,
        "Egg": 1, "Apple": 2, "Potato": 1, "Tomato": 1, "Bread": 1, "Spoon": 1, "Fork": 1,
    },
    RoomType.BATHROOM: {
        "SinkBasin": 1, "CounterTop": 1, "Shelf": 2, "Cabinet": 2, "Drawer": 1, "Toilet": 1,
        "BathtubBasin": 1,
        "Cloth": 1, "SoapBar": 2, "Candle": 1, "ToiletPaper": 1, "SprayBottle": 1,
    },
}
DEFAULT_LOCATIONS = 6


@dataclass
class ObjectInstance:
    id: str
    cls: str
    location: str
    inside: str | None = None
    open: bool = False
    clean: bool = True
    used: bool = False
    busy_remaining: int = 0
    heated: bool = False
    cooled: bool = False
    toggled: bool = False

    @property
    def klass(self) -> ObjectClass:
        return CLASSES[self.cls]


@dataclass(frozen=True)
class LocationGraph:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, int], ...]

    def neighbours(self, node: str) -> list[tuple[str, int]]:
        return _adjacency(self)[node]

    def is_connected(self) -> bool:
        if not self.nodes:
            return False
        seen = {self.nodes[0]}
        stack = [self.nodes[0]]
        adj = _adjacency(self)
        while stack:
            for nxt, _ in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == len(self.nodes)


@lru_cache(maxsize=256)
def _adjacency(graph: LocationGraph) -> dict[str, list[tuple[str, int]]]:
    adj: dict[str, list[tuple[str, int]]] = {n: [] for n in graph.nodes}
    for a, b, c in graph.edges:
        if a in adj and b in adj:
            adj[a].append((b, c))
            adj[b].append((a, c))
    return adj


@lru_cache(maxsize=4096)
def _dijkstra(graph: LocationGraph, source: str) -> dict[str, int]:
    dist = {source: 0}
    heap = [(0, source)]
    adj = _adjacency(graph)
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist[node]:
            continue
        for nxt, cost in adj[node]:
            nd = d + cost
            if nd < dist.get(nxt, nd + 1):
                dist[nxt] = nd
                heapq.heappush(heap, (nd, nxt))
    return dist


def shortest_path(graph: LocationGraph, a: str, b: str) -> int:
    """Minimal total edge cost between two locations."""
    if a not in graph.nodes:
        raise NodeNotFound(a)
    if b not in graph.nodes:
        raise NodeNotFound(b)
    dist = _dijkstra(graph, a)
    if b not in dist:
        raise NodeNotFound(f"{b} unreachable from {a}")
    return dist[b]


@dataclass
class AgentPose:
    location: str
    holding: str | None = None


@dataclass
class Scene:
    id: int
    room_type: RoomType
    graph: LocationGraph
    objects: dict[str, ObjectInstance]
    sink_location: str
    seed: int
    start_location: str = ""

    def __post_init__(self):
        if not self.start_location and self.graph.nodes:
            self.start_location = self.graph.nodes[0]

    def copy(self) -> "Scene":
        return copy.deepcopy(self)

    def instances(self, cls: str) -> list[ObjectInstance]:
        return [o for o in self.objects.values() if o.cls == cls]

    def class_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for o in self.objects.values():
            counts[o.cls] = counts.get(o.cls, 0) + 1
        return counts

    def receptacles_at(self, location: str) -> list[ObjectInstance]:
        return sorted(
            (o for o in self.objects.values() if o.klass.receptacle and o.location == location),
            key=lambda o: o.id,
        )

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "room_type": self.room_type.value,
            "seed": self.seed,
            "sink_location": self.sink_location,
            "start_location": self.start_location,
            "graph": {
                "nodes": list(self.graph.nodes),
                "edges": [list(e) for e in self.graph.edges],
            },
            "objects": {k: asdict(v) for k, v in sorted(self.objects.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scene":
        graph = LocationGraph(
            nodes=tuple(data["graph"]["nodes"]),
            edges=tuple((a, b, int(c)) for a, b, c in data["graph"]["edges"]),
        )
        objects = {k: ObjectInstance(**v) for k, v in data["objects"].items()}
        return cls(
            id=int(data["id"]),
            room_type=RoomType(data["room_type"]),
            graph=graph,
            objects=objects,
            sink_location=data["sink_location"],
            seed=int(data["seed"]),
            start_location=data.get("start_location", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Scene":
        return cls.from_dict(json.loads(text))


def _random_graph(rng: np.random.Generator, n: int) -> LocationGraph:
    nodes = tuple(f"loc{i}" for i in range(n))
    edges: dict[tuple[str, str], int] = {}
    # random spanning tree, then a few chords
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges[(nodes[j], nodes[i])] = int(rng.integers(1, 4))
    for _ in range(max(0, n // 2)):
        a, b = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
        key = (nodes[a], nodes[b])
        if key not in edges:
            edges[key] = int(rng.integers(1, 4))
    return LocationGraph(nodes=nodes, edges=tuple((a, b, c) for (a, b), c in sorted(edges.items())))


def build_scene(
    seed: int,
    room_type: RoomType | str = RoomType.KITCHEN,
    size_params: dict | None = None,
    scene_id: int | None = None,
) -> Scene:
    """Procedurally generate a scene; a pure function of its arguments.

    ``size_params`` may hold ``n_locations`` and ``n_objects_per_class``;
    omitted keys fall back to the room defaults.  Every object starts
    available.  When the default class table is used, locations without an
    always-open surface get a filler surface.
    """
    room_type = RoomType(room_type)
    size_params = size_params or {}
    n_locations = int(size_params.get("n_locations", DEFAULT_LOCATIONS))
    explicit_counts = "n_objects_per_class" in size_params
    counts = dict(size_params.get("n_objects_per_class", DEFAULT_COUNTS[room_type]))
    if n_locations < 3:
        raise SizeError("n_locations must be >= 3")
    for name, k in counts.items():
        if name not in CLASSES:
            raise SizeError(f"unknown object class {name!r}")
        if k < 0:
            raise SizeError(f"negative count for {name}")
    if counts.get(SINK_CLASS, 0) > 1:
        raise SizeError("a scene holds exactly one sink")

    rng = np.random.default_rng([int(seed), 0 if room_type is RoomType.KITCHEN else 1])
    graph = _random_graph(rng, n_locations)
    nodes = graph.nodes
    sink_location = nodes[int(rng.integers(0, n_locations))]
    objects: dict[str, ObjectInstance] = {}

    def new_id(cls: str) -> str:
        k = sum(1 for o in objects.values() if o.cls == cls)
        return f"{cls}_{k}"

    fixed = [c for c in sorted(counts) if CLASSES[c].receptacle]
    movable = [c for c in sorted(counts) if CLASSES[c].movable]
    for cls in fixed:
        for _ in range(counts[cls]):
            loc = sink_location if cls == SINK_CLASS else nodes[int(rng.integers(0, n_locations))]
            oid = new_id(cls)
            objects[oid] = ObjectInstance(id=oid, cls=cls, location=loc)
    if not explicit_counts:
        filler = _FILLER_SURFACE[room_type]
        for loc in nodes:
            has_open_surface = any(
                o.location == loc and o.klass.placeable and not o.klass.openable
                and o.cls != SINK_CLASS
                for o in objects.values()
            )
            if not has_open_surface:
                oid = new_id(filler)
                objects[oid] = ObjectInstance(id=oid, cls=filler, location=loc)

    holders = sorted(
        (o for o in objects.values() if o.klass.placeable and o.cls != SINK_CLASS),
        key=lambda o: o.id,
    )
    for cls in movable:
        for _ in range(counts[cls]):
            oid = new_id(cls)
            if holders:
                host = holders[int(rng.integers(0, len(holders)))]
                objects[oid] = ObjectInstance(id=oid, cls=cls, location=host.location, inside=host.id)
            else:
                loc = nodes[int(rng.integers(0, n_locations))]
                objects[oid] = ObjectInstance(id=oid, cls=cls, location=loc)

    start = nodes[int(rng.integers(0, n_locations))]
    scene = Scene(
        id=int(seed) if scene_id is None else int(scene_id),
        room_type=room_type,
        graph=graph,
        objects=dict(sorted(objects.items())),
        sink_location=sink_location,
        seed=int(seed),
        start_location=start,
    )
    problems = validate_scene(scene)
    if problems:
        raise SizeError("; ".join(problems))
    return scene


def validate_scene(scene: Scene) -> list[str]:
    """Return every violated scene invariant (empty list means ok)."""
    out: list[str] = []
    g = scene.graph
    nodes = set(g.nodes)
    if len(nodes) != len(g.nodes):
        out.append("duplicate location ids")
    for a, b, c in g.edges:
        if a not in nodes or b not in nodes:
            out.append(f"edge endpoint not in graph: {a}-{b}")
        if c < 1:
            out.append(f"edge cost < 1: {a}-{b}")
    if not g.is_connected():
        out.append("graph not connected")
    if scene.sink_location not in nodes:
        out.append("sink location not in graph")
    sinks = scene.instances(SINK_CLASS)
    if len(sinks) > 1:
        out.append("exactly one sink")
    for s in sinks:
        if s.location != scene.sink_location:
            out.append(f"sink {s.id} away from sink location")
    if scene.start_location not in nodes:
        out.append("start location not in graph")
    for oid, o in scene.objects.items():
        if o.id != oid:
            out.append(f"id mismatch for {oid}")
        if o.cls not in CLASSES:
            out.append(f"unknown class for {oid}: {o.cls}")
            continue
        k = o.klass
        if o.location not in nodes:
            out.append(f"location not in graph: {oid}")
        if o.inside is not None:
            if o.inside == oid:
                out.append(f"object inside itself: {oid}")
            elif o.inside not in scene.objects:
                out.append(f"inside unknown object: {oid}")
            else:
                host = scene.objects[o.inside]
                if host.location != o.location:
                    out.append(f"object {oid} not co-located with {host.id}")
                if not (host.klass.receptacle or host.klass.mrecep):
                    out.append(f"host {host.id} is not a receptacle")
        if o.busy_remaining < 0:
            out.append(f"negative busy_remaining: {oid}")
        if o.busy_remaining > 0 and not k.appliance:
            out.append(f"busy_remaining on non-appliance: {oid}")
        if o.open and not k.openable:
            out.append(f"open on non-openable: {oid}")
        if k.receptacle and o.inside is not None:
            out.append(f"fixed receptacle inside another object: {oid}")
        if (not o.clean or o.used) and not k.cleanable:
            out.append(f"cleanliness state on non-cleanable: {oid}")
        if o.used and AffordanceCategory.USED not in k.applicable_categories:
            out.append(f"used state not admitted by class: {oid}")
    return out


def classes_present(scene: Scene) -> set[str]:
    return {o.cls for o in scene.objects.values()}


def iter_contents(scene_objects: dict[str, ObjectInstance], host: str) -> Iterable[ObjectInstance]:
    """Objects transitively inside ``host``."""
    stack = [host]
    while stack:
        h = stack.pop()
        for o in scene_objects.values():
            if o.inside == h:
                yield o
                stack.append(o.id)
