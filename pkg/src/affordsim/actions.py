"""High-level agent actions and their correspondence with ground PDDL actions."""

from __future__ import annotations

from dataclasses import dataclass

GOTO = "Goto"
PICKUP = "Pickup"
PUT = "Put"
OPEN = "Open"
CLOSE = "Close"
TOGGLE_ON = "ToggleOn"
TOGGLE_OFF = "ToggleOff"
HEAT = "Heat"
COOL = "Cool"
CLEAN = "Clean"
WAIT = "Wait"

ARITY = {
    GOTO: 1, PICKUP: 1, PUT: 2, OPEN: 1, CLOSE: 1, TOGGLE_ON: 1, TOGGLE_OFF: 1,
    HEAT: 2, COOL: 2, CLEAN: 1, WAIT: 0,
}

# ground schema -> (high-level name, positions of kept arguments)
_FROM_GROUND = {
    "Goto": (GOTO, (1,)),
    "Pickup": (PICKUP, (0,)),
    "PickupFloor": (PICKUP, (0,)),
    "PickupFromObject": (PICKUP, (0,)),
    "Put": (PUT, (0, 1)),
    "PutInObject": (PUT, (0, 1)),
    "Open": (OPEN, (0,)),
    "Close": (CLOSE, (0,)),
    "ToggleOn": (TOGGLE_ON, (0,)),
    "ToggleOff": (TOGGLE_OFF, (0,)),
    "Heat": (HEAT, (0, 1)),
    "Cool": (COOL, (0, 1)),
    "Clean": (CLEAN, (0,)),
    "Wait": (WAIT, ()),
    "WaitTick": (WAIT, ()),
    "WaitFree": (WAIT, ()),
}


@dataclass(frozen=True)
class Action:
    name: str
    args: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if self.name not in ARITY:
            raise ValueError(f"unknown action {self.name!r}")
        if len(self.args) != ARITY[self.name]:
            raise ValueError(f"{self.name} takes {ARITY[self.name]} arguments")

    @property
    def objects(self) -> tuple[str, ...]:
        """Object ids the action manipulates (locations excluded)."""
        return () if self.name == GOTO else self.args

    def __str__(self) -> str:
        return f"{self.name}({', '.join(self.args)})"

    def to_list(self) -> list:
        return [self.name, *self.args]

    @classmethod
    def from_list(cls, items) -> "Action":
        return cls(items[0], tuple(items[1:]))

    @classmethod
    def parse(cls, text: str) -> "Action":
        name, _, rest = text.strip().partition("(")
        rest = rest.rstrip(")")
        args = tuple(a.strip() for a in rest.split(",") if a.strip())
        return cls(name.strip(), args)


def from_ground(name: str, args) -> Action:
    """The agent-level action a ground PDDL action corresponds to."""
    try:
        hl, keep = _FROM_GROUND[name]
    except KeyError:
        raise ValueError(f"no agent action for ground schema {name!r}") from None
    return Action(hl, tuple(args[i] for i in keep))


def from_record(record: dict) -> Action:
    return from_ground(record["action"], record["args"])


def wait() -> Action:
    return Action(WAIT)
