"""Stage-I affordance reasoners: ground-truth oracle, calibrated noisy oracle, external service."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Protocol

from ..sim import Observation
from ..world import CLASSES, AffordanceCategory

Probe = Callable[[], Observation]

DEFAULT_CLASS_ACCURACY = {"Microwave": 0.9562, "Pan": 0.9040}
DEFAULT_ACCURACY = 0.7539


class VerdictState(str, Enum):
    AVAILABLE = "available"
    UNAVAILABLE = "unavailable"
    NOT_VISIBLE = "not_visible"


@dataclass(frozen=True)
class ReasonerVerdict:
    state: VerdictState
    category: AffordanceCategory | None = None
    confidence: float = 1.0

    def __post_init__(self):
        if self.state is VerdictState.UNAVAILABLE and self.category is None:
            raise ValueError("an unavailable verdict needs a category")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")

    @property
    def available(self) -> bool:
        return self.state is VerdictState.AVAILABLE


AVAILABLE = ReasonerVerdict(VerdictState.AVAILABLE)
NOT_VISIBLE = ReasonerVerdict(VerdictState.NOT_VISIBLE)


@dataclass(frozen=True)
class QueryContext:
    episode: str
    step: int


class Reasoner(Protocol):
    label: str

    def reason(self, target: str, observation: Observation, ctx: QueryContext,
               probe: Probe | None = None) -> ReasonerVerdict: ...

    def close(self) -> None: ...


def verdict_from_latent(entry: Mapping) -> ReasonerVerdict:
    """Ground-truth verdict from a latent-revealing observation entry."""
    if entry.get("busy", 0) > 0:
        return ReasonerVerdict(VerdictState.UNAVAILABLE, AffordanceCategory.OCCUPIED)
    if entry.get("used", False):
        return ReasonerVerdict(VerdictState.UNAVAILABLE, AffordanceCategory.USED)
    if not entry.get("clean", True):
        return ReasonerVerdict(VerdictState.UNAVAILABLE, AffordanceCategory.DIRTY)
    return AVAILABLE


def oracle_reason(target: str, latent: Observation) -> ReasonerVerdict:
    entry = latent.get(target)
    if entry is None:
        return NOT_VISIBLE
    return verdict_from_latent(entry)


class OracleReasoner:
    """Reads the simulator's latent state exactly."""

    label = "oracle"

    def reason(self, target, observation, ctx, probe=None) -> ReasonerVerdict:
        if target not in observation.ids():
            return NOT_VISIBLE
        if probe is None:
            raise ValueError("the oracle reasoner needs a latent-state probe")
        return oracle_reason(target, probe())

    def close(self) -> None:
        pass


def keyed_uniform(*key) -> float:
    """A reproducible uniform draw in [0, 1) keyed by arbitrary values."""
    text = "|".join(str(k) for k in key).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "big") / 2**64


@dataclass
class NoisyReasoner:
    """The oracle verdict, flipped with probability 1 - accuracy[class].

    Draws are keyed by (seed, episode, step, object), so a rerun of the same
    episode sees the same mistakes.  A flip to "unavailable" picks a category
    the class admits.
    """

    accuracy: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_CLASS_ACCURACY))
    default: float = DEFAULT_ACCURACY
    seed: int = 0
    label: str = "noisy"

    def __post_init__(self):
        for name, acc in [*self.accuracy.items(), ("default", self.default)]:
            if not 0.5 < acc <= 1.0:
                raise ValueError(f"accuracy for {name} must lie in (0.5, 1]")

    @classmethod
    def uniform(cls, accuracy: float, seed: int = 0) -> "NoisyReasoner":
        return cls(accuracy={}, default=accuracy, seed=seed, label=f"noisy@{accuracy:g}")

    def accuracy_for(self, cls: str) -> float:
        return self.accuracy.get(cls, self.default)

    def reason(self, target, observation, ctx, probe=None) -> ReasonerVerdict:
        entry = observation.get(target)
        if entry is None:
            return NOT_VISIBLE
        if probe is None:
            raise ValueError("the noisy reasoner needs a latent-state probe")
        truth = oracle_reason(target, probe())
        acc = self.accuracy_for(entry["class"])
        if keyed_uniform(self.seed, ctx.episode, ctx.step, target) < acc:
            return ReasonerVerdict(truth.state, truth.category, acc)
        if truth.available:
            cats = sorted(CLASSES[entry["class"]].applicable_categories, key=lambda c: c.value)
            if not cats:
                return ReasonerVerdict(truth.state, truth.category, acc)
            pick = int(keyed_uniform(self.seed, ctx.episode, ctx.step, target, "category") * len(cats))
            return ReasonerVerdict(VerdictState.UNAVAILABLE, cats[pick], acc)
        return ReasonerVerdict(VerdictState.AVAILABLE, None, acc)

    def close(self) -> None:
        pass


class AlwaysAvailableReasoner:
    """Answers "available" for every visible target."""

    label = "always-available"

    def reason(self, target, observation, ctx, probe=None) -> ReasonerVerdict:
        return AVAILABLE if target in observation.ids() else NOT_VISIBLE

    def close(self) -> None:
        pass
