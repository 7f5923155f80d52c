"""Run policies on dataset episodes and collect results and trajectories."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .actions import from_record
from .agent import (
    AdaptPolicy,
    AlwaysAvailableReasoner,
    BaselinePolicy,
    ExternalReasoner,
    NoisyReasoner,
    OracleReasoner,
    ReasonerError,
    ResolutionLoop,
)
from .agent.reasoners import DEFAULT_CLASS_ACCURACY, DEFAULT_ACCURACY
from .evaluation import EpisodeResult
from .sim import FailureReason, Trajectory, observe, reset, score_goal, step
from .tasks import EpisodeSpec
from .world import Scene

POLICIES = ("vanilla", "adapt")
REASONERS = ("oracle", "noisy", "external", "always-available")


@dataclass(frozen=True)
class ReasonerConfig:
    kind: str = "oracle"
    accuracy: dict | None = None  # per-class overrides for noisy
    default_accuracy: float | None = None
    endpoint: str | None = None
    seed: int = 0
    timeout: float = 5.0
    share_latent: bool = False

    def __post_init__(self):
        if self.kind not in REASONERS:
            raise ValueError(f"unknown reasoner {self.kind!r}")
        if self.kind == "external" and not self.endpoint:
            raise ValueError("the external reasoner needs an endpoint")

    def build(self):
        if self.kind == "oracle":
            return OracleReasoner()
        if self.kind == "always-available":
            return AlwaysAvailableReasoner()
        if self.kind == "noisy":
            acc = dict(DEFAULT_CLASS_ACCURACY) if self.accuracy is None else dict(self.accuracy)
            default = DEFAULT_ACCURACY if self.default_accuracy is None else self.default_accuracy
            label = "noisy" if self.accuracy is None and self.default_accuracy is None else f"noisy@{default:g}"
            return NoisyReasoner(acc, default, self.seed, label)
        return ExternalReasoner(self.endpoint, self.timeout, self.share_latent)


@dataclass(frozen=True)
class RunConfig:
    policy: str = "adapt"
    reasoner: ReasonerConfig = field(default_factory=ReasonerConfig)
    max_steps: int | None = None
    retries: int = 2
    parallel: int = 1

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")


@dataclass
class EpisodeRun:
    result: EpisodeResult
    trajectory: Trajectory
    queries: list = field(default_factory=list)


def make_policy(spec: EpisodeSpec, scene: Scene, config: RunConfig, reasoner=None):
    plan = [from_record(r) for r in spec.static_plan]
    if config.policy == "vanilla":
        return BaselinePolicy(plan, config.retries)
    return AdaptPolicy(plan, reasoner, spec.id, scene.sink_location, config.retries)


def run_episode(scene: Scene, spec: EpisodeSpec, config: RunConfig, reasoner=None) -> EpisodeRun:
    """Roll out one episode; the reasoner is built from the config unless given."""
    own = False
    if config.policy == "adapt" and reasoner is None:
        reasoner = config.reasoner.build()
        own = True
    try:
        policy = make_policy(spec, scene, config, reasoner)
        state = reset(scene, spec, config.max_steps)
        obs = observe(state)
        probe = lambda: observe(state, reveal_latent=True)  # noqa: E731
        traj = Trajectory()
        abort = "none"
        while not state.done:
            try:
                act = policy.next_action(obs, probe)
            except ResolutionLoop:
                abort = "loop"
                break
            except ReasonerError as e:
                abort = e.code
                break
            if act is None:
                break
            state, out, obs = step(state, act)
            traj.append(act, out, obs, state.step_count)
            if out.reason is FailureReason.BUDGET_EXCEEDED:
                abort = "budget"
                break
            policy.notify(act, out.public())
    finally:
        if own:
            reasoner.close()
    score = score_goal(state, spec.goal)
    result = EpisodeResult(
        episode_id=spec.id,
        success=int(score.success and abort == "none"),
        gc_satisfied=score.satisfied,
        gc_total=score.total,
        agent_steps=state.step_count,
        expert_steps=max(1, spec.expert_steps),
        policy=policy.label,
        reasoner="none" if config.policy == "vanilla" else reasoner.label,
        abort=abort,
        data_split=spec.split,
        scene_split=spec.scene_split,
        mode=spec.mode.value,
        difficulty=spec.difficulty.value,
    )
    queries = list(getattr(policy, "queries", []))
    return EpisodeRun(result, traj, queries)


def _run_one(args) -> EpisodeRun:
    scene, spec, config = args
    return run_episode(scene, spec, config)


def run_episodes(scenes: dict[int, Scene], episodes: Iterable[EpisodeSpec], config: RunConfig,
                 progress: Callable[[EpisodeRun], None] | None = None) -> list[EpisodeRun]:
    """Run many episodes; output is ordered by episode id whatever the parallelism."""
    jobs = [(scenes[e.scene_id], e, config) for e in sorted(episodes, key=lambda e: e.id)]
    if config.parallel > 1:
        with ProcessPoolExecutor(max_workers=config.parallel) as pool:
            runs = list(pool.map(_run_one, jobs, chunksize=8))
        if progress:
            for r in runs:
                progress(r)
    else:
        runs = []
        for j in jobs:
            runs.append(_run_one(j))
            if progress:
                progress(runs[-1])
    return sorted(runs, key=lambda r: r.result.episode_id)


def write_trajectories(runs: Sequence[EpisodeRun], out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for r in runs:
        r.trajectory.write(out / f"{r.result.episode_id}.jsonl")


def config_dict(config: RunConfig) -> dict:
    return asdict(config)
