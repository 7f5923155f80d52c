"""Episode metrics (SR, GC and their path-length-weighted forms) and grouped reports."""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

ABORT_CODES = ("none", "budget", "timeout", "malformed", "loop")
METRIC_COLUMNS = ("GC", "PLW GC", "SR", "PLW SR")
DEFAULT_GROUPING = ("scene_split", "mode", "difficulty", "policy")
_DOMAINS = {
    "scene_split": ("seen", "unseen"),
    "mode": ("static", "dynamic"),
    "difficulty": ("Basic", "Advanced"),
}


@dataclass(frozen=True)
class EpisodeResult:
    episode_id: str
    success: int
    gc_satisfied: int
    gc_total: int
    agent_steps: int
    expert_steps: int
    policy: str = "vanilla"
    reasoner: str = "none"
    abort: str = "none"
    data_split: str = "test"
    scene_split: str = "seen"
    mode: str = "static"
    difficulty: str = "Basic"

    def __post_init__(self):
        if self.success not in (0, 1):
            raise ValueError("success must be 0 or 1")
        if not 0 <= self.gc_satisfied <= self.gc_total:
            raise ValueError("gc_satisfied must lie in [0, gc_total]")
        if self.success and self.gc_satisfied != self.gc_total:
            raise ValueError("a successful episode satisfies every goal condition")
        if self.expert_steps < 1:
            raise ValueError("expert_steps must be >= 1")
        if self.agent_steps < 0:
            raise ValueError("agent_steps must be >= 0")
        if self.abort not in ABORT_CODES:
            raise ValueError(f"unknown abort code {self.abort!r}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "EpisodeResult":
        return cls(**json.loads(text))


@dataclass(frozen=True)
class Metrics:
    SR: float
    GC: float
    PLW_SR: float
    PLW_GC: float


def path_weight(expert_steps: int, agent_steps: int) -> float:
    """L* / max(L*, L): 1 for trajectories no longer than the expert's."""
    return expert_steps / max(expert_steps, agent_steps)


def episode_metrics(r: EpisodeResult) -> Metrics:
    sr = float(r.success)
    gc = 1.0 if r.gc_total == 0 else r.gc_satisfied / r.gc_total
    w = path_weight(r.expert_steps, r.agent_steps)
    return Metrics(sr, gc, sr * w, gc * w)


def write_results(results: Iterable[EpisodeResult], path: str | Path) -> None:
    Path(path).write_text("".join(r.to_json() + "\n" for r in results), encoding="utf-8")


def read_results(path: str | Path) -> list[EpisodeResult]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [EpisodeResult.from_json(l) for l in lines if l.strip()]


# -- aggregation --------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    key: tuple[str, ...]
    n: int
    GC: float | None
    PLW_GC: float | None
    SR: float | None
    PLW_SR: float | None

    def values(self) -> tuple:
        return (self.GC, self.PLW_GC, self.SR, self.PLW_SR)


@dataclass
class SplitReport:
    grouping: tuple[str, ...]
    cells: list[Cell] = field(default_factory=list)

    def cell(self, **key) -> Cell:
        want = tuple(key[g] for g in self.grouping)
        for c in self.cells:
            if c.key == want:
                return c
        raise KeyError(want)

    def to_dict(self) -> dict:
        return {
            "grouping": list(self.grouping),
            "columns": list(METRIC_COLUMNS),
            "cells": [
                {"key": dict(zip(self.grouping, c.key)), "n": c.n, "GC": c.GC, "PLW GC": c.PLW_GC,
                 "SR": c.SR, "PLW SR": c.PLW_SR}
                for c in self.cells
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SplitReport":
        grouping = tuple(d["grouping"])
        cells = [
            Cell(tuple(c["key"][g] for g in grouping), c["n"], c["GC"], c["PLW GC"], c["SR"], c["PLW SR"])
            for c in d["cells"]
        ]
        return cls(grouping, cells)


def _pct(xs: Sequence[float]) -> float:
    return round(100.0 * sum(xs) / len(xs), 2)


def aggregate(results: Iterable[EpisodeResult], grouping: Sequence[str] = DEFAULT_GROUPING) -> SplitReport:
    """Unweighted per-cell means in percent; every combination of key values gets a row."""
    results = list(results)
    grouping = tuple(grouping)
    domains = []
    for g in grouping:
        seen = sorted({getattr(r, g) for r in results})
        base = _DOMAINS.get(g, ())
        domains.append(tuple(base) + tuple(v for v in seen if v not in base))
    buckets: dict[tuple, list[Metrics]] = {}
    for r in sorted(results, key=lambda r: r.episode_id):
        buckets.setdefault(tuple(getattr(r, g) for g in grouping), []).append(episode_metrics(r))
    cells = []
    for key in itertools.product(*domains):
        ms = buckets.get(key, [])
        if not ms:
            cells.append(Cell(key, 0, None, None, None, None))
            continue
        cells.append(Cell(
            key, len(ms),
            _pct([m.GC for m in ms]), _pct([m.PLW_GC for m in ms]),
            _pct([m.SR for m in ms]), _pct([m.PLW_SR for m in ms]),
        ))
    return SplitReport(grouping, cells)


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.2f}"


def render_report(report: SplitReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    header = [*report.grouping, "n", *METRIC_COLUMNS]
    rows = [[*c.key, str(c.n), *(_fmt(v) for v in c.values())] for c in report.cells]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row, c in zip(rows, report.cells):
            if c.n == 0:
                row[len(report.grouping)] = "n=0"
            w.writerow(row)
        return buf.getvalue()
    if fmt in ("md", "markdown", "markdown-table"):
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        for row in rows:
            lines.append("| " + " | ".join(x if x else "-" for x in row) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def write_report(report: SplitReport, path: str | Path, fmt: str = "json") -> Path:
    path = Path(path)
    path.write_text(render_report(report, fmt), encoding="utf-8")
    return path
