import csv
import io
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affordsim.evaluation import (
    EpisodeResult,
    SplitReport,
    aggregate,
    episode_metrics,
    path_weight,
    read_results,
    render_report,
    write_results,
)


@st.composite
def results(draw):
    total = draw(st.integers(1, 8))
    success = draw(st.integers(0, 1))
    sat = total if success else draw(st.integers(0, total))
    return EpisodeResult(
        episode_id=f"e{draw(st.integers(0, 10**6))}",
        success=success,
        gc_satisfied=sat,
        gc_total=total,
        agent_steps=draw(st.integers(0, 500)),
        expert_steps=draw(st.integers(1, 200)),
        policy=draw(st.sampled_from(["vanilla", "adapt"])),
        scene_split=draw(st.sampled_from(["seen", "unseen"])),
        mode=draw(st.sampled_from(["static", "dynamic"])),
        difficulty=draw(st.sampled_from(["Basic", "Advanced"])),
    )


@settings(max_examples=400)
@given(r=results())
def test_metric_identities(r):
    m = episode_metrics(r)
    assert m.PLW_SR <= m.SR and m.PLW_GC <= m.GC
    assert m.GC >= m.SR
    if r.success:
        assert m.GC == 1.0
    # the equality case only discriminates when the metric is non-zero
    short = r.agent_steps <= r.expert_steps
    for x, plw in ((m.SR, m.PLW_SR), (m.GC, m.PLW_GC)):
        if x > 0:
            assert (plw == x) == short
        else:
            assert plw == 0


def test_path_weight_values():
    assert path_weight(10, 5) == 1.0
    assert path_weight(10, 10) == 1.0
    assert path_weight(10, 40) == 0.25


@pytest.mark.parametrize("kw", [
    dict(success=2),
    dict(gc_satisfied=4, gc_total=3),
    dict(success=1, gc_satisfied=1, gc_total=3),
    dict(expert_steps=0),
    dict(agent_steps=-1),
    dict(abort="crashed"),
])
def test_result_validation(kw):
    base = dict(episode_id="e", success=0, gc_satisfied=1, gc_total=3, agent_steps=4, expert_steps=4)
    with pytest.raises(ValueError):
        EpisodeResult(**{**base, **kw})


def _sample(n=60, seed=0):
    rng = random.Random(seed)
    out = []
    for i in range(n):
        total = rng.randint(1, 4)
        s = int(rng.random() < 0.5)
        out.append(EpisodeResult(f"e{i:03d}", s, total if s else rng.randint(0, total), total,
                                 rng.randint(1, 60), rng.randint(1, 30), policy="adapt",
                                 scene_split=rng.choice(["seen", "unseen"]), mode=rng.choice(["static", "dynamic"]),
                                 difficulty="Basic"))
    return out


def test_aggregate_by_hand():
    rs = [
        EpisodeResult("a", 1, 2, 2, 10, 10, mode="dynamic"),
        EpisodeResult("b", 0, 1, 2, 20, 10, mode="dynamic"),
    ]
    rep = aggregate(rs, ("mode",))
    dyn = rep.cell(mode="dynamic")
    assert dyn.n == 2 and dyn.SR == 50.0 and dyn.GC == 75.0
    assert dyn.PLW_SR == 50.0 and dyn.PLW_GC == 62.5
    assert rep.cell(mode="static").n == 0 and rep.cell(mode="static").SR is None


def test_aggregate_is_order_invariant():
    rs = _sample()
    shuffled = rs[:]
    random.Random(4).shuffle(shuffled)
    for fmt in ("json", "csv", "md"):
        assert render_report(aggregate(rs), fmt) == render_report(aggregate(shuffled), fmt)


def test_report_formats():
    rep = aggregate(_sample())
    md = render_report(rep, "md").splitlines()
    assert md[0] == "| scene_split | mode | difficulty | policy | n | GC | PLW GC | SR | PLW SR |"
    rows = list(csv.reader(io.StringIO(render_report(rep, "csv"))))
    assert rows[0][-4:] == ["GC", "PLW GC", "SR", "PLW SR"]
    assert any("n=0" in r for r in rows[1:])  # no Advanced results in the sample
    assert len(rows) - 1 == 2 * 2 * 2 * 1
    back = SplitReport.from_dict(json.loads(render_report(rep, "json")))
    assert back.cells == rep.cells
    with pytest.raises(ValueError):
        render_report(rep, "xml")


def test_results_file_round_trip(tmp_path):
    rs = _sample(10)
    write_results(rs, tmp_path / "r.jsonl")
    assert read_results(tmp_path / "r.jsonl") == rs
