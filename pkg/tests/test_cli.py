import json
import re
import sys

import pytest

from affordsim.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, main
from affordsim.evaluation import read_results

GEN = {"n_demos": 24, "seed": 5, "n_scenes_seen": 3, "n_scenes_unseen": 2,
       "split_fractions": {"test": 1.0}}
EVENT = re.compile(r"^event=\w+( \w+=(\"[^\"]*\"|\S+))*$")


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "gen.json"
    cfg.write_text(json.dumps(GEN))
    assert main(["gen", "--config", str(cfg), "--out", str(root / "ds")]) == EXIT_OK
    return root / "ds"


def run(args, capsys):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_writes_manifest(dataset):
    m = json.loads((dataset / "manifest.json").read_text())
    assert m["counts"]["episodes"] == GEN["n_demos"]
    assert len(list((dataset / "episodes").glob("*.json"))) == GEN["n_demos"]


def test_progress_lines_are_machine_parsable(dataset, tmp_path, capsys):
    code, out, _ = run(["run", "--dataset", dataset, "--policy", "vanilla", "--out", tmp_path], capsys)
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines and all(EVENT.match(l) for l in lines), lines[:3]
    assert lines[0].startswith("event=run_start") and lines[-1].startswith("event=run_done")


def test_run_is_deterministic_across_parallelism(dataset, tmp_path, capsys):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for out, par in ((a, 1), (b, 1), (c, 2)):
        code, _, _ = run(["run", "--dataset", dataset, "--policy", "adapt", "--reasoner", "noisy",
                          "--out", out, "--parallel", par], capsys)
        assert code == EXIT_OK
    assert (a / "results.jsonl").read_bytes() == (b / "results.jsonl").read_bytes()
    assert (a / "results.jsonl").read_bytes() == (c / "results.jsonl").read_bytes()
    for f in (a / "trajectories").iterdir():
        assert f.read_bytes() == (c / "trajectories" / f.name).read_bytes()


def test_pipeline_report(dataset, tmp_path, capsys):
    for pol in ("vanilla", "adapt"):
        assert run(["run", "--dataset", dataset, "--policy", pol, "--reasoner", "oracle",
                    "--out", tmp_path / pol], capsys)[0] == EXIT_OK
    merged = tmp_path / "all.jsonl"
    merged.write_text((tmp_path / "vanilla" / "results.jsonl").read_text()
                      + (tmp_path / "adapt" / "results.jsonl").read_text())
    code, out, _ = run(["eval", "--results", merged, "--format", "md", "--grouping", "mode,policy"], capsys)
    assert code == EXIT_OK
    assert out.splitlines()[0] == "| mode | policy | n | GC | PLW GC | SR | PLW SR |"
    rows = {tuple(c.strip() for c in l.strip("|").split("|")[:2]): l for l in out.splitlines()[2:]}
    sr = {k: float(v.strip("|").split("|")[5]) for k, v in rows.items()}
    assert sr["dynamic", "adapt"] > sr["dynamic", "vanilla"]
    assert sr["static", "adapt"] == sr["static", "vanilla"]
    again = run(["eval", "--results", merged, "--format", "md", "--grouping", "mode,policy"], capsys)[1]
    assert again == out


def test_replay_accepts_own_trace_and_rejects_tampering(dataset, tmp_path, capsys):
    run(["run", "--dataset", dataset, "--mode", "dynamic", "--out", tmp_path], capsys)
    trace = sorted((tmp_path / "trajectories").iterdir())[0]
    code, out, _ = run(["replay", "--dataset", dataset, "--episode", trace.stem, "--trace", trace], capsys)
    assert code == EXIT_OK and out.startswith("event=replay_ok")
    lines = trace.read_text().splitlines()
    rec = json.loads(lines[0])
    rec["observation_digest"] = "0" * 64
    bad = tmp_path / "bad.jsonl"
    bad.write_text("\n".join([json.dumps(rec)] + lines[1:]) + "\n")
    code, out, _ = run(["replay", "--dataset", dataset, "--episode", trace.stem, "--trace", bad], capsys)
    assert code == EXIT_RUNTIME and "replay_mismatch" in out


def test_always_available_stub_matches_vanilla(dataset, tmp_path, capsys):
    ep = f"stdio:{sys.executable} -m affordsim stub-reasoner --mode always-available"
    run(["run", "--dataset", dataset, "--mode", "dynamic", "--reasoner", "external", "--endpoint", ep,
         "--out", tmp_path / "ext"], capsys)
    run(["run", "--dataset", dataset, "--mode", "dynamic", "--policy", "vanilla", "--out", tmp_path / "van"],
        capsys)
    ext = read_results(tmp_path / "ext" / "results.jsonl")
    van = read_results(tmp_path / "van" / "results.jsonl")
    assert sum(r.success for r in ext) == sum(r.success for r in van)


def test_schema_errors_name_the_key(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"n_demos": 5, "split_fractions": {"test": -1}}))
    code, _, err = run(["gen", "--config", cfg, "--out", tmp_path / "x"], capsys)
    assert code == EXIT_INVALID
    assert "split_fractions/test" in err


@pytest.mark.parametrize("args", [
    ["gen", "--config", "/nonexistent.json", "--out", "x"],
    ["run", "--dataset", "/nonexistent", "--out", "x"],
    ["eval", "--results", "/nonexistent.jsonl"],
])
def test_missing_paths(args, capsys):
    assert run(args, capsys)[0] == EXIT_INVALID


def test_run_config_validation(dataset, tmp_path, capsys):
    assert run(["run", "--dataset", dataset, "--reasoner", "external", "--out", tmp_path], capsys)[0] == EXIT_INVALID
    assert run(["run", "--dataset", dataset, "--reasoner", "noisy", "--accuracy", "0.3", "--out", tmp_path],
               capsys)[0] == EXIT_INVALID
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"policy": "adapt", "reasoner": "noisy", "accuracy": {"Microwave": 0.95}}))
    assert run(["run", "--dataset", dataset, "--config", cfg, "--out", tmp_path / "o"], capsys)[0] == EXIT_OK
    saved = json.loads((tmp_path / "o" / "run_config.json").read_text())
    assert saved["accuracy"] == {"Microwave": 0.95}


def test_runtime_error_exit_code(dataset, tmp_path, capsys):
    code, _, err = run(["run", "--dataset", dataset, "--mode", "dynamic", "--reasoner", "external",
                        "--endpoint", "stdio:/nonexistent/reasoner", "--out", tmp_path], capsys)
    assert code == EXIT_RUNTIME and "error" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["run"])
    assert e.value.code == 2
