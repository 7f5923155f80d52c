"""Command-line entry point: gen, run, eval, replay and stub-reasoner."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import jsonschema

from .agent.protocol import STUB_MODES, serve_stub
from .evaluation import DEFAULT_GROUPING, aggregate, read_results, render_report, write_results
from .genbench import GEN_CONFIG_SCHEMA, Dataset, GenConfig, build_dataset
from .runner import POLICIES, REASONERS, ReasonerConfig, RunConfig, run_episodes, write_trajectories
from .sim import Trajectory, replay

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RUNTIME = 3

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "policy": {"enum": list(POLICIES)},
        "reasoner": {"enum": list(REASONERS)},
        "accuracy": {
            "oneOf": [
                {"type": "number", "exclusiveMinimum": 0.5, "maximum": 1},
                {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0.5,
                                                            "maximum": 1}},
            ]
        },
        "default_accuracy": {"type": "number", "exclusiveMinimum": 0.5, "maximum": 1},
        "endpoint": {"type": "string"},
        "timeout": {"type": "number", "exclusiveMinimum": 0},
        "share_latent": {"type": "boolean"},
        "seed": {"type": "integer", "minimum": 0},
        "max_steps": {"type": "integer", "minimum": 1},
        "retries": {"type": "integer", "minimum": 0},
        "parallel": {"type": "integer", "minimum": 1},
        "split": {"type": ["string", "null"]},
        "mode": {"enum": ["static", "dynamic", None]},
    },
}


class ValidationFailure(Exception):
    pass


def emit(event: str, **kv) -> None:
    parts = [f"event={event}"] + [f"{k}={_token(v)}" for k, v in kv.items()]
    print(" ".join(parts), flush=True)


def _token(v) -> str:
    if isinstance(v, float):
        return f"{v:.4f}"
    s = str(v)
    return json.dumps(s) if (" " in s or "=" in s or not s) else s


def _load_json(path: str | None, schema: dict) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ValidationFailure(f"config file not found: {path}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except ValueError as e:
        raise ValidationFailure(f"{path}: invalid JSON: {e}") from None
    _validate(data, schema, path)
    return data


def _validate(data, schema: dict, where: str) -> None:
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(data), key=lambda e: list(e.path))
    if errors:
        lines = []
        for e in errors:
            key = "/".join(str(p) for p in e.absolute_path) or "<root>"
            lines.append(f"{where}: {key}: {e.message}")
        raise ValidationFailure("\n".join(lines))


def _existing_dir(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise ValidationFailure(f"{what} not found: {path}")
    return p


# -- commands -----------------------------------------------------------------

def cmd_gen(args) -> int:
    data = _load_json(args.config, GEN_CONFIG_SCHEMA)
    for key in ("seed", "max_steps", "parallel"):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    _validate(data, GEN_CONFIG_SCHEMA, "gen config")
    config = GenConfig.from_dict(data)
    emit("gen_start", demos=config.n_demos, seed=config.seed, out=args.out)
    ds = build_dataset(config, args.out,
                       progress=lambda e: emit("episode", id=e.id, mode=e.mode.value,
                                               task=e.task.task_type.value, steps=e.expert_steps))
    c = ds.manifest["counts"]
    emit("gen_done", episodes=c["episodes"], static=c["static"], dynamic=c["dynamic"],
         scenes=len(ds.scenes), out=args.out)
    return EXIT_OK


def _run_config(args) -> tuple[RunConfig, dict]:
    data = _load_json(args.config, RUN_CONFIG_SCHEMA)
    flags = {
        "policy": args.policy, "reasoner": args.reasoner, "endpoint": args.endpoint,
        "timeout": args.timeout, "seed": args.seed, "max_steps": args.max_steps,
        "parallel": args.parallel, "split": args.split, "mode": args.mode,
    }
    if args.accuracy is not None:
        flags["accuracy"] = _parse_accuracy(args.accuracy)
    if args.share_latent:
        flags["share_latent"] = True
    data.update({k: v for k, v in flags.items() if v is not None})
    if "endpoint" not in data and os.environ.get("AFFORDSIM_REASONER_ENDPOINT"):
        data["endpoint"] = os.environ["AFFORDSIM_REASONER_ENDPOINT"]
    _validate(data, RUN_CONFIG_SCHEMA, "run config")
    acc = data.get("accuracy")
    default = data.get("default_accuracy")
    if isinstance(acc, (int, float)):
        acc, default = {}, float(acc)
    try:
        reasoner = ReasonerConfig(
            kind=data.get("reasoner", "oracle"), accuracy=acc, default_accuracy=default,
            endpoint=data.get("endpoint"), seed=data.get("seed", 0),
            timeout=data.get("timeout", 5.0), share_latent=data.get("share_latent", False),
        )
        config = RunConfig(policy=data.get("policy", "adapt"), reasoner=reasoner,
                           max_steps=data.get("max_steps"), retries=data.get("retries", 2),
                           parallel=data.get("parallel", 1))
    except ValueError as e:
        raise ValidationFailure(str(e)) from None
    return config, data


def _parse_accuracy(text: str):
    """``0.9`` (uniform) or ``Microwave=0.95,Pan=0.9``."""
    try:
        return float(text)
    except ValueError:
        pass
    out = {}
    for part in text.split(","):
        cls, sep, val = part.partition("=")
        if not sep:
            raise ValidationFailure(f"--accuracy: expected CLASS=VALUE, got {part!r}")
        try:
            out[cls.strip()] = float(val)
        except ValueError:
            raise ValidationFailure(f"--accuracy: {val!r} is not a number") from None
    return out


def cmd_run(args) -> int:
    root = _existing_dir(args.dataset, "dataset")
    if not (root / "manifest.json").is_file():
        raise ValidationFailure(f"{args.dataset}: no manifest.json")
    config, data = _run_config(args)
    ds = Dataset.load(root)
    episodes = ds.select(split=data.get("split"), mode=data.get("mode"))
    if not episodes:
        raise ValidationFailure("no episodes match the requested split/mode")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emit("run_start", episodes=len(episodes), policy=config.policy,
         reasoner=config.reasoner.kind, parallel=config.parallel)
    runs = run_episodes(ds.scenes, episodes, config,
                        progress=lambda r: emit("episode", id=r.result.episode_id,
                                                success=r.result.success, steps=r.result.agent_steps,
                                                abort=r.result.abort))
    results = [r.result for r in runs]
    write_results(results, out / "results.jsonl")
    write_trajectories(runs, out / "trajectories")
    (out / "run_config.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    sr = sum(r.success for r in results) / len(results)
    emit("run_done", episodes=len(results), sr=sr, results=str(out / "results.jsonl"))
    return EXIT_OK


def cmd_eval(args) -> int:
    path = Path(args.results)
    if not path.is_file():
        raise ValidationFailure(f"results file not found: {args.results}")
    try:
        results = read_results(path)
    except (ValueError, TypeError) as e:
        raise ValidationFailure(f"{args.results}: {e}") from None
    grouping = tuple(g for g in args.grouping.split(",") if g) if args.grouping else DEFAULT_GROUPING
    text = render_report(aggregate(results, grouping), args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        emit("eval_done", results=len(results), out=args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_replay(args) -> int:
    root = _existing_dir(args.dataset, "dataset")
    trace_path = Path(args.trace)
    if not trace_path.is_file():
        raise ValidationFailure(f"trace not found: {args.trace}")
    ds = Dataset.load(root)
    try:
        spec = ds.episode(args.episode)
    except KeyError:
        raise ValidationFailure(f"unknown episode {args.episode!r}") from None
    trace = Trajectory.read(trace_path)
    _, again = replay(ds.scene(spec), spec, trace.actions(), args.max_steps)
    for old, new in zip(trace.records, again.records):
        if old != new:
            emit("replay_mismatch", episode=spec.id, t=old.t, expected=old.action, outcome=new.outcome)
            return EXIT_RUNTIME
    if len(trace.records) != len(again.records):
        emit("replay_mismatch", episode=spec.id, t=len(again.records), reason="length")
        return EXIT_RUNTIME
    emit("replay_ok", episode=spec.id, steps=len(again.records))
    return EXIT_OK


def cmd_stub(args) -> int:
    if args.listen in ("stdio", "-"):
        serve_stub(args.mode, "stdio")
        return EXIT_OK
    try:
        serve_stub(args.mode, args.listen, ready=lambda ep: emit("listening", endpoint=ep))
    except KeyboardInterrupt:
        pass
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="affordsim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a dataset")
    g.add_argument("--config", help="JSON generation config")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--max-steps", type=int)
    g.add_argument("--parallel", type=int)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run a policy over a dataset")
    r.add_argument("--dataset", required=True)
    r.add_argument("--config", help="JSON run config; flags override it")
    r.add_argument("--policy", choices=POLICIES)
    r.add_argument("--reasoner", choices=REASONERS)
    r.add_argument("--accuracy", help="uniform accuracy or CLASS=ACC,... for the noisy reasoner")
    r.add_argument("--endpoint", help="stdio:<command> or tcp://host:port")
    r.add_argument("--share-latent", action="store_true", help="send latent state to the endpoint")
    r.add_argument("--timeout", type=float)
    r.add_argument("--split")
    r.add_argument("--mode", choices=("static", "dynamic"))
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--max-steps", type=int)
    r.add_argument("--parallel", type=int)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval", help="aggregate a results file")
    e.add_argument("--results", required=True)
    e.add_argument("--format", choices=("md", "csv", "json"), default="md")
    e.add_argument("--grouping", help="comma-separated result fields")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    rp = sub.add_parser("replay", help="re-execute a trajectory log and check it")
    rp.add_argument("--dataset", required=True)
    rp.add_argument("--episode", required=True)
    rp.add_argument("--trace", required=True)
    rp.add_argument("--max-steps", type=int)
    rp.set_defaults(func=cmd_replay)

    s = sub.add_parser("stub-reasoner", help="loopback reasoner for protocol tests")
    s.add_argument("--mode", choices=STUB_MODES, default="oracle")
    s.add_argument("--listen", default="stdio", help="stdio or host:port")
    s.set_defaults(func=cmd_stub)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationFailure, jsonschema.ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:  # noqa: BLE001
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
