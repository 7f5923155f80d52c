"""A small tour: build a corpus, run both policies, print the score table.

    python demos/walkthrough.py
"""
from affordsim.evaluation import aggregate, render_report
from affordsim.genbench import GenConfig, build_dataset
from affordsim.runner import ReasonerConfig, RunConfig, run_episodes

ds = build_dataset(GenConfig(n_demos=60, seed=1, split_fractions={"test": 1.0}))
print(f"{len(ds.episodes)} episodes over {len(ds.scenes)} scenes")

# one dynamic episode, narrated
ep = ds.select(mode="dynamic")[0]
print(f"\n{ep.id}: {ep.annotations[0].goal_text}")
for inj in ep.injections:
    print(f"  hidden problem: {inj.object_id} is {inj.category.value}")
for policy in ("vanilla", "adapt"):
    run = run_episodes(ds.scenes, [ep], RunConfig(policy=policy))[0]
    print(f"  {policy:7s} success={run.result.success} steps={run.result.agent_steps}"
          f" (expert {run.result.expert_steps})")
    for at, target, verdict in run.queries[:4]:
        cat = f" ({verdict.category.value})" if verdict.category else ""
        print(f"    step {at}: {target} looks {verdict.state.value}{cat}")

results = []
for policy, reasoner in (("vanilla", "oracle"), ("adapt", "noisy"), ("adapt", "oracle")):
    cfg = RunConfig(policy=policy, reasoner=ReasonerConfig(reasoner))
    results += [r.result for r in run_episodes(ds.scenes, ds.episodes, cfg)]
print()
table = render_report(aggregate(results, ("mode", "policy", "reasoner")), "md")
print("\n".join(l for l in table.splitlines() if "| 0 | -" not in l))  # skip empty combinations
