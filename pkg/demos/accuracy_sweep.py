"""How success falls off as the affordance reasoner gets less reliable."""
from affordsim.genbench import GenConfig, build_dataset
from affordsim.runner import ReasonerConfig, RunConfig, run_episodes

ds = build_dataset(GenConfig(n_demos=120, seed=4, split_fractions={"test": 1.0}))
dyn = ds.select(mode="dynamic")
for acc in (1.0, 0.95, 0.9, 0.8, 0.7, 0.6):
    cfg = RunConfig(reasoner=ReasonerConfig("noisy", accuracy={}, default_accuracy=acc))
    runs = run_episodes(ds.scenes, dyn, cfg)
    rate = sum(r.result.success for r in runs) / len(runs)
    print(f"accuracy {acc:.2f}  SR {rate:.3f}  " + "#" * round(rate * 40))
