"""Train a small generator, compare it with the uniform baseline, sample from it.

Run with ``python demos/04_train_and_generate.py [out_dir]``. This is a
shortened desk preset (2 x 64 network, 10 volleys of 50 episodes) that runs in
under a minute. The full desk presets live in configs/.
"""
import sys

import numpy as np

from rlprng.harness import config_from_dict, evaluate, generate, load_bundle, train
from rlprng.harness.plot import plot_metrics

out = sys.argv[1] if len(sys.argv) > 1 else "demo_run"

cfg = config_from_dict({
    "environment": {"formulation": "binary", "reward_mode": "terminal",
                    "length": 80, "horizon": 100},
    "battery": {"preset": "calibrated"},
    "agent": {"algorithm": "ppo", "hidden": [64, 64], "policy_lr": 1e-3,
              "updates_per_volley": 2, "policy_steps": 40, "value_steps": 40},
    "training": {"volleys": 10, "episodes_per_volley": 50,
                 "baseline_count": 200, "evaluation_episodes": 0},
})

result = train(cfg, out, progress=lambda m: print(
    f"volley {m.volley}: mean final score {m.mean_final_score:.3f}"))
print(f"uniform baseline over {result.baseline.count} sequences: {result.baseline.mean:.3f}")

bundle = load_bundle(out)
report = evaluate(bundle, 50, np.random.default_rng(1))
print(f"evaluation: mean {report['mean']:.3f}, margin over baseline {report['margin']:+.3f}")

# three periods of 80 bits, printed as signed bytes
gen = generate(bundle, 3, np.random.default_rng(0))
for row, score in zip(gen.decimal_rows(), gen.scores):
    print(" ".join(f"{v:5d}" for v in row), f"  score {score:.2f}")

plot_metrics(f"{out}/metrics.csv", f"{out}/metrics.svg", baseline=result.baseline.mean)
print(f"curve written to {out}/metrics.svg")
