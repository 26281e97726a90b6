"""Run the twin-critic learner alone on the point-mass reacher.

The single agent alternates one evaluation episode with an equally sized burst
of critic mini-batches (one per environment step), stepping the actor every
second batch and trailing both targets with soft updates.
"""

import numpy as np

from popgrad import HybridConfig, run_experiment

config = HybridConfig(env="pointmass", algo="td3", max_steps=20_000,
                      hidden_sizes=(32, 32), report_every=2000)
records = run_experiment(config, seed=0)

print("steps    mean return over 10 episodes")
for r in records:
    bar = "#" * max(0, int(40 + r.eval_mean))
    print(f"{r.total_steps:6d}  {r.eval_mean:8.2f}  {bar}")
