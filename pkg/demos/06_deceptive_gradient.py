"""The corridor where the critic's advice is poison.

Each step pays +0.1 for drifting left, a smooth signal any one-step critic
picks up immediately, while the real prize is a terminal bonus of up to +100
for walking right the whole episode at -0.01 per step. Gradient-stepped actors
get dragged left; the evolutionary half has to discover the bonus by search.
On this environment the optimizer alone beats the hybrid, the reverse of the
informative-gradient regime.
"""

from popgrad import HybridConfig, run_experiment

BUDGET = 30_000

for algo in ("cem", "cem_td3"):
    config = HybridConfig(env="deceptive", algo=algo, max_steps=BUDGET,
                          hidden_sizes=(32, 32))
    records = run_experiment(config, seed=0)
    print(f"{algo:8s} final mean return {records[-1].eval_mean:8.2f} "
          f"(greedy leftward drift scores 10, sustained right about 97)")
