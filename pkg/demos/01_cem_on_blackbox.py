"""Drive the cross-entropy optimizer on the black-box benchmarks.

The optimizer keeps a diagonal Gaussian over solutions, refits it to the best
half of every generation, and decays its extra-variance floor. On the sphere
the mean homes in on the origin; on Rastrigin the variance floor is what
carries it across the local minima early on.
"""

import numpy as np

from popgrad import (HybridConfig, Individual, SearchDistribution, compute_weights,
                     make_env, sample_population, select_elites, update_distribution)

POP, ELITES, DIM = 10, 5, 10

for problem_name in ("sphere", "rastrigin"):
    problem = make_env(problem_name, blackbox_dim=DIM)
    rng = np.random.default_rng(0)
    dist = SearchDistribution.from_mean(rng.uniform(-1, 1, DIM), sigma_init=0.1)
    weights = compute_weights("log_rank", ELITES)

    print(f"--- {problem_name} ({DIM}-D, maximizing, optimum 0 at the origin)")
    for generation in range(301):
        genomes = sample_population(dist, POP, rng)
        pop = [Individual(genome=g, fitness=problem.fitness(g)) for g in genomes]
        dist = update_distribution(dist, select_elites(pop, ELITES), weights)
        if generation % 60 == 0:
            print(f"  gen {generation:3d}  f(mean) = {problem.fitness(dist.mu):12.6f}"
                  f"  ||mean|| = {np.linalg.norm(dist.mu):9.6f}"
                  f"  epsilon = {dist.epsilon:.2e}")
    print()
