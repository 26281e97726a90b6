"""How sample reuse reacts to distribution drift.

Old genomes are recycled with probability min(1, p_new/p_old). When the search
distribution barely moves, almost the whole previous generation is reused and
the evaluation budget is saved; once the mean drifts a few standard deviations
the archive becomes worthless and everything is drawn fresh.
"""

import numpy as np

from popgrad import (GenerationArchive, Individual, SearchDistribution, importance_mix,
                     sample_population)

DIM, N = 50, 200
rng = np.random.default_rng(0)

old = SearchDistribution.from_mean(np.zeros(DIM), sigma_init=1e-2)
genomes = sample_population(old, N, rng)
archive = GenerationArchive(
    [Individual(genome=g, fitness=0.0) for g in genomes], old)

print("mean shift (in units of sigma)   reused fraction")
for shift_sigmas in (0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0):
    shifted = SearchDistribution.from_mean(
        np.full(DIM, shift_sigmas * np.sqrt(old.sigma2[0])), sigma_init=1e-2)
    out = importance_mix(archive, shifted, N, np.random.default_rng(1))
    reused = sum(1 for ind in out if ind.origin == "reused") / N
    print(f"{shift_sigmas:28.2f}   {reused:0.2f}")
