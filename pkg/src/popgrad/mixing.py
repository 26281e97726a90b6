"""Sample reuse between consecutive generations via density-ratio accept/reject.

Genomes evaluated under the previous search distribution can be recycled into
the current generation when the two distributions overlap: an old sample z is
kept with probability min(1, p_new(z)/p_old(z)), and a freshly drawn sample z'
is kept with probability max(0, 1 - p_old(z')/p_new(z')). Reused genomes keep
their cached fitness and cost zero new environment steps, which is the whole
point of the mechanism.

Ratios are computed in log space and exponentiated once, since densities of
genomes with thousands of coordinates underflow immediately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cem import Individual, SearchDistribution, sample_population

_LOG_2PI = float(np.log(2.0 * np.pi))
_RATIO_CAP = 1e300


@dataclass
class GenerationArchive:
    """The previous generation's reusable individuals and the distribution they came from."""

    individuals: list
    distribution: SearchDistribution

    def __post_init__(self):
        for i, ind in enumerate(self.individuals):
            if ind.fitness is None:
                raise ValueError(f"archived individual {i} has no evaluated fitness")
            if ind.genome.size != self.distribution.dim:
                raise ValueError(
                    f"archived genome {i} has dimension {ind.genome.size}, "
                    f"snapshot has {self.distribution.dim}")

    def __len__(self) -> int:
        return len(self.individuals)


def log_pdf(dist: SearchDistribution, genome: np.ndarray) -> float:
    """Exact diagonal-Gaussian log density of ``genome`` under ``dist``.

    A zero-variance coordinate makes the density a point mass there: off-mean
    genomes get -inf, on-mean ones +inf.
    """
    z = np.asarray(genome, dtype=np.float64)
    if z.shape != dist.mu.shape:
        raise ValueError(f"genome has dimension {z.size}, distribution has {dist.dim}")
    degenerate = dist.sigma2 == 0.0
    if degenerate.any():
        if np.any(z[degenerate] != dist.mu[degenerate]):
            return float("-inf")
        return float("inf")
    dev = z - dist.mu
    return float(-0.5 * np.sum(_LOG_2PI + np.log(dist.sigma2) + dev * dev / dist.sigma2))


def _ratio(log_num: float, log_den: float) -> float:
    return float(np.clip(np.exp(min(log_num - log_den, 700.0)), 0.0, _RATIO_CAP))


def importance_mix(archive: GenerationArchive | None, new_dist: SearchDistribution,
                   n: int, rng: np.random.Generator):
    """Build a generation of exactly ``n`` individuals, reusing archived ones where allowed.

    Follows the accept/reject loop verbatim: each iteration draws two uniforms,
    tests the i-th archived genome against min(1, p_new/p_old), then draws and
    tests one fresh genome against max(0, 1 - p_old/p_new), stopping as soon as
    ``n`` individuals are collected. One overshoot is trimmed by removing a
    random sample; any shortfall is filled from the new distribution. With an
    empty archive this degenerates to pure sampling.
    """
    if n < 1:
        raise ValueError(f"generation size must be >= 1, got {n}")
    if archive is None or len(archive) == 0:
        return [Individual(genome=g) for g in sample_population(new_dist, n, rng)]

    old = archive.individuals
    old_dist = archive.distribution
    sqrt_var = np.sqrt(new_dist.sigma2)
    out: list[Individual] = []
    for i in range(n):
        rand1 = rng.uniform()
        rand2 = rng.uniform()
        if i < len(old):
            z = old[i]
            keep_old = min(1.0, _ratio(log_pdf(new_dist, z.genome), log_pdf(old_dist, z.genome)))
            if keep_old > rand1:
                out.append(Individual(genome=z.genome.copy(), fitness=z.fitness,
                                      env_steps=0, origin="reused"))
        fresh = new_dist.mu + rng.standard_normal(new_dist.dim) * sqrt_var
        keep_fresh = max(0.0, 1.0 - _ratio(log_pdf(old_dist, fresh), log_pdf(new_dist, fresh)))
        if keep_fresh > rand2:
            out.append(Individual(genome=fresh))
        if len(out) >= n:
            break
    if len(out) > n:
        out.pop(int(rng.integers(len(out))))
    while len(out) < n:
        fresh = new_dist.mu + rng.standard_normal(new_dist.dim) * sqrt_var
        out.append(Individual(genome=fresh))
    return out


def mixable_subset(pop):
    """Individuals eligible for the archive: gradient-stepped ones are excluded.

    Genomes moved by critic gradients are no longer samples of the search
    distribution, so their density ratio would be meaningless.
    """
    return [ind for ind in pop if ind.origin in ("sampled", "reused")]
