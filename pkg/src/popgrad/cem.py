"""Diagonal-Gaussian cross-entropy optimizer.

The search state is a Gaussian with diagonal covariance over flat genomes.
Each generation samples a population, evaluates it, and refits mean and
per-coordinate variance to the highest-fitness individuals:

    mean_new = sum_i w_i z_i
    var_new  = sum_i w_i (z_i - mean_old)^2 + epsilon

where the z_i are the elites ordered best first, the variance update is taken
around the *old* mean, and epsilon is an extra-variance floor that decays
geometrically toward ``sigma_end`` to prevent premature collapse. Fitness is
always maximized; negate minimization problems at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

ORIGINS = ("sampled", "gradient_stepped", "reused")
WEIGHT_SCHEMES = ("uniform", "log_rank")


@dataclass
class SearchDistribution:
    """Mean, per-coordinate variance and the decaying extra-variance term."""

    mu: np.ndarray
    sigma2: np.ndarray
    epsilon: float
    sigma_init: float = 1e-3
    sigma_end: float = 1e-5
    tau_cem: float = 0.95

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma2 = np.asarray(self.sigma2, dtype=np.float64)
        if self.mu.shape != self.sigma2.shape or self.mu.ndim != 1:
            raise ValueError(
                f"mu and sigma2 must be equal-length vectors, got {self.mu.shape} and {self.sigma2.shape}")
        if np.any(self.sigma2 < 0.0):
            raise ValueError("negative variance coordinate")
        if not self.sigma_end > 0.0:
            raise ValueError(f"sigma_end must be positive, got {self.sigma_end}")
        if self.epsilon < self.sigma_end:
            raise ValueError(f"epsilon {self.epsilon} below its floor sigma_end {self.sigma_end}")
        if not 0.0 <= self.tau_cem < 1.0:
            raise ValueError(f"tau_cem must lie in [0, 1), got {self.tau_cem}")

    @property
    def dim(self) -> int:
        return self.mu.size

    @classmethod
    def from_mean(cls, mu: np.ndarray, sigma_init: float = 1e-3, sigma_end: float = 1e-5,
                  tau_cem: float = 0.95) -> "SearchDistribution":
        """Start of a run: variance ``sigma_init`` everywhere, epsilon at ``sigma_init``."""
        mu = np.asarray(mu, dtype=np.float64)
        return cls(mu=mu.copy(), sigma2=np.full(mu.size, float(sigma_init)),
                   epsilon=float(sigma_init), sigma_init=float(sigma_init),
                   sigma_end=float(sigma_end), tau_cem=float(tau_cem))


@dataclass
class Individual:
    """One genome plus its evaluation record and provenance tag."""

    genome: np.ndarray
    fitness: float | None = None
    env_steps: int = 0
    origin: str = "sampled"

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")


@dataclass(frozen=True)
class EliteWeights:
    """Per-rank weights used in the distribution refit; sum to one, best rank first."""

    scheme: str
    n_elites: int
    values: np.ndarray


def compute_weights(scheme: str, n_elites: int) -> EliteWeights:
    """Uniform weights 1/K, or log-rank weights proportional to log(1+K)/rank."""
    if n_elites < 1:
        raise ValueError(f"need at least one elite, got {n_elites}")
    if scheme == "uniform":
        values = np.full(n_elites, 1.0 / n_elites)
    elif scheme == "log_rank":
        ranks = np.arange(1, n_elites + 1, dtype=np.float64)
        values = np.log1p(n_elites) / ranks
        values /= values.sum()
    else:
        raise ValueError(f"unknown weight scheme {scheme!r}")
    return EliteWeights(scheme=scheme, n_elites=n_elites, values=values)


def sample_population(dist: SearchDistribution, n: int, rng: np.random.Generator):
    """Draw ``n`` genomes coordinate-wise from N(mu, diag(sigma2)).

    The extra variance epsilon is already folded into sigma2 by the update, so
    it is not added again here. Returns a list of fresh 1-D arrays.
    """
    if n < 1:
        raise ValueError(f"population size must be >= 1, got {n}")
    noise = rng.standard_normal((n, dist.dim))
    draws = dist.mu + noise * np.sqrt(dist.sigma2)
    return [draws[i] for i in range(n)]


def select_elites(pop, n_elites: int):
    """The ``n_elites`` highest-fitness genomes, best first.

    Ties at the cut are broken by population index (stable sort), so selection
    is deterministic and unchanged by adding a constant to all fitnesses.
    """
    if len(pop) < n_elites:
        raise ValueError(f"population of {len(pop)} cannot supply {n_elites} elites")
    for i, ind in enumerate(pop):
        if ind.fitness is None:
            raise ValueError(f"individual {i} has no evaluated fitness")
    fits = np.array([ind.fitness for ind in pop], dtype=np.float64)
    order = np.argsort(-fits, kind="stable")
    return [pop[i].genome for i in order[:n_elites]]


def update_distribution(dist: SearchDistribution, elites, weights: EliteWeights) -> SearchDistribution:
    """Refit mean and variance to the elites, then decay epsilon.

    The variance refit uses the old mean and adds the current epsilon to every
    coordinate; the decay is applied once, after the update, so generation 0
    samples at sigma_init.
    """
    if len(elites) != weights.n_elites:
        raise ValueError(f"{len(elites)} elites but {weights.n_elites} weights")
    z = np.stack([np.asarray(e, dtype=np.float64) for e in elites])
    if z.shape[1] != dist.dim:
        raise ValueError(f"elite dimension {z.shape[1]} does not match distribution {dist.dim}")
    w = weights.values
    mu_new = w @ z
    dev = z - dist.mu
    sigma2_new = w @ (dev * dev) + dist.epsilon
    updated = replace(dist, mu=mu_new, sigma2=sigma2_new)
    return decay_epsilon(updated)


def decay_epsilon(dist: SearchDistribution) -> SearchDistribution:
    """One step of the affine recurrence pulling epsilon toward sigma_end."""
    eps = dist.tau_cem * dist.epsilon + (1.0 - dist.tau_cem) * dist.sigma_end
    return replace(dist, epsilon=eps)
