"""Generation loop tying the evolutionary half to the gradient half.

One generation proceeds in a fixed order:

1. draw a population of genomes from the search distribution (optionally
   recycling the previous generation through importance mixing);
2. for each individual in the first half: copy a fresh target actor from its
   weights, train the shared critic for its pro-rata share of mini-batches,
   then step the actor along the critic's gradient for its budget, writing the
   moved weights back into the population;
3. evaluate every individual for one episode (reused ones keep their cached
   fitness and cost nothing), pushing all transitions into the replay buffer;
4. advance the step counters;
5. refit the search distribution to the top half of the population and decay
   the extra variance.

The critic budget is pro-rata to the fresh experience: one critic mini-batch
per environment step of the previous generation, split evenly over the
learning actors. Generation 0 therefore performs no gradient work at all and
is pure CEM. Baseline variants live here too: pure CEM, single-agent TD3/DDPG
with episodic training bursts, and a multi-actor TD3 where the learning-half
actors share one critic but evolve nothing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cem import (EliteWeights, Individual, SearchDistribution, compute_weights,
                  sample_population, select_elites, update_distribution)
from .envs import BLACKBOX_ENVS, BlackBoxProblem, EPISODIC_ENVS, evaluate, make_env
from .mixing import GenerationArchive, importance_mix, mixable_subset
from .nets import AdamState, DivergenceError, NetSpec, actor_spec, init_params
from .rl import (LearnerState, ReplayBuffer, actor_update, critic_update, make_learner,
                 soft_update)

ALGOS = ("cem", "ddpg", "td3", "cem_ddpg", "cem_td3", "multi_actor_td3")
CEM_FAMILY = ("cem", "cem_ddpg", "cem_td3")
BUDGET_MODES = ("per_text", "per_pseudocode")


class ConfigError(ValueError):
    """A configuration key is unknown or its value is out of range."""


@dataclass
class HybridConfig:
    """Run configuration; defaults follow the reference hyper-parameters."""

    env: str = "pointmass"
    algo: str = "cem"
    pop_size: int = 10
    max_steps: int = 100_000
    importance_mixing: bool = False
    action_noise_std: float = 0.0
    exploration_noise_std: float = 0.1  # RL baselines' training episodes only
    actor_nonlinearity: str = "tanh"
    sigma_init: float = 1e-3
    sigma_end: float = 1e-5
    tau_cem: float = 0.95
    elite_count: int | None = None  # None -> pop_size // 2
    elite_scheme: str = "log_rank"
    gamma: float = 0.99
    tau: float = 5e-3
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    batch_size: int = 100
    buffer_capacity: int = 1_000_000
    policy_noise: float = 0.2
    noise_clip: float = 0.5
    policy_delay: int = 2
    gradient_budget_mode: str = "per_text"
    hidden_sizes: tuple = (400, 300)
    blackbox_dim: int = 10
    leaky_slope: float = 0.01
    report_episodes: int = 10
    report_every: int = 5000

    def __post_init__(self):
        if isinstance(self.hidden_sizes, list):
            self.hidden_sizes = tuple(self.hidden_sizes)

    @property
    def n_elites(self) -> int:
        return self.elite_count if self.elite_count is not None else self.pop_size // 2

    def validate(self) -> "HybridConfig":
        def fail(key, msg):
            raise ConfigError(f"{key}: {msg}")

        if self.algo not in ALGOS:
            fail("algo", f"unknown algorithm {self.algo!r}, expected one of {ALGOS}")
        if self.env not in EPISODIC_ENVS + BLACKBOX_ENVS + ("constant",):
            fail("env", f"unknown environment {self.env!r}")
        if self.env in BLACKBOX_ENVS and self.algo != "cem":
            fail("algo", f"{self.env} is a black-box problem; only algo=cem applies")
        if self.pop_size < 2 or self.pop_size % 2 != 0:
            fail("pop_size", f"must be even and >= 2 (half of the population takes "
                             f"gradient steps), got {self.pop_size}")
        if self.max_steps < 1:
            fail("max_steps", f"must be >= 1, got {self.max_steps}")
        if not 0.0 <= self.tau_cem < 1.0:
            fail("tau_cem", f"must lie in [0, 1), got {self.tau_cem}")
        if not self.sigma_end > 0.0:
            fail("sigma_end", f"must be positive, got {self.sigma_end}")
        if self.sigma_init < self.sigma_end:
            fail("sigma_init", f"{self.sigma_init} is below sigma_end {self.sigma_end}")
        if not 0.0 < self.gamma <= 1.0:
            fail("gamma", f"must lie in (0, 1], got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            fail("tau", f"must lie in (0, 1], got {self.tau}")
        if self.actor_lr <= 0.0 or self.critic_lr <= 0.0:
            fail("actor_lr/critic_lr", "learning rates must be positive")
        if self.batch_size < 1:
            fail("batch_size", f"must be >= 1, got {self.batch_size}")
        if self.buffer_capacity < 1:
            fail("buffer_capacity", f"must be >= 1, got {self.buffer_capacity}")
        if self.action_noise_std < 0.0:
            fail("action_noise_std", f"must be >= 0, got {self.action_noise_std}")
        if self.exploration_noise_std < 0.0:
            fail("exploration_noise_std", f"must be >= 0, got {self.exploration_noise_std}")
        if self.policy_noise < 0.0 or self.noise_clip < 0.0:
            fail("policy_noise/noise_clip", "must be >= 0")
        if self.policy_delay < 1:
            fail("policy_delay", f"must be >= 1, got {self.policy_delay}")
        if self.actor_nonlinearity not in ("tanh", "relu"):
            fail("actor_nonlinearity", f"must be tanh or relu, got {self.actor_nonlinearity!r}")
        if self.elite_scheme not in ("uniform", "log_rank"):
            fail("elite_scheme", f"must be uniform or log_rank, got {self.elite_scheme!r}")
        if self.elite_count is not None and not 1 <= self.elite_count <= self.pop_size:
            fail("elite_count", f"must lie in [1, pop_size], got {self.elite_count}")
        if self.gradient_budget_mode not in BUDGET_MODES:
            fail("gradient_budget_mode", f"expected one of {BUDGET_MODES}, "
                                         f"got {self.gradient_budget_mode!r}")
        if self.blackbox_dim < 1:
            fail("blackbox_dim", f"must be >= 1, got {self.blackbox_dim}")
        if not self.hidden_sizes or any(int(h) < 1 for h in self.hidden_sizes):
            fail("hidden_sizes", f"must be positive integers, got {self.hidden_sizes}")
        if self.report_episodes < 1 or self.report_every < 1:
            fail("report_episodes/report_every", "must be >= 1")
        return self


@dataclass
class RunRecord:
    """One evaluation checkpoint of a run, keyed by cumulative environment steps."""

    total_steps: int
    generation: int
    episode_returns: list
    wall_time_s: float
    reuse_fraction: float
    epsilon: float

    @property
    def eval_mean(self) -> float:
        return float(np.mean(self.episode_returns))

    @property
    def eval_median(self) -> float:
        return float(np.median(self.episode_returns))

    @property
    def ci68(self) -> float:
        r = np.asarray(self.episode_returns, dtype=np.float64)
        if r.size < 2:
            return 0.0
        return float(np.std(r, ddof=1) / np.sqrt(r.size))


def gradient_budget(actor_steps: int, pop_size: int, mode: str = "per_text"):
    """Mini-batch budgets per learning actor, derived from last generation's steps.

    The critic budget is 2 * actor_steps / pop_size in both modes, so the
    learning half collectively performs one critic batch per environment step.
    The actor budget equals the critic budget in ``per_text`` mode (the whole
    learning half takes actor_steps gradient steps between them) and the full
    actor_steps in ``per_pseudocode`` mode. Integer division, floored.
    """
    if pop_size < 2 or pop_size % 2 != 0:
        raise ValueError(f"pop_size must be even and >= 2, got {pop_size}")
    critic_batches = (2 * actor_steps) // pop_size
    if mode == "per_text":
        actor_batches = critic_batches
    elif mode == "per_pseudocode":
        actor_batches = actor_steps
    else:
        raise ValueError(f"unknown budget mode {mode!r}")
    return critic_batches, actor_batches


@dataclass
class LoopState:
    """Mutable state of one run of the generation loop."""

    total_steps: int
    actor_steps: int  # env steps consumed by the previous generation
    generation: int
    dist: SearchDistribution
    archive: GenerationArchive | None
    learner: LearnerState | None
    buffer: ReplayBuffer | None
    population: list = field(default_factory=list)
    reuse_fraction: float = 0.0


@dataclass
class RunContext:
    """Immutable-per-run companions of the loop state: environment, network
    shape, elite weights and the independent RNG streams."""

    env: object
    actor: NetSpec | None
    weights: EliteWeights
    sample_rng: np.random.Generator
    eval_rng: np.random.Generator
    learner_rng: np.random.Generator
    report_rng: np.random.Generator

    @property
    def blackbox(self) -> bool:
        return isinstance(self.env, BlackBoxProblem)


def _spawn_streams(seed):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(5)
    return [np.random.default_rng(c) for c in children]


def init_loop(config: HybridConfig, seed) -> tuple[LoopState, RunContext]:
    """Fresh state for a CEM-family run: distribution around a random actor,
    one shared learner for the hybrids, an empty cyclic buffer."""
    sample_rng, eval_rng, learner_rng, report_rng, init_rng = _spawn_streams(seed)
    env = make_env(config.env, config.blackbox_dim)
    if isinstance(env, BlackBoxProblem):
        actor = None
        mu0 = init_rng.uniform(-1.0, 1.0, size=env.dim)
    else:
        actor = actor_spec(env.spec.obs_dim, env.spec.action_dim, config.hidden_sizes,
                           config.actor_nonlinearity)
        mu0 = init_params(actor, init_rng)
    dist = SearchDistribution.from_mean(mu0, config.sigma_init, config.sigma_end,
                                        config.tau_cem)
    learner = None
    buffer = None
    if config.algo in ("cem_ddpg", "cem_td3"):
        learner = make_learner(
            "td3" if config.algo == "cem_td3" else "ddpg",
            env.spec.obs_dim, env.spec.action_dim, learner_rng,
            hidden=config.hidden_sizes, critic_lr=config.critic_lr, gamma=config.gamma,
            tau=config.tau, batch_size=config.batch_size, policy_noise=config.policy_noise,
            noise_clip=config.noise_clip, policy_delay=config.policy_delay)
        buffer = ReplayBuffer(config.buffer_capacity, env.spec.obs_dim, env.spec.action_dim)
    weights = compute_weights(config.elite_scheme, config.n_elites)
    state = LoopState(total_steps=0, actor_steps=0, generation=0, dist=dist,
                      archive=None, learner=learner, buffer=buffer)
    ctx = RunContext(env=env, actor=actor, weights=weights, sample_rng=sample_rng,
                     eval_rng=eval_rng, learner_rng=learner_rng, report_rng=report_rng)
    return state, ctx


def _draw_population(state: LoopState, config: HybridConfig, ctx: RunContext, n_grad: int):
    """Population of pop_size individuals; reused ones go to the non-gradient
    half so their cached fitness stays valid."""
    pop_size = config.pop_size
    if config.importance_mixing and state.archive is not None and len(state.archive) > 0:
        if n_grad > 0:
            fresh = sample_population(state.dist, n_grad, ctx.sample_rng)
            mixed = importance_mix(state.archive, state.dist, pop_size - n_grad,
                                   ctx.sample_rng)
            return [Individual(genome=g) for g in fresh] + mixed
        return importance_mix(state.archive, state.dist, pop_size, ctx.sample_rng)
    return [Individual(genome=g) for g in sample_population(state.dist, pop_size,
                                                            ctx.sample_rng)]


def _gradient_phase(state: LoopState, config: HybridConfig, ctx: RunContext,
                    population: list, n_grad: int) -> None:
    critic_batches, actor_batches = gradient_budget(state.actor_steps, config.pop_size,
                                                    config.gradient_budget_mode)
    if n_grad == 0 or (critic_batches == 0 and actor_batches == 0):
        return
    learner = state.learner
    try:
        for i in range(n_grad):
            ind = population[i]
            target_actor = ind.genome.copy()
            adam = AdamState.zeros(ind.genome.size, config.actor_lr)
            for _ in range(critic_batches):
                batch = state.buffer.sample(learner.batch_size, ctx.learner_rng)
                critic_update(learner, batch, target_actor, ctx.actor, ctx.learner_rng)
                soft_update(learner.q1_target, learner.q1, learner.tau)
                if learner.twin:
                    soft_update(learner.q2_target, learner.q2, learner.tau)
            for _ in range(actor_batches):
                batch = state.buffer.sample(learner.batch_size, ctx.learner_rng)
                actor_update(learner, ind.genome, adam, ctx.actor, batch)
            if actor_batches > 0:
                ind.origin = "gradient_stepped"
                ind.fitness = None
    except DivergenceError as e:
        raise DivergenceError(f"generation {state.generation}: {e}") from e


def _evaluate_population(state: LoopState, config: HybridConfig, ctx: RunContext,
                         population: list) -> int:
    new_steps = 0
    for ind in population:
        if ind.origin == "reused":
            continue  # cached fitness, zero new environment steps
        if ctx.blackbox:
            ind.fitness = ctx.env.fitness(ind.genome)
            ind.env_steps = 1
        else:
            noise = config.action_noise_std if ind.origin == "gradient_stepped" else 0.0
            result = evaluate(ctx.actor, ind.genome, ctx.env, 1, ctx.eval_rng, noise)
            ind.fitness = result.mean_return
            ind.env_steps = result.env_steps
            if state.buffer is not None:
                state.buffer.push_many(result.transitions)
        new_steps += ind.env_steps
    return new_steps


def run_generation(state: LoopState, config: HybridConfig, ctx: RunContext) -> LoopState:
    """Advance one generation: sample, gradient-step half, evaluate, refit."""
    n_grad = config.pop_size // 2 if config.algo in ("cem_ddpg", "cem_td3") else 0
    snapshot = state.dist
    population = _draw_population(state, config, ctx, n_grad)
    _gradient_phase(state, config, ctx, population, n_grad)
    new_steps = _evaluate_population(state, config, ctx, population)
    state.total_steps += new_steps
    state.actor_steps = new_steps
    elites = select_elites(population, ctx.weights.n_elites)
    state.dist = update_distribution(state.dist, elites, ctx.weights)
    if config.importance_mixing:
        state.archive = GenerationArchive(mixable_subset(population), snapshot)
    state.population = population
    state.reuse_fraction = sum(1 for i in population if i.origin == "reused") / len(population)
    state.generation += 1
    return state


def _report_mean_actor(state: LoopState, config: HybridConfig, ctx: RunContext) -> list:
    """Reporting-only rollouts of the distribution mean; steps are not counted
    against the budget and nothing is written to the buffer."""
    if ctx.blackbox:
        return [ctx.env.fitness(state.dist.mu)]
    result = evaluate(ctx.actor, state.dist.mu, ctx.env, config.report_episodes,
                      ctx.report_rng, 0.0)
    return result.returns


def _run_cem_family(config: HybridConfig, seed) -> list:
    state, ctx = init_loop(config, seed)
    records = []
    start = time.perf_counter()
    while state.total_steps < config.max_steps:
        run_generation(state, config, ctx)
        returns = _report_mean_actor(state, config, ctx)
        records.append(RunRecord(
            total_steps=state.total_steps, generation=state.generation,
            episode_returns=returns, wall_time_s=time.perf_counter() - start,
            reuse_fraction=state.reuse_fraction, epsilon=state.dist.epsilon))
    return records


def _run_rl_family(config: HybridConfig, seed) -> list:
    """Single-agent TD3/DDPG and the multi-actor variant: no sampling, no
    selection, just episodic evaluation bursts followed by pro-rata training."""
    _, eval_rng, learner_rng, report_rng, init_rng = _spawn_streams(seed)
    env = make_env(config.env)
    actor = actor_spec(env.spec.obs_dim, env.spec.action_dim, config.hidden_sizes,
                       config.actor_nonlinearity)
    n_actors = config.pop_size // 2 if config.algo == "multi_actor_td3" else 1
    base_algo = "ddpg" if config.algo == "ddpg" else "td3"
    # the multi-actor population starts like the hybrid's: samples around one
    # random actor, not independent re-initializations
    mean_actor = init_params(actor, init_rng)
    scale = np.sqrt(config.sigma_init)
    actors = [mean_actor if i == 0 and n_actors == 1 else
              mean_actor + scale * init_rng.standard_normal(mean_actor.size)
              for i in range(n_actors)]
    targets = [a.copy() for a in actors]
    adams = [AdamState.zeros(a.size, config.actor_lr) for a in actors]
    counters = [0] * n_actors
    learner = make_learner(base_algo, env.spec.obs_dim, env.spec.action_dim, learner_rng,
                           hidden=config.hidden_sizes, critic_lr=config.critic_lr,
                           gamma=config.gamma, tau=config.tau, batch_size=config.batch_size,
                           policy_noise=config.policy_noise, noise_clip=config.noise_clip,
                           policy_delay=config.policy_delay)
    buffer = ReplayBuffer(config.buffer_capacity, env.spec.obs_dim, env.spec.action_dim)

    # the single-agent learners explore through action noise during training
    # episodes (a standard piece of their recipe); the hybrid explores in
    # parameter space instead and leaves this at zero unless asked
    train_noise = max(config.exploration_noise_std, config.action_noise_std)

    records = []
    total_steps = 0
    round_index = 0
    next_report = config.report_every
    start = time.perf_counter()
    while total_steps < config.max_steps:
        try:
            total_steps += multi_actor_step(actors, targets, adams, counters, learner,
                                            buffer, actor, env, eval_rng, learner_rng,
                                            train_noise)
        except DivergenceError as e:
            raise DivergenceError(f"round {round_index}: {e}") from e
        round_index += 1
        while total_steps >= next_report:
            returns = [evaluate(actor, actors[i % n_actors], env, 1, report_rng).returns[0]
                       for i in range(config.report_episodes)]
            records.append(RunRecord(
                total_steps=total_steps, generation=round_index,
                episode_returns=returns, wall_time_s=time.perf_counter() - start,
                reuse_fraction=0.0, epsilon=0.0))
            next_report += config.report_every
    return records


def multi_actor_step(actors, targets, adams, counters, learner: LearnerState,
                     buffer: ReplayBuffer, actor: NetSpec, env,
                     eval_rng: np.random.Generator, learner_rng: np.random.Generator,
                     action_noise_std: float = 0.0) -> int:
    """One round of the multi-actor variant: evaluate every actor (filling the
    buffer), then give each its pro-rata gradient budget against the shared
    critic. No selection, no sampling; actors never exchange parameters.
    Returns the environment steps consumed."""
    if len(actors) < 1:
        raise ValueError("need at least one actor")
    round_steps = 0
    for a in actors:
        result = evaluate(actor, a, env, 1, eval_rng, action_noise_std)
        buffer.push_many(result.transitions)
        round_steps += result.env_steps
    budget = round_steps // len(actors)
    for i in range(len(actors)):
        for _ in range(budget):
            batch = buffer.sample(learner.batch_size, learner_rng)
            critic_update(learner, batch, targets[i], actor, learner_rng)
            soft_update(learner.q1_target, learner.q1, learner.tau)
            if learner.twin:
                soft_update(learner.q2_target, learner.q2, learner.tau)
            counters[i] += 1
            if counters[i] % learner.policy_delay == 0:
                actor_update(learner, actors[i], adams[i], actor, batch)
                soft_update(targets[i], actors[i], learner.tau)
    return round_steps


def run_experiment(config: HybridConfig, seed) -> list:
    """Run one seeded experiment to its step budget and return its records.

    CEM-family algorithms report the 10-episode return of the distribution mean
    after every generation; the RL baselines report their agent every
    ``report_every`` environment steps. Reporting rollouts use a dedicated RNG
    stream and do not count toward the step budget.
    """
    config.validate()
    if config.algo in CEM_FAMILY:
        return _run_cem_family(config, seed)
    return _run_rl_family(config, seed)
