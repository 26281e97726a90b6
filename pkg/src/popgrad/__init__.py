"""Policy search combining a diagonal-Gaussian cross-entropy optimizer with
off-policy actor-critic learners, plus the hybrid that gradient-steps half of
each generation."""

from .cem import (EliteWeights, Individual, SearchDistribution, compute_weights,
                  decay_epsilon, sample_population, select_elites, update_distribution)
from .envs import (BlackBoxProblem, ConstantRewardEnv, DeceptiveCorridor, EnvSpec,
                   EvalResult, PendulumSwingUp, PointMass, evaluate, make_env)
from .harness import (AggregateCurve, SimilarityReport, aggregate, emit_csv,
                      parse_config, read_csv, similarity_histogram)
from .loop import (ConfigError, HybridConfig, LoopState, RunContext, RunRecord,
                   gradient_budget, init_loop, multi_actor_step, run_experiment,
                   run_generation)
from .mixing import GenerationArchive, importance_mix, log_pdf, mixable_subset
from .nets import (AdamState, DivergenceError, NetSpec, actor_spec, adam_step, backward,
                   critic_spec, flatten, forward, init_params, param_count, unflatten)
from .rl import (Batch, LearnerState, ReplayBuffer, Transition, actor_update,
                 apply_policy_gradient, critic_target, critic_update, make_learner,
                 soft_update)

__version__ = "0.1.0"
