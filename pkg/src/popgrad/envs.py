"""Desk-scale evaluation targets.

Three episodic environments cover the qualitative regimes that matter for
comparing evolutionary and gradient-based policy search:

* ``pointmass`` -- informative gradients: reward is the negative distance to a
  goal, so the critic's improvement direction is genuinely useful.
* ``pendulum`` -- harder control: torque-limited swing-up with the classic
  quadratic state/action cost.
* ``deceptive`` -- deceptive gradients: a corridor that pays a small per-step
  reward for drifting left (fully visible to a one-step critic) but a large
  terminal bonus only for walking right for the whole episode.

Two direct black-box fitness functions (``sphere``, ``rastrigin``) support the
optimizer in isolation. Everything is deterministic given (seed, actions);
observations are raw, unnormalized state.

Environments are passive transition functions: ``reset`` returns a state
vector, ``step(state, action)`` returns ``(next_state, reward, done)`` without
touching shared mutable state, and ``observe`` projects the state onto what the
policy sees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nets import DivergenceError, NetSpec, forward
from .rl import Transition


@dataclass(frozen=True)
class EnvSpec:
    name: str
    obs_dim: int
    action_dim: int
    horizon: int
    reward_doc: str

    def __post_init__(self):
        if self.horizon < 1 or self.obs_dim < 1 or self.action_dim < 1:
            raise ValueError(f"invalid environment spec {self}")


class PointMass:
    """2-D reacher: the agent is a velocity-controlled point chasing a goal.

    Observation is [position, goal]; the action moves the point by 0.05 times
    the commanded velocity per step; reward is minus the distance to the goal
    after the move. The start is drawn uniformly in a wide box around a fixed
    off-center goal, so a competent policy must home in from every direction;
    no random network manages that by accident, which keeps run-to-run spread
    down to genuine learning differences.
    """

    VEL_SCALE = 0.05
    GOAL = (0.7, 0.7)
    START_BOX = 1.5

    def __init__(self):
        self.spec = EnvSpec("pointmass", 4, 2, 100, "-||position - goal|| after the move")
        self.clamped_actions = 0

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        pos = rng.uniform(-self.START_BOX, self.START_BOX, size=2)
        return np.concatenate([pos, self.GOAL, [0.0]])

    def observe(self, state: np.ndarray) -> np.ndarray:
        return state[:4].copy()

    def step(self, state: np.ndarray, action: np.ndarray):
        a = self._clamp(action)
        pos = state[:2] + self.VEL_SCALE * a
        goal = state[2:4]
        t = state[4] + 1.0
        reward = -float(np.linalg.norm(pos - goal))
        done = t >= self.spec.horizon
        return np.concatenate([pos, goal, [t]]), reward, done

    def _clamp(self, action: np.ndarray) -> np.ndarray:
        a = np.asarray(action, dtype=np.float64)
        if np.any(a < -1.0) or np.any(a > 1.0):
            self.clamped_actions += 1
            a = np.clip(a, -1.0, 1.0)
        return a


class PendulumSwingUp:
    """Torque-limited pendulum. Observation [cos th, sin th, thdot]; theta=0 is
    upright; reward -(th^2 + 0.1 thdot^2 + 0.001 a^2) with the angle wrapped to
    [-pi, pi). Start angle uniform in [-pi, pi], start velocity in [-1, 1]."""

    G = 10.0
    MASS = 1.0
    LENGTH = 1.0
    DT = 0.05
    MAX_TORQUE = 2.0
    MAX_SPEED = 8.0

    def __init__(self):
        self.spec = EnvSpec("pendulum", 3, 1, 200, "quadratic swing-up cost, wrapped angle")
        self.clamped_actions = 0

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        theta = rng.uniform(-np.pi, np.pi)
        theta_dot = rng.uniform(-1.0, 1.0)
        return np.array([theta, theta_dot, 0.0])

    def observe(self, state: np.ndarray) -> np.ndarray:
        theta, theta_dot = state[0], state[1]
        return np.array([np.cos(theta), np.sin(theta), theta_dot])

    def step(self, state: np.ndarray, action: np.ndarray):
        a = self._clamp(action)
        theta, theta_dot, t = state[0], state[1], state[2]
        torque = self.MAX_TORQUE * a[0]
        accel = (3.0 * self.G / (2.0 * self.LENGTH) * np.sin(theta)
                 + 3.0 / (self.MASS * self.LENGTH ** 2) * torque)
        theta_dot = np.clip(theta_dot + accel * self.DT, -self.MAX_SPEED, self.MAX_SPEED)
        theta = theta + theta_dot * self.DT
        wrapped = (theta + np.pi) % (2.0 * np.pi) - np.pi
        reward = -float(wrapped ** 2 + 0.1 * theta_dot ** 2 + 0.001 * a[0] ** 2)
        t += 1.0
        done = t >= self.spec.horizon
        return np.array([theta, theta_dot, t]), reward, done

    def _clamp(self, action: np.ndarray) -> np.ndarray:
        a = np.asarray(action, dtype=np.float64)
        if np.any(a < -1.0) or np.any(a > 1.0):
            self.clamped_actions += 1
            a = np.clip(a, -1.0, 1.0)
        return a


class DeceptiveCorridor:
    """1-D corridor whose per-step reward lures the agent the wrong way.

    Drifting left pays +0.1 per unit of leftward action each step, a smooth
    signal any one-step critic latches onto. Moving right costs 0.01 per unit
    of rightward action, but the episode ends with a bonus of up to +100 that
    only a sustained rightward walk can collect. A myopic one-step-greedy
    policy therefore scores strictly less than the sustained-right policy.
    """

    VEL_SCALE = 0.05
    LEFT_REWARD = 0.1
    RIGHT_COST = 0.01
    BONUS = 100.0
    BONUS_CENTER = 3.0
    BONUS_WIDTH = 0.5

    def __init__(self):
        self.spec = EnvSpec("deceptive", 1, 1, 100,
                            "left drift pays per step, terminal bonus far right")
        self.clamped_actions = 0

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        return np.array([0.0, 0.0])

    def observe(self, state: np.ndarray) -> np.ndarray:
        return state[:1].copy()

    def step(self, state: np.ndarray, action: np.ndarray):
        a = self._clamp(action)
        x = state[0] + self.VEL_SCALE * a[0]
        t = state[1] + 1.0
        reward = self.LEFT_REWARD * max(0.0, -a[0]) - self.RIGHT_COST * max(0.0, a[0])
        done = t >= self.spec.horizon
        if done:
            reward += self.BONUS / (1.0 + np.exp(-(x - self.BONUS_CENTER) / self.BONUS_WIDTH))
        return np.array([x, t]), float(reward), done

    def _clamp(self, action: np.ndarray) -> np.ndarray:
        a = np.asarray(action, dtype=np.float64)
        if np.any(a < -1.0) or np.any(a > 1.0):
            self.clamped_actions += 1
            a = np.clip(a, -1.0, 1.0)
        return a


class ConstantRewardEnv:
    """Fixed reward every step; useful for exercising bookkeeping in tests."""

    def __init__(self, reward: float = 1.0, horizon: int = 5):
        self.reward = float(reward)
        self.spec = EnvSpec("constant", 1, 1, horizon, f"always {reward}")
        self.clamped_actions = 0

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        return np.array([0.0])

    def observe(self, state: np.ndarray) -> np.ndarray:
        return np.array([state[0] / self.spec.horizon])

    def step(self, state: np.ndarray, action: np.ndarray):
        t = state[0] + 1.0
        return np.array([t]), self.reward, t >= self.spec.horizon


@dataclass(frozen=True)
class BlackBoxProblem:
    """Direct genome -> fitness map (maximization); optimum at the origin with value 0."""

    name: str
    dim: int

    def fitness(self, genome: np.ndarray) -> float:
        x = np.asarray(genome, dtype=np.float64)
        if x.size != self.dim:
            raise ValueError(f"genome has dimension {x.size}, problem wants {self.dim}")
        if self.name == "sphere":
            return float(-np.sum(x * x))
        if self.name == "rastrigin":
            return float(-(10.0 * self.dim + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x))))
        raise ValueError(f"unknown black-box problem {self.name!r}")


EPISODIC_ENVS = ("pointmass", "pendulum", "deceptive")
BLACKBOX_ENVS = ("sphere", "rastrigin")


def make_env(name: str, blackbox_dim: int = 10):
    """Environment or black-box problem by name."""
    if name == "pointmass":
        return PointMass()
    if name == "pendulum":
        return PendulumSwingUp()
    if name == "deceptive":
        return DeceptiveCorridor()
    if name == "constant":
        return ConstantRewardEnv()
    if name in BLACKBOX_ENVS:
        return BlackBoxProblem(name=name, dim=blackbox_dim)
    raise ValueError(f"unknown environment {name!r}")


@dataclass
class EvalResult:
    mean_return: float
    returns: list
    env_steps: int
    transitions: list


def evaluate(actor: NetSpec, genome: np.ndarray, env, n_episodes: int,
             rng: np.random.Generator, action_noise_std: float = 0.0) -> EvalResult:
    """Greedy rollouts of one policy; returns fitness, step count and transitions.

    Optional Gaussian action noise of the given standard deviation is added
    before clamping to [-1, 1]. Fitness is the mean cumulative reward over the
    episodes. Episodes abort with DivergenceError if the state goes non-finite.
    """
    if n_episodes < 1:
        raise ValueError(f"need at least one episode, got {n_episodes}")
    returns = []
    transitions = []
    steps = 0
    for _ in range(n_episodes):
        state = env.reset(rng)
        ep_return = 0.0
        done = False
        step_count = 0
        while not done:
            obs = env.observe(state)
            action = forward(actor, genome, obs)
            if action_noise_std > 0.0:
                action = action + rng.normal(0.0, action_noise_std, size=action.shape)
            action = np.clip(action, -1.0, 1.0)
            state, reward, done = env.step(state, action)
            if not np.isfinite(state).all():
                raise DivergenceError(f"environment {env.spec.name} produced a non-finite state")
            step_count += 1
            # horizon truncation is not a terminal for bootstrapping purposes
            terminal = bool(done and step_count < env.spec.horizon)
            transitions.append(Transition(state=obs, action=action, reward=reward,
                                          next_state=env.observe(state), done=terminal))
            ep_return += reward
        returns.append(ep_return)
        steps += step_count
    return EvalResult(mean_return=float(np.mean(returns)), returns=returns,
                      env_steps=steps, transitions=transitions)
