"""Off-policy actor-critic machinery: replay buffer, critic regression, policy gradient.

Two critic flavours are supported. The single-critic variant bootstraps its
target from one target network; the twin variant keeps two critics and takes
the minimum of their target estimates, with clipped Gaussian smoothing noise on
the target action, to curb overestimation. Targets trail the live networks
through soft updates and are never written by the training steps themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nets import (AdamState, DivergenceError, NetSpec, _backprop, _forward_pass,
                   adam_step, backward, forward)


@dataclass
class Transition:
    """One environment step. ``done`` is true only at a genuine terminal state,
    not at horizon truncation, so the bootstrap term survives truncation."""

    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return self.states.shape[0]


class ReplayBuffer:
    """Cyclic transition store: inserting beyond capacity evicts the oldest."""

    def __init__(self, capacity: int, obs_dim: int, action_dim: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.states = np.zeros((self.capacity, obs_dim))
        self.actions = np.zeros((self.capacity, action_dim))
        self.rewards = np.zeros(self.capacity)
        self.next_states = np.zeros((self.capacity, obs_dim))
        self.dones = np.zeros(self.capacity)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, t: Transition) -> "ReplayBuffer":
        i = self.cursor
        self.states[i] = t.state
        self.actions[i] = t.action
        self.rewards[i] = t.reward
        self.next_states[i] = t.next_state
        self.dones[i] = 1.0 if t.done else 0.0
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        return self

    def push_many(self, transitions) -> "ReplayBuffer":
        for t in transitions:
            self.push(t)
        return self

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform with replacement over current contents; batches larger than
        the buffer are allowed."""
        if self.size == 0:
            raise ValueError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(states=self.states[idx], actions=self.actions[idx],
                     rewards=self.rewards[idx], next_states=self.next_states[idx],
                     dones=self.dones[idx])


@dataclass
class LearnerState:
    """Critic parameters, their targets and optimizer moments, plus the
    bootstrap hyper-parameters. ``q2`` fields are None for the single-critic
    variant."""

    algo: str  # "td3" or "ddpg"
    critic: NetSpec
    obs_dim: int
    action_dim: int
    q1: np.ndarray
    q1_target: np.ndarray
    q1_adam: AdamState
    q2: np.ndarray | None = None
    q2_target: np.ndarray | None = None
    q2_adam: AdamState | None = None
    gamma: float = 0.99
    tau: float = 5e-3
    batch_size: int = 100
    policy_noise: float = 0.2
    noise_clip: float = 0.5
    policy_delay: int = 2

    @property
    def twin(self) -> bool:
        return self.q2 is not None


def make_learner(algo: str, obs_dim: int, action_dim: int, rng, hidden=(400, 300),
                 critic_lr: float = 1e-3, gamma: float = 0.99, tau: float = 5e-3,
                 batch_size: int = 100, policy_noise: float = 0.2,
                 noise_clip: float = 0.5, policy_delay: int = 2) -> LearnerState:
    """Fresh learner with targets initialized as exact copies of the live critics."""
    from .nets import critic_spec, init_params

    if algo not in ("td3", "ddpg"):
        raise ValueError(f"unknown learner algo {algo!r}")
    spec = critic_spec(obs_dim, action_dim, hidden)
    q1 = init_params(spec, rng)
    state = LearnerState(
        algo=algo, critic=spec, obs_dim=obs_dim, action_dim=action_dim,
        q1=q1, q1_target=q1.copy(), q1_adam=AdamState.zeros(q1.size, critic_lr),
        gamma=gamma, tau=tau, batch_size=batch_size,
        policy_noise=policy_noise if algo == "td3" else 0.0,
        noise_clip=noise_clip, policy_delay=policy_delay if algo == "td3" else 1)
    if algo == "td3":
        q2 = init_params(spec, rng)
        state.q2 = q2
        state.q2_target = q2.copy()
        state.q2_adam = AdamState.zeros(q2.size, critic_lr)
    return state


def _critic_values(learner: LearnerState, params: np.ndarray, states, actions) -> np.ndarray:
    x = np.concatenate([states, actions], axis=1)
    return forward(learner.critic, params, x)[:, 0]


def critic_target(learner: LearnerState, batch: Batch, actor_target: np.ndarray,
                  actor: NetSpec, rng: np.random.Generator) -> np.ndarray:
    """Frozen regression target y for the batch.

    Twin variant: y = r + gamma * (1 - done) * min(Q1_t, Q2_t)(s', a~) where a~
    is the target action plus clipped Gaussian smoothing noise, clamped to the
    action box. Single-critic variant: same with Q1_t only and no noise.
    """
    a = forward(actor, actor_target, batch.next_states)
    if learner.twin and learner.policy_noise > 0.0:
        noise = rng.normal(0.0, learner.policy_noise, size=a.shape)
        np.clip(noise, -learner.noise_clip, learner.noise_clip, out=noise)
        a = np.clip(a + noise, -1.0, 1.0)
    x = np.concatenate([batch.next_states, a], axis=1)
    q = forward(learner.critic, learner.q1_target, x)[:, 0]
    if learner.twin:
        q = np.minimum(q, forward(learner.critic, learner.q2_target, x)[:, 0])
    return batch.rewards + learner.gamma * (1.0 - batch.dones) * q


def critic_update(learner: LearnerState, batch: Batch, actor_target: np.ndarray,
                  actor: NetSpec, rng: np.random.Generator) -> float:
    """One Adam step per live critic on the mean-squared Bellman error.

    The target y is detached: no gradient flows through the target networks,
    and this function never writes them. Returns the mean loss over critics.
    """
    y = critic_target(learner, batch, actor_target, actor, rng)
    x = np.concatenate([batch.states, batch.actions], axis=1)
    b = len(batch)
    heads = [(learner.q1, learner.q1_adam)]
    if learner.twin:
        heads.append((learner.q2, learner.q2_adam))
    total = 0.0
    for params, adam in heads:
        acts, pres = _forward_pass(learner.critic, params, x)
        err = acts[-1][:, 0] - y
        loss = float(np.mean(err * err))
        if not np.isfinite(loss):
            raise DivergenceError(f"critic loss diverged ({loss})")
        total += loss
        grad, _ = _backprop(learner.critic, params, acts, pres, (2.0 / b) * err[:, None])
        adam_step(adam, params, grad)
    return total / len(heads)


def actor_update(learner: LearnerState, actor_params: np.ndarray, actor_adam: AdamState,
                 actor: NetSpec, batch: Batch) -> np.ndarray:
    """One Adam ascent step on mean_batch Q1(s, pi(s)); critic parameters frozen."""
    acts, pres = _forward_pass(actor, actor_params, batch.states)
    actions = acts[-1]
    x = np.concatenate([batch.states, actions], axis=1)
    ones = np.full((len(batch), 1), 1.0 / len(batch))
    c_acts, c_pres = _forward_pass(learner.critic, learner.q1, x)
    _, input_grad = _backprop(learner.critic, learner.q1, c_acts, c_pres, ones,
                              need_param_grad=False)
    dq_da = input_grad[:, learner.obs_dim:]
    grad, _ = _backprop(actor, actor_params, acts, pres, dq_da)
    adam_step(actor_adam, actor_params, -grad)
    return actor_params


def apply_policy_gradient(actor: NetSpec, actor_params: np.ndarray, actor_adam: AdamState,
                          states: np.ndarray, dq_da: np.ndarray) -> np.ndarray:
    """Ascend the actor along d(objective)/d(action) backpropagated through the policy."""
    grad, _ = backward(actor, actor_params, states, dq_da)
    adam_step(actor_adam, actor_params, -grad)
    return actor_params


def soft_update(target_params: np.ndarray, live_params: np.ndarray, tau: float) -> np.ndarray:
    """Exponential moving average: target <- tau * live + (1 - tau) * target."""
    if target_params.shape != live_params.shape:
        raise ValueError(
            f"target has size {target_params.size}, live has {live_params.size}")
    target_params *= 1.0 - tau
    target_params += tau * live_params
    return target_params
