"""
DDPG Core
Actor-critic updates, exploration and the episodic training loop

Actor: state (S/K, tau, previous action) -> sigmoid, negated to a position in [-1, 0].
Critic: (state, action) -> Q. Both train by plain SGD; targets track by soft updates.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np
import pandas as pd

from hedger.agent.mlp import Mlp, is_finite, soft_update
from hedger.agent.replay import Batch, ReplayBuffer, Transition
from hedger.errors import ParameterError

logger = logging.getLogger(__name__)

STATE_DIM = 3


@dataclass(frozen=True)
class AgentHyperparams:
    actor_lr: float = 5e-6
    critic_lr: float = 5e-4
    gamma: float = 1.0
    batch_size: int = 64
    tau: float = 0.005
    noise_start: float = 0.2
    noise_end: float = 0.02
    noise_decay_fraction: float = 0.8
    episodes: int = 5000
    steps_per_episode: int = 25
    kappa: float = 0.005
    buffer_capacity: int = 100_000
    warmup: int = 1000
    hidden: int = 64

    def __post_init__(self):
        if not 0 < self.actor_lr < self.critic_lr:
            raise ParameterError("learning rates must satisfy 0 < actor_lr < critic_lr")
        if not 0.0 <= self.gamma <= 1.0:
            raise ParameterError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.kappa < 0:
            raise ParameterError(f"kappa must be non-negative, got {self.kappa}")
        if self.batch_size < 1 or self.episodes < 1 or self.steps_per_episode < 1:
            raise ParameterError("batch_size, episodes and steps_per_episode must be >= 1")
        if not 0.0 <= self.tau <= 1.0:
            raise ParameterError(f"tau must lie in [0, 1], got {self.tau}")
        if not 0.0 < self.noise_decay_fraction <= 1.0:
            raise ParameterError("noise_decay_fraction must lie in (0, 1]")

    def noise_std(self, episode: int) -> float:
        """Linear decay from noise_start to noise_end over the first decay fraction of episodes."""
        horizon = max(1.0, self.noise_decay_fraction * self.episodes)
        frac = min(1.0, episode / horizon)
        return self.noise_start + frac * (self.noise_end - self.noise_start)


@dataclass
class AgentParams:
    actor: Mlp
    critic: Mlp
    target_actor: Mlp
    target_critic: Mlp
    hp: AgentHyperparams
    seed: int
    buffer: Optional[ReplayBuffer] = field(default=None, compare=False)

    def policy(self, states: np.ndarray) -> np.ndarray:
        """Deterministic positions for a batch of states."""
        return -self.actor(np.atleast_2d(states))[:, 0]

    def hyperparams_dict(self) -> dict:
        return asdict(self.hp)


class Environment(Protocol):
    finished: bool

    def reset(self, episode_seed: int): ...

    def step(self, action: float): ...


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    init, noise = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.Generator(np.random.Philox(init)), np.random.Generator(np.random.Philox(noise))


def init_agent(hp: AgentHyperparams, seed: int) -> AgentParams:
    init_rng, _ = _streams(seed)
    actor = Mlp.initialise((STATE_DIM, hp.hidden, hp.hidden, 1), "sigmoid", init_rng)
    critic = Mlp.initialise((STATE_DIM + 1, hp.hidden, hp.hidden, 1), "linear", init_rng)
    buffer = ReplayBuffer(hp.buffer_capacity, STATE_DIM, seed=int(seed) + 1)
    return AgentParams(actor, critic, actor.copy(), critic.copy(), hp, int(seed), buffer)


def act(actor: Mlp, state: np.ndarray, noise_std: float, rng: Optional[np.random.Generator]) -> float:
    """-sigmoid(actor(state)) plus Gaussian noise, clamped to [-1, 0]."""
    raw = -float(actor(np.asarray(state, dtype=float))[0])
    if noise_std > 0:
        raw += noise_std * float(rng.standard_normal())
    return min(0.0, max(-1.0, raw))


def _critic_input(states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    return np.column_stack([states, actions])


def critic_update(
    critic: Mlp, target_actor: Mlp, target_critic: Mlp, batch: Batch, hp: AgentHyperparams
) -> float:
    """One SGD step on mean (y - Q(s, a))^2; returns the loss before the step."""
    if len(batch) == 0:
        raise ParameterError("batch must not be empty")
    next_actions = -target_actor(batch.next_states)[:, 0]
    q_next = target_critic(_critic_input(batch.next_states, next_actions))[:, 0]
    y = batch.rewards + hp.gamma * (1.0 - batch.terminals) * q_next

    q, cache = critic.forward(_critic_input(batch.states, batch.actions))
    err = q[:, 0] - y
    loss = float(np.mean(err**2))
    grads, _ = critic.backward(cache, (2.0 / len(batch)) * err[:, None])
    critic.sgd_step(grads, hp.critic_lr)
    return loss


def actor_update(actor: Mlp, critic: Mlp, states: np.ndarray, hp: AgentHyperparams) -> float:
    """One ascent step on mean Q(s, pi(s)); returns mean Q before the step."""
    states = np.atleast_2d(states)
    if len(states) == 0:
        raise ParameterError("batch must not be empty")
    out, actor_cache = actor.forward(states)
    q, critic_cache = critic.forward(_critic_input(states, -out[:, 0]))
    _, dq_dx = critic.backward(critic_cache, np.full_like(q, 1.0 / len(states)))
    # action = -out
    grads, _ = actor.backward(actor_cache, -dq_dx[:, STATE_DIM:])
    actor.sgd_step(grads, hp.actor_lr, ascent=True)
    return float(np.mean(q))


def train(
    env: Environment,
    hp: AgentHyperparams,
    seed: int,
    log_every: int = 100,
    on_episode: Optional[Callable[[int, dict], None]] = None,
) -> tuple[AgentParams, pd.DataFrame]:
    """Run ``hp.episodes`` episodes; episode i replays path i of the environment's source."""
    agent = init_agent(hp, seed)
    _, noise_rng = _streams(seed)
    buffer = agent.buffer
    rows = []

    for episode in range(hp.episodes):
        noise = hp.noise_std(episode)
        state = env.reset(episode)
        total_reward = 0.0
        losses, q_values = [], []
        while not env.finished:
            s = state.as_array()
            action = act(agent.actor, s, noise, noise_rng)
            state, reward = env.step(action)
            total_reward += reward
            buffer.add(Transition(s, action, reward, state.as_array(), env.finished))

            if len(buffer) >= max(hp.warmup, hp.batch_size):
                batch = buffer.sample(hp.batch_size)
                losses.append(critic_update(agent.critic, agent.target_actor, agent.target_critic, batch, hp))
                q_values.append(actor_update(agent.actor, agent.critic, batch.states, hp))
                soft_update(agent.target_critic, agent.critic, hp.tau)
                soft_update(agent.target_actor, agent.actor, hp.tau)

        row = {
            "episode": episode,
            "total_reward": total_reward,
            "critic_loss": float(np.mean(losses)) if losses else math.nan,
            "actor_q": float(np.mean(q_values)) if q_values else math.nan,
            "noise_std": noise,
        }
        if not (is_finite(agent.actor) and is_finite(agent.critic)):
            raise ParameterError(f"network parameters became non-finite in episode {episode}")
        rows.append(row)
        if on_episode is not None:
            on_episode(episode, row)
        if log_every and (episode + 1) % log_every == 0:
            recent = pd.DataFrame(rows[-log_every:])
            logger.info(
                f"[Train] Episode {episode + 1}/{hp.episodes}: "
                f"reward {recent['total_reward'].mean():.4f}, noise {noise:.3f}"
            )

    logger.info(f"[Train] ✓ Finished {hp.episodes} episodes ({buffer.inserted} transitions)")
    return agent, pd.DataFrame(rows)
