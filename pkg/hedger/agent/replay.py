"""
Replay Buffer
Fixed-capacity ring of transitions with seeded uniform sampling
"""
import math
from dataclasses import dataclass

import numpy as np

from hedger.errors import ParameterError


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: float
    reward: float
    next_state: np.ndarray
    terminal: bool

    def __post_init__(self):
        if not -1.0 <= self.action <= 0.0:
            raise ParameterError(f"action must lie in [-1, 0], got {self.action}")
        if not math.isfinite(self.reward):
            raise ParameterError(f"reward must be finite, got {self.reward}")


@dataclass(frozen=True)
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)


class ReplayBuffer:
    def __init__(self, capacity: int, state_dim: int = 3, seed: int = 0):
        if capacity < 1:
            raise ParameterError(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.seed = int(seed)
        self.inserted = 0
        self._rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed)))
        self._states = np.zeros((self.capacity, state_dim))
        self._actions = np.zeros(self.capacity)
        self._rewards = np.zeros(self.capacity)
        self._next_states = np.zeros((self.capacity, state_dim))
        self._terminals = np.zeros(self.capacity, dtype=bool)

    def __len__(self) -> int:
        return min(self.inserted, self.capacity)

    def add(self, transition: Transition) -> None:
        slot = self.inserted % self.capacity
        self._states[slot] = transition.state
        self._actions[slot] = transition.action
        self._rewards[slot] = transition.reward
        self._next_states[slot] = transition.next_state
        self._terminals[slot] = transition.terminal
        self.inserted += 1

    def sample_indices(self, batch_size: int) -> np.ndarray:
        if len(self) == 0:
            raise ParameterError("cannot sample from an empty buffer")
        return self._rng.integers(0, len(self), size=batch_size)

    def sample(self, batch_size: int) -> Batch:
        """Uniform with replacement over the stored items."""
        idx = self.sample_indices(batch_size)
        return Batch(
            self._states[idx],
            self._actions[idx],
            self._rewards[idx],
            self._next_states[idx],
            self._terminals[idx],
        )
