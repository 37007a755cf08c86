"""Uniform experience replay over a fixed-capacity ring buffer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Transition:
    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray


class ReplayMemory:
    """Ring buffer: overwrites the oldest entry once full; minibatches are
    sampled uniformly without replacement within a batch."""

    def __init__(self, capacity: int, obs_shape: tuple, rng: np.random.Generator):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self._rng = rng
        self._obs = np.zeros((capacity,) + tuple(obs_shape))
        self._next_obs = np.zeros_like(self._obs)
        self._action = np.zeros(capacity, dtype=np.int64)
        self._reward = np.zeros(capacity)
        self._write = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, t: Transition) -> None:
        i = self._write
        self._obs[i] = t.obs
        self._next_obs[i] = t.next_obs
        self._action[i] = t.action
        self._reward[i] = t.reward
        self._write = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch: int):
        """(obs, actions, rewards, next_obs) arrays for a uniform minibatch."""
        if batch > self._size:
            raise ValueError("not enough stored transitions to sample")
        idx = self._rng.choice(self._size, size=batch, replace=False)
        return (self._obs[idx], self._action[idx], self._reward[idx],
                self._next_obs[idx])

    def holds(self) -> list:
        """Stored transitions, oldest first (test introspection)."""
        if self._size < self.capacity:
            order = range(self._size)
        else:
            order = [(self._write + k) % self.capacity for k in range(self.capacity)]
        return [Transition(self._obs[i].copy(), int(self._action[i]),
                           float(self._reward[i]), self._next_obs[i].copy())
                for i in order]
