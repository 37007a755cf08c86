"""Tabular Q-learning baseline over coarse-binned success counts."""

from __future__ import annotations

import numpy as np


def q_table_update(q: np.ndarray, s, a: int, r: float, s_next, eta: float,
                   gamma: float) -> np.ndarray:
    """One-step Q-learning update; only the (s, a) entry changes."""
    best_next = float(np.max(q[s_next]))
    q[s][a] = q[s][a] + eta * (r + gamma * best_next - q[s][a])
    return q


class QTableAgent:
    """Epsilon-greedy tabular learner; the state is the pair of per-network
    counts clipped into a small number of bins."""

    def __init__(self, n_actions: int, bins: int, eta: float, gamma: float,
                 rng: np.random.Generator, eps_start: float = 1.0,
                 eps_end: float = 0.05, eps_frac: float = 0.5,
                 total_steps: int = 60_000):
        self.q = np.zeros((bins, bins, n_actions))
        self.bins = bins
        self.n_actions = n_actions
        self.eta = eta
        self.gamma = gamma
        self.rng = rng
        self.eps_start = eps_start
        self.eps_end = eps_end
        self.eps_frac = eps_frac
        self.total_steps = total_steps
        self.step_count = 0

    def state_of(self, counters) -> tuple:
        return (min(counters.n_w, self.bins - 1), min(counters.n_n, self.bins - 1))

    def epsilon(self) -> float:
        horizon = max(1, int(self.eps_frac * self.total_steps))
        frac = min(1.0, self.step_count / horizon)
        return self.eps_start + (self.eps_end - self.eps_start) * frac

    def act(self, state: tuple, eps: float | None = None) -> int:
        if eps is None:
            eps = self.epsilon()
        if eps > 0.0 and self.rng.uniform() < eps:
            return int(self.rng.integers(self.n_actions))
        return int(np.argmax(self.q[state]))

    def learn(self, state, action, reward, next_state) -> None:
        self.step_count += 1
        q_table_update(self.q, state, action, reward, next_state,
                       self.eta, self.gamma)
