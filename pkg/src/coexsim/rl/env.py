"""Environment wrappers binding the simulator to the learning loop.

``CentralizedEnv`` exposes the (reset, step) contract: reset seeds a fresh
episode and runs one warm-up interval under a random action so the first
observation is a zero-padded window with one real row; step applies the
chosen threshold pair for one decision interval and returns (observation,
reward, counters).

``FederatedEnv`` drives the same simulator for two per-network agents.
Each agent's observation window carries only its own network's counts
(information hygiene); the reward is the shared system reward by default,
or each network's own contribution in ``local`` mode.
"""

from __future__ import annotations

import numpy as np

from ..config import RunConfig
from ..metrics import TtiCounters
from ..simcore import Simulator
from .reward import reward_fair, reward_throughput
from .spaces import CentralizedActionSpace, ObservationBuilder, PerNetworkActionSpace


def make_reward_fn(cfg: RunConfig, t_wifi_mbit: float | None = None):
    if cfg.fairness:
        if t_wifi_mbit is None or t_wifi_mbit < 0:
            raise ValueError("fairness mode needs a resolved T_wifi floor")
        return lambda c: reward_fair(c.n_w, c.n_n, t_wifi_mbit, cfg.file_mbit)
    return lambda c: reward_throughput(c.n_w, c.n_n, cfg.file_mbit)


class CentralizedEnv:
    def __init__(self, cfg: RunConfig, seed: int, reward_fn=None,
                 sim: Simulator | None = None):
        self.cfg = cfg
        self.sim = sim if sim is not None else Simulator(cfg, seed)
        self.space = CentralizedActionSpace(cfg.ed_grid_dbm)
        self.reward_fn = reward_fn if reward_fn is not None else make_reward_fn(cfg)
        self.builder = ObservationBuilder(cfg.history, 2, self.space.n)
        self._seed = seed
        self.horizon_s = cfg.episode_s
        self.steps_per_episode = int(round(cfg.episode_s * 1e3 / cfg.tti_ms))
        self.last_counters: TtiCounters | None = None

    def reset(self, episode_seed: int, warm_action: int | None = None) -> np.ndarray:
        # one warm-up interval under a random action initializes the window
        self.sim.reset(episode_seed, self.horizon_s + self.cfg.tti_ms / 1e3)
        self.builder.reset()
        if warm_action is None:
            warm = np.random.default_rng(
                np.random.SeedSequence([self._seed, 4, episode_seed]))
            warm_action = int(warm.integers(self.space.n))
        c = self._apply(warm_action)
        self.builder.update((c.n_w, c.n_n), warm_action)
        return self.builder.observation()

    def _apply(self, action: int) -> TtiCounters:
        ed_w, ed_n = self.space.pair(action)
        self.last_counters = self.sim.step_interval(ed_w, ed_n)
        return self.last_counters

    def step(self, action: int):
        c = self._apply(action)
        reward = self.reward_fn(c)
        self.builder.update((c.n_w, c.n_n), action)
        return self.builder.observation(), reward, c


class FederatedEnv:
    """Two per-network views over one shared coexistence simulation."""

    def __init__(self, cfg: RunConfig, seed: int, reward_fn=None,
                 sim: Simulator | None = None):
        self.cfg = cfg
        self.sim = sim if sim is not None else Simulator(cfg, seed)
        self.space = PerNetworkActionSpace(cfg.ed_grid_dbm)
        self.reward_fn = reward_fn if reward_fn is not None else make_reward_fn(cfg)
        self.builder_w = ObservationBuilder(cfg.history, 1, self.space.n)
        self.builder_n = ObservationBuilder(cfg.history, 1, self.space.n)
        self._seed = seed
        self.horizon_s = cfg.episode_s
        self.steps_per_episode = int(round(cfg.episode_s * 1e3 / cfg.tti_ms))

    def reset(self, episode_seed: int, warm_actions: tuple | None = None):
        self.sim.reset(episode_seed, self.horizon_s + self.cfg.tti_ms / 1e3)
        self.builder_w.reset()
        self.builder_n.reset()
        if warm_actions is None:
            warm = np.random.default_rng(
                np.random.SeedSequence([self._seed, 4, episode_seed]))
            warm_actions = (int(warm.integers(self.space.n)),
                            int(warm.integers(self.space.n)))
        a_w, a_n = warm_actions
        c = self.sim.step_interval(self.space.value(a_w), self.space.value(a_n))
        self.builder_w.update((c.n_w,), a_w)
        self.builder_n.update((c.n_n,), a_n)
        return self.builder_w.observation(), self.builder_n.observation()

    def step(self, a_w: int, a_n: int):
        c = self.sim.step_interval(self.space.value(a_w), self.space.value(a_n))
        if self.cfg.fed_reward == "local":
            r_w = self.reward_fn(TtiCounters(n_w=c.n_w, n_n=0))
            r_n = self.reward_fn(TtiCounters(n_w=0, n_n=c.n_n))
        else:
            shared = self.reward_fn(c)
            r_w = r_n = shared
        self.builder_w.update((c.n_w,), a_w)
        self.builder_n.update((c.n_n,), a_n)
        return (self.builder_w.observation(), self.builder_n.observation(),
                r_w, r_n, c)
