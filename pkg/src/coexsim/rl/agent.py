"""DDQN agent: epsilon-greedy actor, replay learner, periodic target sync.

The bootstrap target follows double Q-learning by default (the online net
selects the next action, the target net evaluates it); the
``paper-literal`` mode instead takes the plain max over the target net.
The loss is half the mean squared TD error over the minibatch, and its
gradient is verified against central finite differences in the tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .nets import ArchSpec, NetParams, backward, forward, forward_cached, init_params
from .optim import RmsPropState, rmsprop_step
from .replay import ReplayMemory, Transition


@dataclass
class Hyper:
    gamma: float = 0.9
    lr: float = 1e-4
    rms_rho: float = 0.99
    rms_eps: float = 1e-8
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_frac: float = 0.5
    replay: int = 100_000
    batch: int = 32
    target_sync: int = 500
    target_mode: str = "double"   # "double" | "paper-literal"
    total_steps: int = 60_000     # anneal horizon reference


def select_action(obs: np.ndarray, params: NetParams, eps: float,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy: uniform over all actions with probability eps,
    otherwise the greedy argmax (ties to the lowest index)."""
    n = params.arch.n_actions
    if eps > 0.0 and rng.uniform() < eps:
        return int(rng.integers(n))
    return int(np.argmax(forward(obs, params)))


def td_gradient(minibatch, params: NetParams, target: NetParams, gamma: float,
                mode: str = "double"):
    """Gradient of L = 0.5 * mean((Q(s,a) - y)^2) over the minibatch.

    y = r + gamma * Q(s', a*; target) with a* from the online net in double
    mode, or a* = argmax over the target net in paper-literal mode.
    """
    obs, actions, rewards, next_obs = minibatch
    b = obs.shape[0]
    if b == 0:
        raise ValueError("empty minibatch")
    q_next_t = forward(next_obs, target)
    if mode == "double":
        a_star = np.argmax(forward(next_obs, params), axis=1)
    elif mode == "paper-literal":
        a_star = np.argmax(q_next_t, axis=1)
    else:
        raise ValueError(f"unknown target mode {mode!r}")
    y = rewards + gamma * q_next_t[np.arange(b), a_star]

    q, cache = forward_cached(obs, params)
    td = q[np.arange(b), actions] - y
    loss = 0.5 * float(np.mean(td * td))
    dq = np.zeros_like(q)
    dq[np.arange(b), actions] = td / b
    return backward(cache, dq, params), loss


def sync_target(params: NetParams, target: NetParams, step: int, k: int) -> NetParams:
    """Copy the online weights into the target every k-th step."""
    if k > 0 and step % k == 0:
        target.theta[:] = params.theta
    return target


class DqnAgent:
    def __init__(self, arch: ArchSpec, hyper: Hyper, rng: np.random.Generator):
        self.arch = arch
        self.hyper = hyper
        self.rng = rng
        self.params = init_params(arch, rng)
        self.target = self.params.copy()
        self.opt = RmsPropState.for_theta(self.params.theta, hyper.rms_rho,
                                          hyper.rms_eps)
        self.memory = ReplayMemory(hyper.replay,
                                   (arch.history, arch.input_size), rng)
        self.step_count = 0
        self.last_loss = 0.0

    def epsilon(self) -> float:
        h = self.hyper
        horizon = max(1, int(h.eps_frac * h.total_steps))
        frac = min(1.0, self.step_count / horizon)
        return h.eps_start + (h.eps_end - h.eps_start) * frac

    def act(self, obs: np.ndarray, eps: float | None = None) -> int:
        if eps is None:
            eps = self.epsilon()
        return select_action(obs, self.params, eps, self.rng)

    def observe(self, obs, action, reward, next_obs) -> None:
        self.memory.push(Transition(np.asarray(obs), int(action),
                                    float(reward), np.asarray(next_obs)))

    def learn(self) -> float | None:
        """One gradient step off replay (skipped until a batch exists)."""
        self.step_count += 1
        loss = None
        if len(self.memory) >= self.hyper.batch:
            grad, loss = td_gradient(self.memory.sample(self.hyper.batch),
                                     self.params, self.target,
                                     self.hyper.gamma, self.hyper.target_mode)
            if not np.isfinite(loss):
                raise FloatingPointError("training diverged: non-finite loss")
            rmsprop_step(self.params.theta, grad, self.hyper.lr, self.opt)
            self.last_loss = loss
        sync_target(self.params, self.target, self.step_count,
                    self.hyper.target_sync)
        return loss

    # -- persistence ---------------------------------------------------------
    def save(self, path: str, extra: dict | None = None) -> None:
        header = {"version": 1, "arch": self.arch.to_json(),
                  "step_count": self.step_count, "extra": extra or {}}
        np.savez(path, header=json.dumps(header), theta=self.params.theta,
                 target=self.target.theta, opt_v=self.opt.v,
                 rng_state=json.dumps(self.rng.bit_generator.state))

    @staticmethod
    def load(path: str, hyper: Hyper):
        data = np.load(path, allow_pickle=False)
        header = json.loads(str(data["header"]))
        arch = ArchSpec.from_json(header["arch"])
        rng = np.random.default_rng(0)
        rng.bit_generator.state = json.loads(str(data["rng_state"]))
        agent = DqnAgent(arch, hyper, rng)
        agent.params.theta[:] = data["theta"]
        agent.target.theta[:] = data["target"]
        agent.opt.v[:] = data["opt_v"]
        agent.step_count = int(header["step_count"])
        return agent, header["extra"]


@dataclass
class EpisodeLog:
    actions: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    counts: list = field(default_factory=list)
    epsilons: list = field(default_factory=list)

    @property
    def mean_reward(self) -> float:
        return float(np.mean(self.rewards)) if self.rewards else 0.0


def train_episode(env, agent: DqnAgent, n_steps: int, episode_seed: int,
                  train: bool = True) -> EpisodeLog:
    """One episode of the interaction loop: act, step, store, learn.

    With ``train=False`` the policy is frozen greedy (no exploration, no
    updates); the log still records actions and rewards.
    """
    log = EpisodeLog()
    obs = env.reset(episode_seed)
    for _ in range(n_steps):
        eps = agent.epsilon() if train else 0.0
        action = agent.act(obs, eps)
        next_obs, reward, counters = env.step(action)
        if train:
            agent.observe(obs, action, reward, next_obs)
            agent.learn()
        obs = next_obs
        log.actions.append(action)
        log.rewards.append(reward)
        log.counts.append(counters)
        log.epsilons.append(eps)
    return log
