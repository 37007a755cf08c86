"""Two-agent federated training: local DDQN rounds + parameter averaging.

Each round, both agents train locally inside the shared coexistence
simulation (each seeing only its own network's counts), report their
parameter vectors, the server averages them elementwise, and the result is
pushed back into both agents' online and target networks.  Optimizer
accumulators stay local.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rl.agent import DqnAgent, EpisodeLog


def fedavg(theta_n: np.ndarray, theta_w: np.ndarray) -> np.ndarray:
    """Elementwise mean of two shape-identical parameter vectors."""
    theta_n = np.asarray(theta_n)
    theta_w = np.asarray(theta_w)
    if theta_n.shape != theta_w.shape:
        raise ValueError(f"shape mismatch: {theta_n.shape} vs {theta_w.shape}")
    if not (np.all(np.isfinite(theta_n)) and np.all(np.isfinite(theta_w))):
        raise ValueError("non-finite parameters cannot be aggregated")
    return 0.5 * (theta_n + theta_w)


@dataclass
class RoundLog:
    round_idx: int
    log_w: EpisodeLog
    log_n: EpisodeLog
    delta_w: float = 0.0   # |theta_w after local training - pushed global|
    delta_n: float = 0.0


@dataclass
class FederatedPair:
    agent_w: DqnAgent
    agent_n: DqnAgent
    rounds: list = field(default_factory=list)


def run_federated_round(env, agent_n: DqnAgent, agent_w: DqnAgent,
                        episode_seeds, round_idx: int = 0,
                        train: bool = True) -> RoundLog:
    """One federation round: local training for the given episodes, then
    aggregation and push-back (online and target networks alike)."""
    log_w = EpisodeLog()
    log_n = EpisodeLog()
    for episode_seed in episode_seeds:
        obs_w, obs_n = env.reset(episode_seed)
        for _ in range(env.steps_per_episode):
            eps_w = agent_w.epsilon() if train else 0.0
            eps_n = agent_n.epsilon() if train else 0.0
            a_w = agent_w.act(obs_w, eps_w)
            a_n = agent_n.act(obs_n, eps_n)
            nobs_w, nobs_n, r_w, r_n, c = env.step(a_w, a_n)
            if train:
                agent_w.observe(obs_w, a_w, r_w, nobs_w)
                agent_n.observe(obs_n, a_n, r_n, nobs_n)
                agent_w.learn()
                agent_n.learn()
            obs_w, obs_n = nobs_w, nobs_n
            log_w.actions.append(a_w)
            log_w.rewards.append(r_w)
            log_w.counts.append(c)
            log_w.epsilons.append(eps_w)
            log_n.actions.append(a_n)
            log_n.rewards.append(r_n)
            log_n.counts.append(c)
            log_n.epsilons.append(eps_n)

    log = RoundLog(round_idx, log_w, log_n)
    if train:
        theta = fedavg(agent_n.params.theta, agent_w.params.theta)
        log.delta_w = float(np.linalg.norm(agent_w.params.theta - theta))
        log.delta_n = float(np.linalg.norm(agent_n.params.theta - theta))
        for agent in (agent_w, agent_n):
            agent.params.theta[:] = theta
            agent.target.theta[:] = theta
    return log
