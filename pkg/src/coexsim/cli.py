"""Experiment runner.

Dispatches the four run modes (fixed-threshold baseline, tabular Q-learning,
centralized DDQN, federated DDQN), manages seeds, and writes the CSV
artifacts: ``topology.csv``, ``training.csv`` (learning modes),
``test_timeseries.csv``, ``summary.csv``, plus ``baseline_summary.csv`` and
``gain_report.csv`` for learning modes and ``rounds.csv`` for the federated
mode.

Unknown ``--key value`` pairs override config-file entries, which override
preset values.  Example::

    coexsim --mode centralized-ddqn --preset desk --seed 0 --out out/run0
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import metrics
from .config import ConfigurationError, RunConfig, build_config
from .federated import run_federated_round
from .metrics import RunSeries, upt, upt_record, write_csv, write_summary
from .rl.agent import DqnAgent, Hyper, train_episode
from .rl.env import CentralizedEnv, FederatedEnv, make_reward_fn
from .rl.nets import ArchSpec
from .rl.qtable import QTableAgent
from .scenario import topology_rows

TEST_EPISODE_SEED = 999_983       # frozen-policy evaluation episode
MEASURE_EPISODE_SEED = 999_979    # fairness-floor measurement episode


def _hyper(cfg: RunConfig, total_steps: int) -> Hyper:
    return Hyper(gamma=cfg.gamma, lr=cfg.lr, rms_rho=cfg.rms_rho,
                 rms_eps=cfg.rms_eps, eps_start=cfg.eps_start,
                 eps_end=cfg.eps_end, eps_frac=cfg.eps_frac,
                 replay=cfg.replay, batch=cfg.batch,
                 target_sync=cfg.target_sync, target_mode=cfg.target_mode,
                 total_steps=total_steps)


def _arch(cfg: RunConfig, centralized: bool) -> ArchSpec:
    features = 3 if centralized else 2
    space_n = len(cfg.ed_grid_dbm) ** 2 if centralized else len(cfg.ed_grid_dbm)
    return ArchSpec(kind=cfg.net, input_size=features, history=cfg.history,
                    n_actions=space_n, hidden=cfg.gru_hidden,
                    mlp_hidden=cfg.mlp_hidden_sizes)


def _test_cfg(cfg: RunConfig) -> RunConfig:
    return dataclasses.replace(cfg, episode_s=cfg.test_s).validate()


def _steps(cfg: RunConfig) -> int:
    return int(round(cfg.episode_s * 1e3 / cfg.tti_ms))


def _run_baseline_test(cfg: RunConfig, seed: int, out_dir: str,
                       prefix: str = "",
                       episode_seed: int = TEST_EPISODE_SEED) -> dict:
    """Fixed-threshold test episode at the exact Table-II defaults (the
    baseline thresholds need not lie on the agent's action grid)."""
    from .simcore import Simulator

    tcfg = _test_cfg(cfg)
    sim = Simulator(tcfg, seed)
    n_steps = int(round(tcfg.episode_s * 1e3 / tcfg.tti_ms))
    sim.reset(episode_seed, tcfg.episode_s + tcfg.tti_ms / 1e3)
    series = RunSeries(tti_s=tcfg.tti_ms / 1e3, file_mbit=tcfg.file_mbit)
    sim.step_interval(tcfg.ed_wifi_dbm, tcfg.ed_nru_dbm)  # warm-up interval
    for _ in range(n_steps):
        c = sim.step_interval(tcfg.ed_wifi_dbm, tcfg.ed_nru_dbm)
        series.append(c, tcfg.ed_wifi_dbm, tcfg.ed_nru_dbm)
    t_end_s = sim.t_now / 1e6
    wifi_upt = upt(upt_record(j, t_end_s) for j in sim.wifi_jobs(t_end_s))
    nru_upt = upt(upt_record(j, t_end_s) for j in sim.nru_jobs(t_end_s))
    totals = series.totals()
    metrics.write_csv(os.path.join(out_dir, prefix + "test_timeseries.csv"),
                      metrics.TIMESERIES_HEADER, series.rows())
    write_summary(os.path.join(out_dir, prefix + "summary.csv"),
                  totals, wifi_upt, nru_upt)
    totals["wifi_upt_mbps"] = wifi_upt
    totals["nru_upt_mbps"] = nru_upt
    return totals


def measure_baseline_wifi_mbit_per_interval(cfg: RunConfig, seed: int) -> float:
    """Fairness floor: the fixed-threshold WiFi cell throughput expressed
    as Mbit per decision interval."""
    from .simcore import Simulator

    tcfg = _test_cfg(cfg)
    sim = Simulator(tcfg, seed)
    n_steps = int(round(tcfg.episode_s * 1e3 / tcfg.tti_ms))
    sim.reset(MEASURE_EPISODE_SEED, tcfg.episode_s + tcfg.tti_ms / 1e3)
    sim.step_interval(tcfg.ed_wifi_dbm, tcfg.ed_nru_dbm)
    done = 0
    for _ in range(n_steps):
        done += sim.step_interval(tcfg.ed_wifi_dbm, tcfg.ed_nru_dbm).n_w
    wifi_mbps = done * tcfg.file_mbit / tcfg.test_s
    return wifi_mbps * (tcfg.tti_ms / 1e3)


def compare(baseline_summary: dict, learned_summary: dict) -> list:
    """Percentage gains per metric (unclamped; empty when base is 0/absent)."""
    rows = []
    for key in metrics.SUMMARY_HEADER:
        base = baseline_summary.get(key)
        new = learned_summary.get(key)
        if base is None or new is None or base == 0:
            gain = ""
        else:
            gain = f"{100.0 * (new - base) / base:+.2f}"
        rows.append((key, "" if base is None else f"{base:.6f}",
                     "" if new is None else f"{new:.6f}", gain))
    return rows


def _write_training_csv(out_dir: str, rows) -> None:
    write_csv(os.path.join(out_dir, "training.csv"), metrics.TRAINING_HEADER, rows)


def _episode_row(ep: int, log, cfg: RunConfig) -> tuple:
    sys_mbit = sum(c.n_w + c.n_n for c in log.counts) * cfg.file_mbit
    tput = sys_mbit / cfg.episode_s
    eps = float(np.mean(log.epsilons)) if log.epsilons else 0.0
    return (ep, f"{log.mean_reward:.6f}", f"{tput:.6f}", f"{eps:.6f}")


def run(cfg: RunConfig, out_dir: str) -> dict:
    """Execute the configured experiment; returns the learned/test summary."""
    os.makedirs(out_dir, exist_ok=True)
    base_env_cfg = cfg

    # fairness floor resolution (before any training)
    t_wifi = None
    if cfg.fairness:
        if cfg.fairness_t_wifi_mbit >= 0:
            t_wifi = cfg.fairness_t_wifi_mbit
        else:
            t_wifi = measure_baseline_wifi_mbit_per_interval(cfg, cfg.seed)

    env_seed = cfg.seed
    topo_probe = CentralizedEnv(_test_cfg(cfg), env_seed)  # fixed topology per seed
    write_csv(os.path.join(out_dir, "topology.csv"), metrics.TOPOLOGY_HEADER,
              topology_rows(topo_probe.sim.topology))

    if cfg.mode == "baseline-fixed":
        return _run_baseline_test(cfg, env_seed, out_dir)

    total_steps = cfg.episodes * _steps(cfg)
    rows = []

    if cfg.mode == "tabular":
        env = CentralizedEnv(cfg, env_seed, make_reward_fn(cfg, t_wifi))
        agent = QTableAgent(env.space.n, cfg.qtable_bins, cfg.qtable_lr,
                            cfg.gamma,
                            np.random.default_rng(
                                np.random.SeedSequence([cfg.seed, 7])),
                            cfg.eps_start, cfg.eps_end, cfg.eps_frac, total_steps)
        for ep in range(cfg.episodes):
            log = _train_tabular_episode(env, agent, ep)
            rows.append(_episode_row(ep, log, cfg))
        _write_training_csv(out_dir, rows)
        policy = _tabular_policy(agent)
    elif cfg.mode == "centralized-ddqn":
        env = CentralizedEnv(cfg, env_seed, make_reward_fn(cfg, t_wifi))
        agent = DqnAgent(_arch(cfg, centralized=True), _hyper(cfg, total_steps),
                         np.random.default_rng(
                             np.random.SeedSequence([cfg.seed, 7])))
        for ep in range(cfg.episodes):
            log = train_episode(env, agent, env.steps_per_episode, ep)
            rows.append(_episode_row(ep, log, cfg))
        _write_training_csv(out_dir, rows)
        agent.save(os.path.join(out_dir, "checkpoint.npz"),
                   extra={"running_max": env.builder.running_max.tolist()})
        policy = _greedy_policy(agent)
    elif cfg.mode == "federated-ddqn":
        env = FederatedEnv(cfg, env_seed, make_reward_fn(cfg, t_wifi))
        rng_w = np.random.default_rng(np.random.SeedSequence([cfg.seed, 7, 0]))
        rng_n = np.random.default_rng(np.random.SeedSequence([cfg.seed, 7, 1]))
        agent_w = DqnAgent(_arch(cfg, centralized=False), _hyper(cfg, total_steps), rng_w)
        agent_n = DqnAgent(_arch(cfg, centralized=False), _hyper(cfg, total_steps), rng_n)
        ckpt_dir = os.path.join(out_dir, "checkpoints")
        os.makedirs(ckpt_dir, exist_ok=True)
        round_rows = []
        period = max(1, cfg.fed_period_episodes)
        n_rounds = (cfg.episodes + period - 1) // period
        ep = 0
        for rnd in range(n_rounds):
            seeds = list(range(ep, min(ep + period, cfg.episodes)))
            log = run_federated_round(env, agent_n, agent_w, seeds, rnd)
            for k, s in enumerate(seeds):
                off = k * env.steps_per_episode
                sub_w = _slice_log(log.log_w, off, env.steps_per_episode)
                rows.append(_episode_row(s, sub_w, cfg))
            round_rows.append((rnd, "wifi", f"{log.log_w.mean_reward:.6f}",
                               f"{log.delta_w:.6e}"))
            round_rows.append((rnd, "nru", f"{log.log_n.mean_reward:.6f}",
                               f"{log.delta_n:.6e}"))
            agent_w.save(os.path.join(ckpt_dir, f"wifi_round{rnd:04d}.npz"))
            agent_n.save(os.path.join(ckpt_dir, f"nru_round{rnd:04d}.npz"))
            ep += len(seeds)
        _write_training_csv(out_dir, rows)
        write_csv(os.path.join(out_dir, "rounds.csv"), metrics.ROUNDS_HEADER,
                  round_rows)
        agent_w.save(os.path.join(out_dir, "checkpoint_wifi.npz"),
                     extra={"running_max": env.builder_w.running_max.tolist()})
        agent_n.save(os.path.join(out_dir, "checkpoint_nru.npz"),
                     extra={"running_max": env.builder_n.running_max.tolist()})
        policy = _federated_policy(cfg, agent_w, agent_n, env)
    else:
        raise ConfigurationError(f"unhandled mode {cfg.mode!r}")

    learned = _run_frozen_test(base_env_cfg, env_seed, cfg, policy, env, out_dir)
    _run_baseline_test(cfg, env_seed, out_dir, prefix="baseline_")
    write_csv(os.path.join(out_dir, "gain_report.csv"),
              ["metric", "baseline", "learned", "gain_pct"],
              compare(metrics.read_summary(
                  os.path.join(out_dir, "baseline_summary.csv")),
                  metrics.read_summary(os.path.join(out_dir, "summary.csv"))))
    return learned


def _slice_log(log, off: int, count: int):
    from .rl.agent import EpisodeLog

    sub = EpisodeLog()
    sub.actions = log.actions[off:off + count]
    sub.rewards = log.rewards[off:off + count]
    sub.counts = log.counts[off:off + count]
    sub.epsilons = log.epsilons[off:off + count]
    return sub


def _train_tabular_episode(env: CentralizedEnv, agent: QTableAgent, ep: int):
    from .rl.agent import EpisodeLog

    log = EpisodeLog()
    env.reset(ep)
    # tabular state is the binned counter pair, not the window
    state = agent.state_of(env.last_counters)
    for _ in range(env.steps_per_episode):
        eps = agent.epsilon()
        action = agent.act(state, eps)
        _, reward, c = env.step(action)
        next_state = agent.state_of(c)
        agent.learn(state, action, reward, next_state)
        state = next_state
        log.actions.append(action)
        log.rewards.append(reward)
        log.counts.append(c)
        log.epsilons.append(eps)
    return log


def _greedy_policy(agent: DqnAgent):
    return lambda obs, env: agent.act(obs, eps=0.0)


def _tabular_policy(agent: QTableAgent):
    def policy(obs, env):
        return agent.act(agent.state_of(env.last_counters), eps=0.0)

    return policy


def _federated_policy(cfg: RunConfig, agent_w: DqnAgent, agent_n: DqnAgent,
                      trained_env: FederatedEnv):
    return (agent_w, agent_n, trained_env)


def _run_frozen_test(cfg: RunConfig, seed: int, full_cfg: RunConfig, policy,
                     trained_env, out_dir: str) -> dict:
    """Frozen-policy test episode for whichever agent kind was trained."""
    tcfg = _test_cfg(cfg)
    series = RunSeries(tti_s=tcfg.tti_ms / 1e3, file_mbit=tcfg.file_mbit)

    if isinstance(policy, tuple):  # federated pair
        agent_w, agent_n, tr_env = policy
        env = FederatedEnv(tcfg, seed)
        env.builder_w.load_state_dict(tr_env.builder_w.state_dict())
        env.builder_n.load_state_dict(tr_env.builder_n.state_dict())
        obs_w, obs_n = env.reset(TEST_EPISODE_SEED)
        for _ in range(env.steps_per_episode):
            a_w = agent_w.act(obs_w, eps=0.0)
            a_n = agent_n.act(obs_n, eps=0.0)
            obs_w, obs_n, _, _, c = env.step(a_w, a_n)
            series.append(c, env.space.value(a_w), env.space.value(a_n))
        sim = env.sim
    else:
        env = CentralizedEnv(tcfg, seed)
        if hasattr(trained_env, "builder"):
            env.builder.load_state_dict(trained_env.builder.state_dict())
        obs = env.reset(TEST_EPISODE_SEED)
        for _ in range(env.steps_per_episode):
            action = policy(obs, env)
            obs, _, c = env.step(action)
            ed_w, ed_n = env.space.pair(action)
            series.append(c, ed_w, ed_n)
        sim = env.sim

    t_end_s = sim.t_now / 1e6
    wifi_upt = upt(upt_record(j, t_end_s) for j in sim.wifi_jobs(t_end_s))
    nru_upt = upt(upt_record(j, t_end_s) for j in sim.nru_jobs(t_end_s))
    totals = series.totals()
    metrics.write_csv(os.path.join(out_dir, "test_timeseries.csv"),
                      metrics.TIMESERIES_HEADER, series.rows())
    write_summary(os.path.join(out_dir, "summary.csv"), totals, wifi_upt, nru_upt)
    totals["wifi_upt_mbps"] = wifi_upt
    totals["nru_upt_mbps"] = nru_upt
    return totals


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="coexsim",
        description="NR-U/WiFi coexistence experiments with learned ED thresholds")
    parser.add_argument("--mode", default=None,
                        help="baseline-fixed | tabular | centralized-ddqn | federated-ddqn")
    parser.add_argument("--preset", default="", help="desk | paper")
    parser.add_argument("--config", default="", help="flat key = value file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--episodes", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--ue-lbt", default=None, choices=["cat2", "cat4"])
    parser.add_argument("--fairness", action="store_true", default=None)
    parser.add_argument("--target-mode", default=None,
                        choices=["double", "paper-literal"])
    args, extra = parser.parse_known_args(argv)

    overrides = {}
    i = 0
    while i < len(extra):
        key = extra[i]
        if not key.startswith("--") or i + 1 >= len(extra):
            print(f"error: expected '--key value' pairs, got {extra[i:]}",
                  file=sys.stderr)
            return 2
        overrides[key[2:]] = extra[i + 1]
        i += 2
    for name in ("mode", "seed", "episodes"):
        if getattr(args, name) is not None:
            overrides[name] = str(getattr(args, name))
    if args.ue_lbt is not None:
        overrides["ue_lbt"] = args.ue_lbt
    if args.fairness:
        overrides["fairness"] = "true"
    if args.target_mode is not None:
        overrides["target_mode"] = args.target_mode
    if args.out is not None:
        overrides["out_dir"] = args.out

    try:
        cfg = build_config(args.preset, args.config, overrides)
        out_dir = cfg.out_dir
        if os.path.exists(out_dir) and not os.access(out_dir, os.W_OK):
            raise ConfigurationError(f"output directory not writable: {out_dir}")
        summary = run(cfg, out_dir)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    line = ", ".join(f"{k}={v if v is not None else 'n/a'}"
                     for k, v in summary.items())
    print(f"done: {line}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
