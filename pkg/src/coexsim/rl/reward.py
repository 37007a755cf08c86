"""Reward functions over per-interval success counts, in Mbit."""

from __future__ import annotations


def reward_throughput(n_w: int, n_n: int, file_mbit: float = 4.0) -> float:
    """System reward: data delivered this interval by both networks."""
    return (n_w + n_n) * file_mbit


def reward_fair(n_w: int, n_n: int, t_wifi_mbit: float, file_mbit: float = 4.0) -> float:
    """Fairness-gated reward: zero whenever the WiFi share of the interval
    falls below the floor ``t_wifi_mbit`` (the full reward at equality)."""
    if n_w * file_mbit >= t_wifi_mbit:
        return (n_w + n_n) * file_mbit
    return 0.0
