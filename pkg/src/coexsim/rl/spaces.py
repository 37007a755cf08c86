"""Action spaces over the ED-threshold grid.

The centralized agent picks a (WiFi, NR-U) pair from the grid's cartesian
product; each federated agent picks one value for its own network.  Index
layout for the centralized space is row-major: ``a = i_wifi * len(grid) +
i_nru``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CentralizedActionSpace:
    grid_dbm: tuple

    @property
    def n(self) -> int:
        return len(self.grid_dbm) ** 2

    def pair(self, action: int) -> tuple:
        m = len(self.grid_dbm)
        if not 0 <= action < m * m:
            raise IndexError(f"action {action} outside [0, {m * m})")
        return self.grid_dbm[action // m], self.grid_dbm[action % m]

    def index(self, ed_wifi_dbm: float, ed_nru_dbm: float) -> int:
        g = list(self.grid_dbm)
        return g.index(ed_wifi_dbm) * len(g) + g.index(ed_nru_dbm)


@dataclass(frozen=True)
class PerNetworkActionSpace:
    grid_dbm: tuple

    @property
    def n(self) -> int:
        return len(self.grid_dbm)

    def value(self, action: int) -> float:
        return self.grid_dbm[action]

    def index(self, ed_dbm: float) -> int:
        return list(self.grid_dbm).index(ed_dbm)


def observation_features(centralized: bool) -> int:
    """Window-row width: normalized counts plus the action taken that step."""
    return 3 if centralized else 2


class ObservationBuilder:
    """Maintains the agent's observation window.

    Each row holds the interval's success counts normalized by a running
    maximum (so entries stay in [0, 1]) plus the action index taken that
    interval, normalized by the action count.  The window is zero-padded
    until enough intervals have elapsed.
    """

    def __init__(self, history: int, channels: int, n_actions: int):
        self.history = history
        self.channels = channels
        self.n_actions = n_actions
        self.running_max = np.ones(channels)
        self._win = np.zeros((history, channels + 1))

    def reset(self) -> None:
        self._win[:] = 0.0

    def update(self, counts, action: int) -> None:
        counts = np.asarray(counts, dtype=np.float64)
        if counts.shape != (self.channels,):
            raise ValueError(f"expected {self.channels} counts, got {counts.shape}")
        np.maximum(self.running_max, counts, out=self.running_max)
        row = np.empty(self.channels + 1)
        row[:self.channels] = counts / self.running_max
        row[self.channels] = action / max(1, self.n_actions - 1)
        self._win[:-1] = self._win[1:]
        self._win[-1] = row

    def observation(self) -> np.ndarray:
        return self._win.copy()

    def state_dict(self) -> dict:
        return {"running_max": self.running_max.copy()}

    def load_state_dict(self, d: dict) -> None:
        self.running_max[:] = d["running_max"]
