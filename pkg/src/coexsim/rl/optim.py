"""RMSProp with a running mean-square accumulator.

v <- rho * v + (1 - rho) * g^2;  theta <- theta - lr * g / (sqrt(v) + delta)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class RmsPropState:
    v: np.ndarray
    rho: float = 0.99
    delta: float = 1e-8

    @staticmethod
    def for_theta(theta: np.ndarray, rho: float = 0.99, delta: float = 1e-8) -> "RmsPropState":
        return RmsPropState(np.zeros_like(theta), rho, delta)


def rmsprop_step(theta: np.ndarray, grad: np.ndarray, lr: float,
                 state: RmsPropState) -> np.ndarray:
    """One optimizer step, updating ``theta`` in place and returning it."""
    if not np.all(np.isfinite(grad)):
        raise ValueError("non-finite gradient")
    state.v *= state.rho
    state.v += (1.0 - state.rho) * grad * grad
    theta -= lr * grad / (np.sqrt(state.v) + state.delta)
    return theta
