from .agent import (DqnAgent, Hyper, select_action, sync_target, td_gradient,
                    train_episode)
from .nets import ArchSpec, NetParams, forward, init_params
from .optim import RmsPropState, rmsprop_step
from .replay import ReplayMemory, Transition
from .reward import reward_fair, reward_throughput
from .spaces import CentralizedActionSpace, PerNetworkActionSpace

__all__ = [
    "ArchSpec", "NetParams", "forward", "init_params",
    "RmsPropState", "rmsprop_step", "ReplayMemory", "Transition",
    "reward_fair", "reward_throughput",
    "CentralizedActionSpace", "PerNetworkActionSpace",
    "DqnAgent", "Hyper", "select_action", "sync_target", "td_gradient",
    "train_episode",
]
