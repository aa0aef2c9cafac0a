"""
Agent Module
From-scratch DDPG hedging agent
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .ddpg import (
    AgentHyperparams,
    AgentParams,
    act,
    actor_update,
    critic_update,
    init_agent,
    train,
)
from .mlp import Mlp, MlpGrads, is_finite, soft_update
from .replay import Batch, ReplayBuffer, Transition

__all__ = [
    'load_checkpoint',
    'save_checkpoint',
    'AgentHyperparams',
    'AgentParams',
    'act',
    'actor_update',
    'critic_update',
    'init_agent',
    'train',
    'Mlp',
    'MlpGrads',
    'is_finite',
    'soft_update',
    'Batch',
    'ReplayBuffer',
    'Transition',
]
