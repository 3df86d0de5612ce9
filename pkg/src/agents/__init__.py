from src.agents.common import AgentConfig, loss_report
from src.agents.replay import ReplayBatch, ReplayBuffer, Transition
from src.agents.sac import SacAgent
from src.agents.td3 import Td3Agent

AGENTS = {"sac": SacAgent, "td3": Td3Agent}


def make_agent(encoder, action_dim, net_config, config, generator=None):
    return AGENTS[config.kind](encoder, action_dim, net_config, config, generator=generator)


__all__ = [
    "AGENTS",
    "AgentConfig",
    "ReplayBatch",
    "ReplayBuffer",
    "SacAgent",
    "Td3Agent",
    "Transition",
    "loss_report",
    "make_agent",
]
