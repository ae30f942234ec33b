"""Reinforcement-learning agents."""
from .common import (AgentConfig, NotReady, ReplayBuffer, TrajectoryBuffer,
                     boltzmann_probs, boltzmann_select, gae_advantages,
                     normalize, rewards_to_go, temperature)
from .dqn import DQNAgent, dqn_target, dqn_targets
from .policy_gradient import PPOAgent, PolicyGradientAgent, VPGAgent

AGENTS = {"dqn": DQNAgent, "vpg": VPGAgent, "ppo": PPOAgent}


def make_agent(obs_dim, n_actions, config, rng):
    return AGENTS[config.algorithm](obs_dim, n_actions, config, rng)


def load_agent(directory, rng):
    import json
    import os
    with open(os.path.join(directory, "agent.json")) as fh:
        algorithm = json.load(fh)["config"]["algorithm"]
    return AGENTS[algorithm].load(directory, rng)


__all__ = [
    "AGENTS", "AgentConfig", "DQNAgent", "NotReady", "PPOAgent",
    "PolicyGradientAgent", "ReplayBuffer", "TrajectoryBuffer", "VPGAgent",
    "boltzmann_probs", "boltzmann_select", "dqn_target", "dqn_targets",
    "gae_advantages", "load_agent", "make_agent", "normalize",
    "rewards_to_go", "temperature",
]
