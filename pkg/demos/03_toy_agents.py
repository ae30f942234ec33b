"""Train each agent on two small problems with known optimal actions.

Run with ``python demos/03_toy_agents.py``; takes about ten seconds.
"""
import numpy as np

from rlprng.harness import TrainConfig, TrainingConfig, train
from rlprng.toy import ChainMDP, TwoArmedBandit, optimal_action_rate, toy_agent_config

for algorithm in ("dqn", "vpg", "ppo"):
    for env_cls in (TwoArmedBandit, ChainMDP):
        cfg = TrainConfig(agent=toy_agent_config(algorithm),
                          training=TrainingConfig(volleys=10, episodes_per_volley=100,
                                                  baseline_count=0, evaluation_episodes=0))
        agent = train(cfg, env_factory=env_cls).agent
        rate = optimal_action_rate(agent, env_cls(), np.random.default_rng(0))
        print(f"{algorithm:4s} {env_cls.__name__:14s} optimal action rate {rate:.3f}")
