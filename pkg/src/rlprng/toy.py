"""Tiny environments used to sanity-check the learners.

They follow the same interface as :class:`rlprng.mdp.NavigationEnv`:
``reset() -> obs`` and ``step(action) -> (obs, reward, done)``.
"""
import numpy as np

from .agents import AgentConfig


class TwoArmedBandit:
    """One-step episodes; arm ``best`` pays 1, the other pays 0."""

    n_actions = 2
    obs_dim = 1

    def __init__(self, best=0):
        self.best = best

    def reset(self):
        return np.ones(1)

    def step(self, action):
        return np.ones(1), float(action == self.best), True

    def optimal_action(self, obs):
        return self.best


class ChainMDP:
    """States 0..n-1 on a line; action 1 moves right, 0 moves left.

    Reaching the last state pays 1 and ends the episode; otherwise the
    episode ends after ``horizon`` steps with nothing.
    """

    n_actions = 2

    def __init__(self, n_states=4, horizon=10):
        self.n_states, self.horizon = n_states, horizon
        self.obs_dim = n_states

    def _obs(self):
        o = np.zeros(self.n_states)
        o[self.pos] = 1.0
        return o

    def reset(self):
        self.pos, self.t = 0, 0
        return self._obs()

    def step(self, action):
        self.t += 1
        self.pos = min(self.pos + 1, self.n_states - 1) if action == 1 else max(self.pos - 1, 0)
        goal = self.pos == self.n_states - 1
        return self._obs(), float(goal), goal or self.t >= self.horizon

    def optimal_action(self, obs):
        return 1


def optimal_action_rate(agent, env, rng, draws=200):
    """Share of sampled decisions that are optimal along an optimal rollout.

    Policy-gradient agents are sampled from their stochastic policy;
    value-based agents act greedily (their deployed policy).
    """
    mode = "explore" if agent.on_policy else "exploit"
    obs, done, hits, total = env.reset(), False, 0, 0
    while not done:
        best = env.optimal_action(obs)
        hits += sum(agent.act(obs, mode, rng) == best for _ in range(draws))
        total += draws
        obs, _, done = env.step(best)
    return hits / total


def toy_agent_config(algorithm):
    """Small-network settings that solve both toy problems quickly."""
    if algorithm == "dqn":
        return AgentConfig(algorithm="dqn", hidden=(32,), gamma=0.9,
                           learning_rate=1e-3, batch_size=32,
                           target_copy_interval=100, tau_decay=1e-3,
                           tau_min=0.05, replay_capacity=10_000)
    return AgentConfig(algorithm=algorithm, hidden=(32,), gamma=0.9,
                       policy_lr=1e-2, value_lr=1e-2, value_steps=20,
                       policy_steps=20, updates_per_volley=10)
