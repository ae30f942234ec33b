"""Dueling double DQN with prioritized replay and Boltzmann exploration."""
from __future__ import annotations

import json
import os

import numpy as np

from ..neural import Adam, DenseNetwork, load_checkpoint, save_checkpoint
from .common import (AgentConfig, NotReady, ReplayBuffer, boltzmann_probs,
                     boltzmann_select, temperature)


def dqn_targets(rewards, next_obs, dones, online, target, gamma):
    """Double-estimator targets: the online net picks, the target net rates."""
    rewards = np.asarray(rewards, dtype=np.float64)
    if gamma == 0:
        return rewards.copy()
    choice = np.argmax(online(next_obs), axis=1)
    bootstrap = target(next_obs)[np.arange(choice.size), choice]
    return rewards + gamma * np.where(dones, 0.0, bootstrap)


def dqn_target(transition, online, target, gamma):
    """Target for one ``(obs, action, reward, next_obs, done)`` tuple."""
    _, _, reward, next_obs, done = transition
    return float(dqn_targets([reward], np.atleast_2d(next_obs), [done],
                             online, target, gamma)[0])


class DQNAgent:
    on_policy = False

    def __init__(self, obs_dim, n_actions, config: AgentConfig, rng):
        self.config = config
        self.obs_dim, self.n_actions = obs_dim, n_actions
        dims = [obs_dim, *config.hidden, n_actions]
        self.online = DenseNetwork.xavier(dims, rng, "dueling", config.activation)
        self.target = self.online.copy()
        self.optimizer = Adam.for_network(self.online, config.learning_rate)
        self.replay = ReplayBuffer(config.replay_capacity, obs_dim,
                                   config.per_alpha, config.priority_eps)
        self.rng = rng
        self.episodes = 0
        self.steps = 0
        self.updates = 0

    @property
    def temperature(self):
        c = self.config
        return temperature(self.episodes, c.tau0, c.tau_decay, c.tau_min)

    def q_values(self, obs):
        return self.online(obs)[0]

    def act(self, obs, mode="explore", rng=None):
        q = self.q_values(obs)
        if mode == "exploit":
            return int(np.argmax(q))
        return boltzmann_select(q, self.temperature, rng or self.rng)

    def beta(self):
        c = self.config
        frac = min(1.0, self.updates / c.per_beta_steps)
        return c.per_beta0 + (1.0 - c.per_beta0) * frac

    def observe(self, obs, action, reward, next_obs, done):
        """Store a transition and train on the configured cadence."""
        self.replay.add(obs, action, reward, next_obs, done)
        self.steps += 1
        loss = None
        c = self.config
        if self.steps >= c.learning_starts and self.steps % c.train_every == 0:
            try:
                loss = self.update()
            except NotReady:
                loss = None
        if self.steps % c.target_copy_interval == 0:
            self.target.load_params(self.online)
        return loss

    def end_episode(self):
        self.episodes += 1

    def update(self):
        """One prioritized regression step; returns the weighted TD loss."""
        c, buf = self.config, self.replay
        idx, w = buf.sample(c.batch_size, self.beta(), self.rng)
        y = dqn_targets(buf.rewards[idx], buf.next_obs[idx], buf.dones[idx],
                        self.online, self.target, c.gamma)
        q, cache = self.online.forward_cache(buf.obs[idx])
        rows = np.arange(idx.size)
        td = q[rows, buf.actions[idx]] - y
        upstream = np.zeros_like(q)
        upstream[rows, buf.actions[idx]] = 2.0 * w * td / idx.size
        grads = self.online.backward(buf.obs[idx], upstream, cache)
        self.optimizer.step(self.online.params, grads)
        buf.update_priorities(idx, td)
        self.updates += 1
        loss = float(np.mean(w * td * td))
        if not np.isfinite(loss):
            raise FloatingPointError("non-finite DQN loss")
        return loss

    def policy_probs(self, obs, mode="explore"):
        q = self.online(obs)
        if mode == "exploit":
            p = np.zeros_like(q)
            p[np.arange(q.shape[0]), np.argmax(q, axis=1)] = 1.0
            return p
        return boltzmann_probs(q, self.temperature)

    def save(self, directory):
        os.makedirs(directory, exist_ok=True)
        save_checkpoint(self.online, os.path.join(directory, "online.ckpt"),
                        self.optimizer, {"episodes": self.episodes})
        save_checkpoint(self.target, os.path.join(directory, "target.ckpt"))
        with open(os.path.join(directory, "agent.json"), "w") as fh:
            json.dump({"config": self.config.to_dict(), "obs_dim": self.obs_dim,
                       "n_actions": self.n_actions, "episodes": self.episodes,
                       "steps": self.steps, "updates": self.updates}, fh,
                      sort_keys=True, indent=1)

    @classmethod
    def load(cls, directory, rng):
        with open(os.path.join(directory, "agent.json")) as fh:
            meta = json.load(fh)
        agent = cls(meta["obs_dim"], meta["n_actions"],
                    AgentConfig.from_dict(meta["config"]), rng)
        agent.online, agent.optimizer, _ = load_checkpoint(
            os.path.join(directory, "online.ckpt"), with_state=True)
        agent.target = load_checkpoint(os.path.join(directory, "target.ckpt"))
        agent.episodes, agent.steps = meta["episodes"], meta["steps"]
        agent.updates = meta["updates"]
        return agent
