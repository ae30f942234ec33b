"""Pieces shared by the learners: exploration, return estimators, buffers."""
from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np


class NotReady(Exception):
    """An update was requested before enough data was collected."""


def boltzmann_probs(q, tau):
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    z = np.asarray(q, dtype=np.float64) / tau
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite q-values")
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def boltzmann_select(q, tau, rng):
    """Sample an action from ``softmax(q / tau)``."""
    p = boltzmann_probs(q, tau)
    return int(rng.choice(p.size, p=p))


def rewards_to_go(rewards, gamma):
    r = np.asarray(rewards, dtype=np.float64)
    out = np.zeros_like(r)
    acc = 0.0
    for t in range(r.size - 1, -1, -1):
        acc = r[t] + gamma * acc
        out[t] = acc
    return out


def gae_advantages(rewards, values, gamma, lam):
    """Generalized advantage estimates (not normalized).

    ``values`` carries one bootstrap entry past the last reward; use 0 for
    a terminal state.
    """
    r = np.asarray(rewards, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (r.size + 1,):
        raise ValueError(f"values must have length {r.size + 1}, got {v.shape}")
    deltas = r + gamma * v[1:] - v[:-1]
    return rewards_to_go(deltas, gamma * lam)


def normalize(x, eps=1e-8):
    x = np.asarray(x, dtype=np.float64)
    return (x - x.mean()) / (x.std() + eps)


def temperature(episode, tau0, decay, tau_min=1e-3):
    """Linearly decayed Boltzmann temperature with a positive floor."""
    return max(tau_min, tau0 - decay * episode)


@dataclass
class AgentConfig:
    """Hyperparameters for every learner; each algorithm reads its subset.

    ``hidden`` lists the hidden layer widths of every network.
    """

    algorithm: str = "ppo"
    hidden: tuple = (64, 64)
    activation: str = "relu"
    gamma: float = 0.99
    lam: float = 0.95
    # DQN
    learning_rate: float = 1e-3
    batch_size: int = 32
    target_copy_interval: int = 1000
    tau0: float = 1.0
    tau_decay: float = 2e-6
    tau_min: float = 1e-3
    replay_capacity: int = 100_000
    per_alpha: float = 0.6
    per_beta0: float = 0.4
    per_beta_steps: int = 100_000
    priority_eps: float = 1e-6
    train_every: int = 1
    learning_starts: int = 0
    # policy gradient
    policy_lr: float = 3e-4
    value_lr: float = 1e-3
    clip_ratio: float = 0.2
    target_kl: float = 0.01
    updates_per_volley: int = 10
    value_steps: int = 80
    policy_steps: int = 80

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.algorithm not in ("dqn", "vpg", "ppo"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if not (0 <= self.gamma <= 1 and 0 <= self.lam <= 1):
            raise ValueError("gamma and lambda must lie in [0, 1]")
        if self.clip_ratio <= 0 or self.tau0 <= 0 or self.tau_min <= 0:
            raise ValueError("clip ratio and temperatures must be positive")
        for name in ("batch_size", "target_copy_interval", "replay_capacity",
                     "updates_per_volley", "value_steps", "policy_steps",
                     "train_every", "per_beta_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise KeyError(f"unknown agent keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["hidden"] = list(self.hidden)
        return d


class ReplayBuffer:
    """Proportional prioritized replay.

    Sampling probability is ``priority**alpha / sum(priority**alpha)``; new
    items enter at the current maximum priority.
    """

    def __init__(self, capacity, obs_dim, alpha=0.6, eps=1e-6):
        self.capacity, self.alpha, self.eps = capacity, alpha, eps
        self.obs = np.zeros((capacity, obs_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.dones = np.zeros(capacity, dtype=bool)
        self.priorities = np.zeros(capacity)
        self.max_priority = 1.0
        self.size = 0
        self._next = 0

    def __len__(self):
        return self.size

    def add(self, obs, action, reward, next_obs, done):
        i = self._next
        self.obs[i], self.next_obs[i] = obs, next_obs
        self.actions[i], self.rewards[i], self.dones[i] = action, reward, done
        self.priorities[i] = self.max_priority
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def probabilities(self):
        p = self.priorities[:self.size] ** self.alpha
        return p / p.sum()

    def sample(self, batch_size, beta, rng):
        """Return ``(indices, importance_weights)``; weights are max-normalized."""
        if self.size < batch_size:
            raise NotReady(f"replay holds {self.size} < {batch_size} transitions")
        p = self.probabilities()
        idx = rng.choice(self.size, size=batch_size, p=p)
        w = (self.size * p[idx]) ** (-beta)
        return idx, w / w.max()

    def update_priorities(self, idx, td_errors):
        pr = np.abs(td_errors) + self.eps
        self.priorities[idx] = pr
        self.max_priority = max(self.max_priority, float(pr.max()))


@dataclass
class TrajectoryBuffer:
    """On-policy storage of complete episodes."""

    obs: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    logps: list = field(default_factory=list)
    returns: list = field(default_factory=list)
    advantages: list = field(default_factory=list)
    episodes: int = 0

    def add_episode(self, obs, actions, rewards, values, logps, gamma, lam,
                    bootstrap=0.0):
        rewards = np.asarray(rewards, dtype=np.float64)
        vals = np.append(np.asarray(values, dtype=np.float64), bootstrap)
        self.obs.append(np.asarray(obs, dtype=np.float64))
        self.actions.append(np.asarray(actions, dtype=np.int64))
        self.logps.append(np.asarray(logps, dtype=np.float64))
        self.returns.append(rewards_to_go(rewards, gamma))
        adv = gae_advantages(rewards, vals, gamma, lam)
        if not np.all(np.isfinite(adv)):
            raise FloatingPointError("non-finite advantages")
        self.advantages.append(adv)
        self.episodes += 1

    def __len__(self):
        return sum(a.size for a in self.actions)

    def arrays(self):
        """Concatenated buffer with advantages normalized per buffer."""
        if not self.actions:
            raise NotReady("trajectory buffer is empty")
        return (np.concatenate(self.obs), np.concatenate(self.actions),
                np.concatenate(self.logps), np.concatenate(self.returns),
                normalize(np.concatenate(self.advantages)))

    def clear(self):
        for name in ("obs", "actions", "logps", "returns", "advantages"):
            getattr(self, name).clear()
        self.episodes = 0
