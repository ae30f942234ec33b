"""On-policy learners: vanilla policy gradient and PPO.

Both keep a softmax policy network and a separate value network, estimate
advantages with GAE, and regress values onto rewards-to-go.
"""
from __future__ import annotations

import json
import os

import numpy as np

from ..neural import Adam, DenseNetwork, load_checkpoint, log_softmax, save_checkpoint
from .common import AgentConfig, NotReady, TrajectoryBuffer


def sample_categorical(probs, rngs):
    """One draw per row of ``probs``, each row with its own generator."""
    cdf = np.cumsum(probs, axis=1)
    u = np.array([rng.random() for rng in rngs]) * cdf[:, -1]
    a = (cdf < u[:, None]).sum(axis=1)
    return np.minimum(a, probs.shape[1] - 1)


class PolicyGradientAgent:
    on_policy = True

    def __init__(self, obs_dim, n_actions, config: AgentConfig, rng):
        self.config = config
        self.obs_dim, self.n_actions = obs_dim, n_actions
        hidden = list(config.hidden)
        self.policy = DenseNetwork.xavier([obs_dim, *hidden, n_actions], rng,
                                          "softmax", config.activation)
        self.value = DenseNetwork.xavier([obs_dim, *hidden, 1], rng, "linear",
                                         config.activation)
        self.policy_opt = Adam.for_network(self.policy, config.policy_lr)
        self.value_opt = Adam.for_network(self.value, config.value_lr)
        self.buffer = TrajectoryBuffer()
        self.episodes = 0
        self.update_count = 0

    # -------------------------------------------------------------- acting

    def policy_probs(self, obs, mode="explore"):
        # the learned policy is stochastic in both modes
        return self.policy(obs)

    def act(self, obs, mode="explore", rng=None):
        p = self.policy(obs)
        return int(sample_categorical(p, [rng])[0])

    def policy_step(self, obs, rngs):
        """Sample one action per row; returns ``(actions, logps, values)``."""
        logits = self.policy.logits(obs)
        logp_all = log_softmax(logits)
        actions = sample_categorical(np.exp(logp_all), rngs)
        rows = np.arange(actions.size)
        values = self.value(obs)[:, 0]
        return actions, logp_all[rows, actions], values

    def store_episode(self, obs, actions, rewards, values, logps):
        c = self.config
        self.buffer.add_episode(obs, actions, rewards, values, logps, c.gamma, c.lam)
        self.episodes += 1

    # ------------------------------------------------------------ learning

    def _logp(self, obs, actions):
        out, cache = self.policy.forward_cache(obs)
        logp_all = log_softmax(cache["pre_head"])
        return logp_all[np.arange(actions.size), actions], out, cache

    def _policy_step(self, obs, actions, weights, out, cache):
        """Ascend ``mean(weights * log pi(a|s))`` by one optimizer step."""
        onehot = np.zeros_like(out)
        onehot[np.arange(actions.size), actions] = 1.0
        g_logits = -(weights / actions.size)[:, None] * (onehot - out)
        grads = self.policy.backward(obs, g_logits, cache, upstream_is_logits=True)
        self.policy_opt.step(self.policy.params, grads)

    def _fit_value(self, obs, returns):
        loss = 0.0
        for _ in range(self.config.value_steps):
            v, cache = self.value.forward_cache(obs)
            err = v[:, 0] - returns
            loss = float(np.mean(err ** 2))
            grads = self.value.backward(obs, (2.0 * err / err.size)[:, None], cache)
            self.value_opt.step(self.value.params, grads)
        return loss

    def update(self):
        raise NotImplementedError

    def save(self, directory):
        os.makedirs(directory, exist_ok=True)
        save_checkpoint(self.policy, os.path.join(directory, "policy.ckpt"),
                        self.policy_opt, {"episodes": self.episodes})
        save_checkpoint(self.value, os.path.join(directory, "value.ckpt"),
                        self.value_opt, {"episodes": self.episodes})
        with open(os.path.join(directory, "agent.json"), "w") as fh:
            json.dump({"config": self.config.to_dict(), "obs_dim": self.obs_dim,
                       "n_actions": self.n_actions, "episodes": self.episodes,
                       "updates": self.update_count}, fh, sort_keys=True, indent=1)

    @classmethod
    def load(cls, directory, rng):
        with open(os.path.join(directory, "agent.json")) as fh:
            meta = json.load(fh)
        agent = cls(meta["obs_dim"], meta["n_actions"],
                    AgentConfig.from_dict(meta["config"]), rng)
        agent.policy, agent.policy_opt, _ = load_checkpoint(
            os.path.join(directory, "policy.ckpt"), with_state=True)
        agent.value, agent.value_opt, _ = load_checkpoint(
            os.path.join(directory, "value.ckpt"), with_state=True)
        agent.episodes, agent.update_count = meta["episodes"], meta["updates"]
        return agent


class VPGAgent(PolicyGradientAgent):

    def update(self):
        """One policy-gradient step, then value regression; clears the buffer."""
        obs, actions, logp_old, returns, adv = self.buffer.arrays()
        logp, out, cache = self._logp(obs, actions)
        self._policy_step(obs, actions, adv, out, cache)
        logp_new = self._logp(obs, actions)[0]
        value_loss = self._fit_value(obs, returns)
        n_episodes = self.buffer.episodes
        self.buffer.clear()
        self.update_count += 1
        return {"policy_loss": float(-np.mean(logp * adv)),
                "value_loss": value_loss,
                "kl": float(np.mean(logp_old - logp_new)),
                "policy_steps": 1, "value_steps": self.config.value_steps,
                "episodes": n_episodes}


def clipped_surrogate(ratio, adv, clip):
    return np.minimum(ratio * adv, np.clip(ratio, 1 - clip, 1 + clip) * adv)


def surrogate_weights(ratio, adv, clip):
    """d surrogate / d log pi: ``ratio * adv`` where the unclipped branch is live."""
    live = np.where(adv >= 0, ratio <= 1 + clip, ratio >= 1 - clip)
    return np.where(live, ratio * adv, 0.0)


class PPOAgent(PolicyGradientAgent):

    def update(self):
        """Clipped-surrogate steps with KL early stopping, then value regression."""
        c = self.config
        obs, actions, logp_old, returns, adv = self.buffer.arrays()
        steps, kl, first_ratio_err = 0, 0.0, None
        surrogate = 0.0
        for _ in range(c.policy_steps):
            logp, out, cache = self._logp(obs, actions)
            ratio = np.exp(logp - logp_old)
            if first_ratio_err is None:
                first_ratio_err = float(np.max(np.abs(ratio - 1.0)))
            surrogate = float(np.mean(clipped_surrogate(ratio, adv, c.clip_ratio)))
            self._policy_step(obs, actions,
                              surrogate_weights(ratio, adv, c.clip_ratio), out, cache)
            steps += 1
            kl = float(np.mean(logp_old - self._logp(obs, actions)[0]))
            if kl > c.target_kl:
                break
        value_loss = self._fit_value(obs, returns)
        n_episodes = self.buffer.episodes
        self.buffer.clear()
        self.update_count += 1
        return {"policy_loss": -surrogate, "value_loss": value_loss, "kl": kl,
                "policy_steps": steps, "value_steps": c.value_steps,
                "first_ratio_error": first_ratio_err, "episodes": n_episodes}
