"""Volley-structured training and the reported metrics."""
from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, asdict

import numpy as np

from ..agents import make_agent
from ..mdp import CachedScorer, NavigationEnv
from ..nist import BatteryConfig, CALIBRATED_CONFIG
from ..neural import NumericError
from .config import TrainConfig

log = logging.getLogger(__name__)

METRIC_COLUMNS = ("volley", "episodes", "mean_total_reward",
                  "mean_scaled_last20", "mean_final_score")
EPISODE_COLUMNS = ("volley", "episode", "total_reward", "scaled_last20",
                   "final_score")


class TrainingError(RuntimeError):
    """Training aborted; ``dump`` names the diagnostic file when one was written."""

    def __init__(self, msg, dump=None):
        super().__init__(msg)
        self.dump = dump


def scaled_reward_last_k(rewards, k=20):
    """Mean reward over the final ``min(k, T)`` steps of an episode."""
    r = np.asarray(rewards, dtype=np.float64)
    if r.size == 0:
        raise ValueError("empty episode")
    return float(r[-k:].mean())


@dataclass
class BaselineResult:
    mean: float
    scores: np.ndarray
    bits: int

    @property
    def count(self):
        return self.scores.size

    def to_dict(self):
        return {"bits": self.bits, "count": self.count, "mean": self.mean,
                "std": float(self.scores.std()) if self.count else 0.0,
                "scores": self.scores.tolist()}


def evaluate_baseline(bits, count, rng, battery: BatteryConfig = CALIBRATED_CONFIG,
                      source=None):
    """Mean battery score of ``count`` sequences of ``bits`` fair bits.

    ``source(rng, bits)`` may replace the fair-bit generator.
    """
    scorer = CachedScorer(battery)
    draw = source or (lambda g, n: g.integers(0, 2, n, dtype=np.uint8))
    scores = np.array([scorer(draw(rng, bits)) for _ in range(count)])
    return BaselineResult(float(scores.mean()) if count else 0.0, scores, bits)


@dataclass
class EpisodeRecord:
    rewards: np.ndarray
    final_bits: np.ndarray | None = None
    final_score: float | None = None

    @property
    def total(self):
        return float(self.rewards.sum())


def _finish(env, rewards):
    bits = final = None
    if hasattr(env, "final_bits"):
        bits = np.array(env.final_bits(), copy=True)
        final = float(env.scorer(bits))
    return EpisodeRecord(np.asarray(rewards, dtype=np.float64), bits, final)


def collect_on_policy(agent, envs, rngs, pool=None):
    """Roll out one episode per env in lockstep under a frozen policy.

    Each episode samples from its own generator, so the result does not
    depend on whether ``pool`` steps the environments concurrently.
    Episodes are stored in the agent's buffer in env order.
    """
    n = len(envs)
    obs = [env.reset() for env in envs]
    traj = [{"obs": [], "actions": [], "rewards": [], "values": [], "logps": []}
            for _ in range(n)]
    active = list(range(n))
    mapper = pool.map if pool is not None else map
    while active:
        batch = np.stack([obs[i] for i in active])
        actions, logps, values = agent.policy_step(batch, [rngs[i] for i in active])
        results = list(mapper(lambda ia: envs[ia[0]].step(int(ia[1])),
                              zip(active, actions)))
        still = []
        for j, i in enumerate(active):
            o, r, done = results[j]
            tr = traj[i]
            tr["obs"].append(obs[i])
            tr["actions"].append(int(actions[j]))
            tr["logps"].append(logps[j])
            tr["values"].append(values[j])
            tr["rewards"].append(r)
            obs[i] = o
            if not done:
                still.append(i)
        active = still
    records = []
    for env, tr in zip(envs, traj):
        agent.store_episode(tr["obs"], tr["actions"], tr["rewards"],
                            tr["values"], tr["logps"])
        records.append(_finish(env, tr["rewards"]))
    return records


def run_dqn_episode(agent, env, rng):
    obs, done, rewards = env.reset(), False, []
    while not done:
        a = agent.act(obs, "explore", rng)
        nxt, r, done = env.step(a)
        agent.observe(obs, a, r, nxt, done)
        rewards.append(r)
        obs = nxt
    agent.end_episode()
    return _finish(env, rewards)


@dataclass
class VolleyMetrics:
    volley: int
    episodes: int
    mean_total_reward: float
    mean_scaled_last20: float
    mean_final_score: float
    seconds: float = 0.0

    def row(self):
        return [self.volley, self.episodes] + [repr(float(getattr(self, c)))
                                               for c in METRIC_COLUMNS[2:]]


def volley_metrics(volley, records, window=20, mode="episode", seconds=0.0):
    if mode == "episode":
        scaled = float(np.mean([scaled_reward_last_k(r.rewards, window) for r in records]))
    else:
        scaled = scaled_reward_last_k(np.concatenate([r.rewards for r in records]), window)
    finals = [r.final_score for r in records if r.final_score is not None]
    return VolleyMetrics(volley, len(records),
                         float(np.mean([r.total for r in records])), scaled,
                         float(np.mean(finals)) if finals else float("nan"), seconds)


def update_sizes(episodes, updates):
    """Episodes per on-policy update cycle, spread as evenly as possible."""
    sizes = [episodes // updates + (i < episodes % updates) for i in range(updates)]
    return [s for s in sizes if s > 0]


@dataclass
class TrainResult:
    metrics: list
    agent: object
    out_dir: str | None
    baseline: BaselineResult | None = None


class _Outputs:
    """Tracks files written so a disk failure can report partial results."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.written = []

    def path(self, *parts):
        p = os.path.join(self.out_dir, *parts)
        os.makedirs(os.path.dirname(p), exist_ok=True)
        if p not in self.written:
            self.written.append(p)
        return p

    def dir(self, *parts):
        p = os.path.join(self.out_dir, *parts)
        os.makedirs(p, exist_ok=True)
        if p not in self.written:
            self.written.append(p)
        return p

    def manifest(self):
        return [os.path.relpath(p, self.out_dir) for p in self.written]


def train(config: TrainConfig, out_dir=None, env_factory=None, progress=None):
    """Run a full experiment.

    With ``out_dir`` the run writes ``config.json``, ``metrics.csv``,
    ``episodes.csv``, ``timing.csv``, ``baseline.json``, checkpoints and a
    ``bundle.json`` describing the final generator.  ``env_factory`` swaps
    in other environments (it must return objects with the
    ``reset``/``step``/``n_actions``/``obs_dim`` interface).
    """
    tc, ac = config.training, config.agent
    scorer = CachedScorer(config.environment.battery)
    if env_factory is None:
        env_factory = lambda: NavigationEnv(config.environment, scorer)
    probe = env_factory()
    agent = make_agent(probe.obs_dim, probe.n_actions, ac,
                       np.random.default_rng(tc.agent_seed))
    outputs = _Outputs(out_dir) if out_dir else None
    baseline = None
    try:
        if outputs:
            os.makedirs(out_dir, exist_ok=True)
            with open(outputs.path("config.json"), "w") as fh:
                fh.write(config.to_json())
            for name, cols in (("metrics.csv", METRIC_COLUMNS),
                               ("episodes.csv", EPISODE_COLUMNS),
                               ("timing.csv", ("volley", "seconds"))):
                with open(outputs.path(name), "w", newline="") as fh:
                    csv.writer(fh, lineterminator="\n").writerow(cols)
        if isinstance(probe, NavigationEnv) and tc.baseline_count:
            baseline = evaluate_baseline(config.environment.bit_length,
                                         tc.baseline_count,
                                         np.random.default_rng(tc.baseline_seed),
                                         config.environment.battery)
            if outputs:
                with open(outputs.path("baseline.json"), "w") as fh:
                    json.dump(baseline.to_dict(), fh, sort_keys=True)
        metrics = _train_loop(config, agent, env_factory, outputs, progress)
        if outputs:
            _write_bundle(config, agent, outputs, metrics, baseline)
    except OSError as exc:
        manifest = outputs.manifest() if outputs else []
        raise OSError(f"writing results failed ({exc}); partial results: {manifest}") from exc
    return TrainResult(metrics, agent, out_dir, baseline)


def _train_loop(config, agent, env_factory, outputs, progress):
    tc = config.training
    metrics, best = [], -np.inf
    episode_index = 0
    pool_ctx = ThreadPoolExecutor(tc.workers) if tc.workers > 1 else nullcontext()
    with pool_ctx as pool:
        envs = []
        for volley in range(tc.volleys):
            start = time.perf_counter()
            records = []
            try:
                if agent.on_policy:
                    for size in update_sizes(tc.episodes_per_volley,
                                             config.agent.updates_per_volley):
                        while len(envs) < size:
                            envs.append(env_factory())
                        rngs = [np.random.default_rng([tc.env_seed, episode_index + i])
                                for i in range(size)]
                        records += collect_on_policy(agent, envs[:size], rngs, pool)
                        episode_index += size
                        stats = agent.update()
                        if not np.isfinite(stats["policy_loss"]) or not np.isfinite(stats["value_loss"]):
                            raise FloatingPointError(f"non-finite loss: {stats}")
                else:
                    env = envs[0] if envs else env_factory()
                    envs[:1] = [env]
                    for _ in range(tc.episodes_per_volley):
                        rng = np.random.default_rng([tc.env_seed, episode_index])
                        records.append(run_dqn_episode(agent, env, rng))
                        episode_index += 1
            except (FloatingPointError, NumericError) as exc:
                dump = None
                if outputs:
                    dump = outputs.path("failure.json")
                    with open(dump, "w") as fh:
                        json.dump({"volley": volley, "episode": episode_index,
                                   "error": str(exc)}, fh, sort_keys=True)
                    agent.save(outputs.dir("checkpoints", "failure"))
                raise TrainingError(f"training diverged in volley {volley}: {exc}", dump) from exc
            m = volley_metrics(volley, records, tc.metric_window,
                               tc.metric_window_mode, time.perf_counter() - start)
            metrics.append(m)
            log.info("volley %d: total %.4f last%d %.4f final %.4f", volley,
                     m.mean_total_reward, tc.metric_window, m.mean_scaled_last20,
                     m.mean_final_score)
            if progress:
                progress(m)
            if outputs:
                _write_volley(outputs, volley, records, m, tc.metric_window,
                              episode_index - len(records))
                if (volley + 1) % tc.checkpoint_every == 0:
                    agent.save(outputs.dir("checkpoints", f"volley_{volley:04d}"))
                score = m.mean_final_score
                if np.isfinite(score) and score > best:
                    best = score
                    agent.save(outputs.dir("checkpoints", "best"))
    return metrics


def _write_volley(outputs, volley, records, m, window, first_episode):
    with open(outputs.path("metrics.csv"), "a", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerow(m.row())
    with open(outputs.path("episodes.csv"), "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for i, r in enumerate(records):
            final = "" if r.final_score is None else repr(r.final_score)
            w.writerow([volley, first_episode + i, repr(r.total),
                        repr(scaled_reward_last_k(r.rewards, window)), final])
    with open(outputs.path("timing.csv"), "a", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerow([volley, f"{m.seconds:.3f}"])


def _write_bundle(config, agent, outputs, metrics, baseline):
    agent.save(outputs.dir("checkpoints", "final"))
    mode = config.training.sampling_mode
    if config.agent.algorithm != "dqn":
        mode = "explore"
    bundle = {
        "checkpoint": "checkpoints/final",
        "environment": config.environment.to_dict(),
        "sampling_mode": mode,
        "provenance": {"config_hash": config.digest(), "volley": len(metrics),
                       "algorithm": config.agent.algorithm},
        "baseline": None if baseline is None else
        {"mean": baseline.mean, "count": baseline.count, "bits": baseline.bits},
    }
    with open(outputs.path("bundle.json"), "w") as fh:
        json.dump(bundle, fh, sort_keys=True, indent=1)
