"""Trained generators: loading, sampling periods and assessment."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .. import sequence
from ..agents import load_agent
from ..mdp import CachedScorer, EnvConfig, Formulation, NavigationEnv
from ..neural import IntegrityError
from ..nist import run_battery


class BundleError(IntegrityError):
    """A bundle is missing, corrupt or inconsistent with its checkpoint."""


class EmptyReport(ValueError):
    pass


@dataclass
class GeneratorBundle:
    """A trained policy plus the environment it navigates."""

    agent: object
    environment: EnvConfig
    sampling_mode: str = "explore"
    provenance: dict = field(default_factory=dict)
    baseline: dict | None = None

    def __post_init__(self):
        n_actions = NavigationEnv(self.environment).n_actions
        if (self.agent.obs_dim, self.agent.n_actions) != (self.environment.length, n_actions):
            raise BundleError(
                f"checkpoint expects obs_dim={self.agent.obs_dim}, "
                f"n_actions={self.agent.n_actions}; environment gives "
                f"{self.environment.length}, {n_actions}")
        if self.sampling_mode not in ("explore", "exploit"):
            raise BundleError(f"unknown sampling mode {self.sampling_mode!r}")


def load_bundle(directory, rng=None):
    """Load ``bundle.json`` and its checkpoint from a training output directory."""
    path = os.path.join(directory, "bundle.json")
    try:
        with open(path) as fh:
            meta = json.load(fh)
        env = EnvConfig.from_dict(meta["environment"])
        agent = load_agent(os.path.join(directory, meta["checkpoint"]),
                           rng if rng is not None else np.random.default_rng(0))
    except BundleError:
        raise
    except IntegrityError as exc:
        raise BundleError(f"{directory}: {exc}") from exc
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise BundleError(f"{directory}: unreadable bundle ({exc})") from exc
    return GeneratorBundle(agent, env, meta.get("sampling_mode", "explore"),
                           meta.get("provenance", {}), meta.get("baseline"))


def rollout(bundle, env, rng):
    """One episode from the seed state; returns the terminal bit image."""
    obs, done = env.reset(), False
    while not done:
        obs, _, done = env.step(bundle.agent.act(obs, bundle.sampling_mode, rng))
    return np.array(env.final_bits(), copy=True)


@dataclass
class Generation:
    periods: list
    scores: list
    environment: EnvConfig

    @property
    def bits(self):
        return sequence.concat(self.periods)

    def decimal_rows(self):
        """Per-period signed values; empty when the period length is not a multiple of the width."""
        m = self.environment.width
        if self.environment.formulation is not Formulation.DECIMAL and \
                self.environment.bit_length % m:
            return []
        return [sequence.to_decimal(p, m) for p in self.periods]

    def distinct_periods(self):
        return len({p.tobytes() for p in self.periods})

    def write(self, path):
        """Write the stream to ``path``, plus ``.csv`` and ``.scores.json`` siblings."""
        stem = os.path.splitext(path)[0]
        sequence.write_sequences(path, [self.bits])
        rows = self.decimal_rows()
        if rows:
            sequence.write_decimal_csv(stem + ".csv", rows)
        report = {"periods": len(self.periods),
                  "period_bits": self.environment.bit_length,
                  "distinct_periods": self.distinct_periods(),
                  "scores": self.scores,
                  "stream": run_battery(self.bits, self.environment.battery).to_dict()}
        with open(stem + ".scores.json", "w") as fh:
            json.dump(report, fh, indent=1)
        return [path] + ([stem + ".csv"] if rows else []) + [stem + ".scores.json"]


def generate(bundle: GeneratorBundle, periods, rng):
    """Sample ``periods`` episodes and keep each terminal state as one period."""
    if periods < 1:
        raise ValueError("periods must be >= 1")
    scorer = CachedScorer(bundle.environment.battery)
    env = NavigationEnv(bundle.environment, scorer)
    out = [rollout(bundle, env, rng) for _ in range(periods)]
    return Generation(out, [float(scorer(p)) for p in out], bundle.environment)


def evaluate(bundle: GeneratorBundle, episodes, rng):
    """Summary of final-state battery scores over ``episodes`` sampled rollouts."""
    if episodes < 1:
        raise EmptyReport("evaluation needs at least one episode")
    gen = generate(bundle, episodes, rng)
    s = np.asarray(gen.scores)
    report = {"episodes": int(s.size), "mean": float(s.mean()),
              "std": float(s.std()), "min": float(s.min()), "max": float(s.max()),
              "distinct_periods": gen.distinct_periods(),
              "sampling_mode": bundle.sampling_mode}
    if bundle.baseline:
        report["baseline_mean"] = bundle.baseline["mean"]
        report["margin"] = report["mean"] - bundle.baseline["mean"]
    return report
