"""Lattice-navigation environments.

Two formulations share one episode structure of exactly ``horizon`` steps
starting from a state filled with the seed value:

* decimal (DF): ``N`` signed ``m``-bit integers; action ``2n`` adds +1 at
  position ``n``, ``2n + 1`` adds -1, and ``2N`` passes.  Moves past the
  range boundary leave the value unchanged.
* binary (BF): ``B`` bits; action ``2n`` sets bit ``n`` to 1 and ``2n + 1``
  sets it to 0.

The reward is the battery score of the binary image of the state reached
by the action, either at every step or only on the final step.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import sequence
from .nist import BatteryConfig, DEFAULT_CONFIG, battery_score


class Formulation(str, enum.Enum):
    DECIMAL = "decimal"
    BINARY = "binary"


class RewardMode(str, enum.Enum):
    EVERY_STEP = "every_step"
    TERMINAL = "terminal"


class ProtocolError(RuntimeError):
    """Stepping a finished episode."""


class PolicyContractError(ValueError):
    """A policy returned something that is not a probability vector."""


@dataclass(frozen=True)
class EnvConfig:
    """Environment description.

    ``length`` is the number of decimal values (DF) or of bits (BF).
    """

    formulation: Formulation = Formulation.BINARY
    reward_mode: RewardMode = RewardMode.TERMINAL
    length: int = 80
    width: int = 8
    horizon: int = 100
    seed_value: int = 0
    battery: BatteryConfig = field(default=DEFAULT_CONFIG)

    def __post_init__(self):
        object.__setattr__(self, "formulation", Formulation(self.formulation))
        object.__setattr__(self, "reward_mode", RewardMode(self.reward_mode))
        if self.length < 1 or self.horizon < 1 or self.width < 1:
            raise ValueError("length, horizon and width must all be >= 1")
        if self.formulation is Formulation.DECIMAL:
            lo, hi = sequence.value_range(self.width)
            if not lo <= self.seed_value <= hi:
                raise ValueError(f"seed value {self.seed_value} outside [{lo}, {hi}]")
        elif self.seed_value not in (0, 1):
            raise ValueError("binary seed value must be 0 or 1")

    @property
    def bit_length(self):
        if self.formulation is Formulation.DECIMAL:
            return self.length * self.width
        return self.length

    def to_dict(self):
        return {"formulation": self.formulation.value,
                "reward_mode": self.reward_mode.value,
                "length": self.length, "width": self.width,
                "horizon": self.horizon, "seed_value": self.seed_value,
                "battery": self.battery.to_dict()}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "battery" in d and not isinstance(d["battery"], BatteryConfig):
            d["battery"] = BatteryConfig.from_dict(d["battery"])
        return cls(**d)


@dataclass(frozen=True)
class EnvState:
    values: np.ndarray
    t: int = 0

    def __eq__(self, other):
        return (isinstance(other, EnvState) and self.t == other.t
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True)
class Transition:
    state: EnvState
    action: int
    reward: float
    next_state: EnvState
    done: bool


def action_set_size(config: EnvConfig) -> int:
    if config.formulation is Formulation.DECIMAL:
        return 2 * config.length + 1
    return 2 * config.length


def reset(config: EnvConfig) -> EnvState:
    dtype = np.int64 if config.formulation is Formulation.DECIMAL else np.uint8
    return EnvState(np.full(config.length, config.seed_value, dtype=dtype), 0)


def binary_image(state: EnvState, config: EnvConfig) -> np.ndarray:
    if config.formulation is Formulation.DECIMAL:
        return sequence.to_bits(state.values, config.width)
    return state.values


def encode_observation(state: EnvState, config: EnvConfig) -> np.ndarray:
    if config.formulation is Formulation.DECIMAL:
        return state.values / float(1 << (config.width - 1))
    return state.values.astype(np.float64)


def apply_action(state: EnvState, action: int, config: EnvConfig) -> EnvState:
    """Deterministic state update (no reward)."""
    if state.t >= config.horizon:
        raise ProtocolError(f"episode finished at t = {state.t}")
    size = action_set_size(config)
    if not 0 <= action < size:
        raise IndexError(f"action {action} outside [0, {size})")
    values = state.values.copy()
    pos, kind = divmod(int(action), 2)
    if config.formulation is Formulation.DECIMAL:
        if pos < config.length:
            lo, hi = sequence.value_range(config.width)
            new = values[pos] + (1 if kind == 0 else -1)
            if lo <= new <= hi:
                values[pos] = new
    else:
        values[pos] = 1 - kind
    return EnvState(values, state.t + 1)


def step(state: EnvState, action: int, config: EnvConfig, scorer=None) -> Transition:
    """Apply ``action`` and score the result.

    ``scorer`` maps a bit array to a reward; it defaults to the battery
    score under ``config.battery``.
    """
    nxt = apply_action(state, action, config)
    done = nxt.t == config.horizon
    if config.reward_mode is RewardMode.EVERY_STEP or done:
        score = scorer or (lambda b: battery_score(b, config.battery))
        reward = float(score(binary_image(nxt, config)))
    else:
        reward = 0.0
    return Transition(state, int(action), reward, nxt, done)


class CachedScorer:
    """Battery score with an LRU cache keyed on the packed bit image."""

    def __init__(self, battery: BatteryConfig = DEFAULT_CONFIG, maxsize=1 << 16):
        self.battery = battery
        self._cached = lru_cache(maxsize=maxsize)(self._score_packed)

    def _score_packed(self, key):
        packed, n = key
        bits = np.unpackbits(np.frombuffer(packed, dtype=np.uint8))[:n]
        return battery_score(bits, self.battery)

    def __call__(self, bits):
        bits = np.asarray(bits, dtype=np.uint8)
        return self._cached((np.packbits(bits).tobytes(), bits.size))


class NavigationEnv:
    """Mutable single-owner wrapper around the pure step function."""

    def __init__(self, config: EnvConfig, scorer=None):
        self.config = config
        self.scorer = scorer or CachedScorer(config.battery)
        self.n_actions = action_set_size(config)
        self.obs_dim = config.length
        self.state = reset(config)

    def reset(self):
        self.state = reset(self.config)
        return encode_observation(self.state, self.config)

    def step(self, action):
        tr = step(self.state, action, self.config, self.scorer)
        self.state = tr.next_state
        return encode_observation(self.state, self.config), tr.reward, tr.done

    def final_bits(self):
        return binary_image(self.state, self.config)


def check_distribution(probs, n_actions, tol=1e-6):
    p = np.asarray(probs, dtype=np.float64)
    if p.shape != (n_actions,):
        raise PolicyContractError(f"expected {n_actions} probabilities, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise PolicyContractError("probabilities must be finite and non-negative")
    if abs(p.sum() - 1.0) > tol:
        raise PolicyContractError(f"probabilities sum to {p.sum():.9f}")
    return p / p.sum()


def run_episode(config: EnvConfig, policy, rng, scorer=None) -> list[Transition]:
    """Roll out one episode; ``policy(observation)`` returns action probabilities."""
    scorer = scorer or CachedScorer(config.battery)
    n_actions = action_set_size(config)
    state = reset(config)
    out = []
    while state.t < config.horizon:
        p = check_distribution(policy(encode_observation(state, config)), n_actions)
        action = int(rng.choice(n_actions, p=p))
        tr = step(state, action, config, scorer)
        out.append(tr)
        state = tr.next_state
    return out


def with_battery(config: EnvConfig, battery: BatteryConfig) -> EnvConfig:
    return replace(config, battery=battery)
