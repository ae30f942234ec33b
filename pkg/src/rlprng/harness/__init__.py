"""Experiment orchestration: training, baselines and generator packaging."""
from .config import (BATTERY_PRESETS, ConfigError, TrainConfig, TrainingConfig,
                     config_from_dict, load_config, resolved_from_dict)
from .generator import (BundleError, EmptyReport, GeneratorBundle, Generation,
                        evaluate, generate, load_bundle)
from .training import (BaselineResult, EpisodeRecord, TrainingError, TrainResult,
                       VolleyMetrics, evaluate_baseline, scaled_reward_last_k,
                       train, update_sizes, volley_metrics)

__all__ = [
    "BATTERY_PRESETS", "BaselineResult", "BundleError", "ConfigError",
    "EmptyReport", "EpisodeRecord", "GeneratorBundle", "Generation",
    "TrainConfig", "TrainResult", "TrainingConfig", "TrainingError",
    "VolleyMetrics", "config_from_dict", "evaluate", "evaluate_baseline",
    "generate", "load_bundle", "load_config", "resolved_from_dict",
    "scaled_reward_last_k", "train", "update_sizes", "volley_metrics",
]
