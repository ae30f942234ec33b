"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime error,
3 integrity error (corrupt checkpoint or incompatible bundle).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import sequence
from .harness import (BATTERY_PRESETS, BundleError, ConfigError, evaluate,
                      evaluate_baseline, generate, load_bundle, load_config, train)
from .neural import IntegrityError
from .nist import ALL_TESTS, run_battery

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_INTEGRITY = 0, 1, 2, 3


def _cmd_train(args):
    try:
        config = load_config(args.config)
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    result = train(config, args.out, progress=lambda m: print(
        f"volley {m.volley}: total={m.mean_total_reward:.4f} "
        f"last20={m.mean_scaled_last20:.4f} final={m.mean_final_score:.4f}",
        flush=True))
    if result.baseline is not None:
        print(f"uniform baseline: {result.baseline.mean:.4f}")
    if config.training.evaluation_episodes:
        bundle = load_bundle(args.out)
        report = evaluate(bundle, config.training.evaluation_episodes,
                          np.random.default_rng([config.training.env_seed, 1 << 30]))
        with open(f"{args.out}/evaluation.json", "w") as fh:
            json.dump(report, fh, indent=1)
        print(json.dumps(report))
    return EXIT_OK


def _cmd_evaluate(args):
    bundle = load_bundle(args.bundle)
    print(json.dumps(evaluate(bundle, args.episodes, np.random.default_rng(args.seed)),
                     indent=1))
    return EXIT_OK


def _cmd_generate(args):
    bundle = load_bundle(args.bundle)
    gen = generate(bundle, args.periods, np.random.default_rng(args.seed))
    for path in gen.write(args.out):
        print(path)
    print(f"{len(gen.periods)} periods, {gen.distinct_periods()} distinct, "
          f"mean score {np.mean(gen.scores):.4f}")
    return EXIT_OK


def _cmd_nist(args):
    try:
        seqs = sequence.read_sequences(args.input)
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    battery = BATTERY_PRESETS[args.battery]
    reports = [run_battery(s, battery) for s in seqs]
    if not args.summary:
        print(json.dumps([r.to_dict() for r in reports], indent=1))
        return EXIT_OK
    print(f"{len(reports)} sequences, alpha={battery.alpha}")
    print(f"{'test':28s} {'eligible':>8s} {'pass rate':>9s} {'mean P':>8s}")
    for test in ALL_TESTS:
        outs = [r.outcome(test) for r in reports]
        outs = [o for o in outs if o is not None]
        if not outs:
            print(f"{test.value:28s} {0:8d} {'-':>9s} {'-':>8s}")
            continue
        rate = np.mean([o.passed for o in outs])
        mean_p = np.mean([np.mean(o.p_values) for o in outs])
        print(f"{test.value:28s} {len(outs):8d} {rate:9.3f} {mean_p:8.4f}")
    print(f"mean battery score: {np.mean([r.score for r in reports]):.4f}")
    return EXIT_OK


def _cmd_baseline(args):
    res = evaluate_baseline(args.bits, args.count, np.random.default_rng(args.seed),
                            BATTERY_PRESETS[args.battery])
    print(json.dumps({"bits": res.bits, "count": res.count, "mean": res.mean,
                      "std": float(res.scores.std())}))
    return EXIT_OK


def _cmd_plot(args):
    from .harness.plot import plot_metrics
    try:
        plot_metrics(args.metrics, args.out, args.baseline)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    print(args.out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="rlprng", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("train", help="train an agent from a TOML config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_train)

    s = sub.add_parser("evaluate", help="score rollouts of a trained bundle")
    s.add_argument("--bundle", required=True)
    s.add_argument("--episodes", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_evaluate)

    s = sub.add_parser("generate", help="emit concatenated periods from a bundle")
    s.add_argument("--bundle", required=True)
    s.add_argument("--periods", type=int, default=1)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_generate)

    s = sub.add_parser("nist", help="run the test battery on a bit file")
    s.add_argument("--input", required=True)
    s.add_argument("--summary", action="store_true")
    s.add_argument("--battery", choices=sorted(BATTERY_PRESETS), default="default")
    s.set_defaults(func=_cmd_nist)

    s = sub.add_parser("baseline", help="mean score of uniform fair-bit sequences")
    s.add_argument("--bits", type=int, required=True)
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--seed", type=int, default=2)
    s.add_argument("--battery", choices=sorted(BATTERY_PRESETS), default="calibrated")
    s.set_defaults(func=_cmd_baseline)

    s = sub.add_parser("plot", help="SVG chart of a metrics CSV")
    s.add_argument("--metrics", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--baseline", type=float)
    s.set_defaults(func=_cmd_plot)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (BundleError, IntegrityError) as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (ConfigError, sequence.SequenceError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - top-level reporting
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
