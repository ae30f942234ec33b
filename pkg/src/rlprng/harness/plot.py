"""Reward-versus-volley line charts."""
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SERIES = ("mean_total_reward", "mean_scaled_last20", "mean_final_score")


def read_metrics(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no metric rows")
    return rows


def plot_metrics(metrics_path, out_path, baseline=None, title=None):
    """Write an SVG of every metric series against the volley index."""
    rows = read_metrics(metrics_path)
    x = [int(r["volley"]) for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    for name in SERIES:
        ax.plot(x, [float(r[name]) for r in rows], marker="o", ms=3, label=name)
    if baseline is not None:
        ax.axhline(baseline, color="grey", ls="--", label="uniform baseline")
    ax.set_xlabel("volley")
    ax.set_ylabel("reward")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path
