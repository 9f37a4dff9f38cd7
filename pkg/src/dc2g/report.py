"""Figure rendering for benchmark results and episode trajectories."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from dc2g.planner import EpisodeStatus
from dc2g.semantic import Palette, SemanticGrid

PLANNER_COLORS = {
    "oracle": "#3498db",
    "dc2g:oracle": "#2ecc71",
    "dc2g:heuristic": "#f1c40f",
    "dc2g:bridge": "#16a085",
    "frontier": "#c0392b",
}


def _color_for(label):
    return PLANNER_COLORS.get(label, "#7f8c8d")


def benchmark_figures(rows, out_dir) -> list[str]:
    """Render extra-time, success-rate, and step-count figures next to the CSV."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = sorted({r.label() for r in rows})
    written = []

    extra = {
        lab: [r.extra_pct for r in rows if r.label() == lab and r.status == EpisodeStatus.REACHED_GOAL.value]
        for lab in labels
    }
    fig, ax = plt.subplots(figsize=(8, 5))
    xs = np.arange(len(labels))
    means = [np.mean(extra[lab]) if extra[lab] else 0.0 for lab in labels]
    medians = [np.median(extra[lab]) if extra[lab] else 0.0 for lab in labels]
    ax.bar(xs - 0.2, means, width=0.4, color=[_color_for(l) for l in labels], label="mean")
    ax.bar(xs + 0.2, medians, width=0.4, color=[_color_for(l) for l in labels], alpha=0.55, label="median")
    ax.set_xticks(xs)
    ax.set_xticklabels(labels, rotation=20)
    ax.set_ylabel("Extra time to goal (%)")
    ax.legend()
    fig.tight_layout()
    path = out / "extra_time_pct.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(str(path))

    fig, ax = plt.subplots(figsize=(8, 5))
    totals = {lab: [r for r in rows if r.label() == lab] for lab in labels}
    rates = [
        sum(r.status == EpisodeStatus.REACHED_GOAL.value for r in totals[lab]) / len(totals[lab])
        for lab in labels
    ]
    ax.bar(xs, rates, color=[_color_for(l) for l in labels])
    ax.set_xticks(xs)
    ax.set_xticklabels(labels, rotation=20)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("Success rate")
    fig.tight_layout()
    path = out / "success_rate.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(str(path))

    fig, ax = plt.subplots(figsize=(8, 5))
    data = [[r.steps for r in totals[lab]] for lab in labels]
    ax.boxplot(data, tick_labels=labels)
    ax.set_ylabel("Steps per episode")
    plt.setp(ax.get_xticklabels(), rotation=20)
    fig.tight_layout()
    path = out / "steps_box.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(str(path))
    return written


def trajectory_figure(world: SemanticGrid, palette: Palette, trajectory, path, goal=None):
    """Draw the world map with the agent's path overlaid."""
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.imshow(world.to_rgb(palette), interpolation="nearest")
    rows = [p.row for p in trajectory]
    cols = [p.col for p in trajectory]
    ax.plot(cols, rows, color="white", linewidth=2, alpha=0.9)
    ax.plot(cols[0], rows[0], "o", color="cyan", markersize=8, label="start")
    ax.plot(cols[-1], rows[-1], "s", color="magenta", markersize=8, label="end")
    if goal is not None:
        ax.plot(goal[1], goal[0], "*", color="lime", markersize=12, label="goal")
    ax.legend(loc="lower right", fontsize=8)
    ax.set_xticks([])
    ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def score_figure(names, values, ylabel, path):
    """Simple per-item bar chart used by the metric report paths."""
    fig, ax = plt.subplots(figsize=(max(6, 0.4 * len(names)), 4.5))
    ax.bar(np.arange(len(names)), values, color="#3498db")
    ax.set_xticks(np.arange(len(names)))
    ax.set_xticklabels(names, rotation=90, fontsize=6)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return str(path)
