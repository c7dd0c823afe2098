"""Figure rendering for the CLI report path. Every function writes one PNG
next to the delimited/JSON outputs and returns the path it wrote."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .metrics import ConfusionMatrix, CurvePoint, pr_curve, roc_curve  # noqa: E402


def plot_confusion(cm: ConfusionMatrix, path: str | Path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    grid = [[cm.tn, cm.fp], [cm.fn, cm.tp]]
    ax.imshow(grid, cmap="Blues")
    for i in range(2):
        for j in range(2):
            ax.text(j, i, f"{grid[i][j]:,}", ha="center", va="center")
    ax.set_xticks([0, 1], ["safe", "vulnerable"])
    ax.set_yticks([0, 1], ["safe", "vulnerable"])
    ax.set_xlabel("Predicted")
    ax.set_ylabel("Actual")
    ax.set_title("Confusion matrix")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_roc(scores: Sequence[float], labels: Sequence[int], path: str | Path) -> Path:
    path = Path(path)
    points = roc_curve(scores, labels)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.plot([p[0] for p in points], [p[1] for p in points], marker=".", lw=1.5)
    ax.plot([0, 1], [0, 1], ls="--", c="gray", lw=1)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.set_title("ROC curve")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_pr(scores: Sequence[float], labels: Sequence[int], path: str | Path) -> Path:
    path = Path(path)
    points = pr_curve(scores, labels)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.plot([p[0] for p in points], [p[1] for p in points], marker=".", lw=1.5)
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("Precision-recall curve")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_learning_curve(points: list[CurvePoint], path: str | Path) -> Path:
    path = Path(path)
    rows = [p.rows for p in points]
    fig, ax = plt.subplots(figsize=(5, 4))
    for attr_mean, attr_std, label, color in (
        ("train_mean", "train_std", "training accuracy", "tab:blue"),
        ("val_mean", "val_std", "validation accuracy", "tab:green"),
    ):
        means = [getattr(p, attr_mean) for p in points]
        stds = [getattr(p, attr_std) for p in points]
        ax.plot(rows, means, marker="o", label=label, color=color)
        ax.fill_between(
            rows,
            [m - s for m, s in zip(means, stds)],
            [m + s for m, s in zip(means, stds)],
            alpha=0.2,
            color=color,
        )
    ax.set_xlabel("Training rows")
    ax.set_ylabel("Accuracy")
    ax.legend()
    ax.set_title("Learning curve")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_importance(importance: dict[str, float], path: str | Path, top: int = 10) -> Path:
    path = Path(path)
    ranked = sorted(importance.items(), key=lambda kv: kv[1], reverse=True)[:top]
    names = [name for name, _ in ranked][::-1]
    values = [value for _, value in ranked][::-1]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.barh(names, values, color="tab:blue")
    ax.set_xlabel("Importance")
    ax.set_title("Feature importance")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
