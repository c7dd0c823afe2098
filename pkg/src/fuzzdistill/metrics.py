"""Binary-classification metrics, curves and agreement statistics.

Positive class is 1 throughout; the decision rule is score >= threshold
(inclusive), which also fixes the semantics of the downstream
"100% confidence" filter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .dataset import (
    DegenerateClassError,
    FeatureTable,
    stratified_kfold,
    stratified_subsample,
)


class LengthMismatchError(Exception):
    pass


class SingleClassError(Exception):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp


@dataclass(frozen=True)
class MetricsSummary:
    accuracy: float
    precision: float
    recall: float
    f1: float
    undefined: frozenset[str] = frozenset()


@dataclass
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc_roc: float
    mcc: float
    kappa: float
    threshold: float
    confusion: ConfusionMatrix
    undefined: frozenset[str] = frozenset()

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc_roc": self.auc_roc,
            "mcc": self.mcc,
            "kappa": self.kappa,
            "threshold": self.threshold,
            "confusion": {"tn": self.confusion.tn, "fp": self.confusion.fp,
                          "fn": self.confusion.fn, "tp": self.confusion.tp},
            "undefined": sorted(self.undefined),
        }


def confusion(
    scores: Sequence[float], labels: Sequence[int], threshold: float = 0.5
) -> ConfusionMatrix:
    if len(scores) != len(labels):
        raise LengthMismatchError(f"{len(scores)} scores vs {len(labels)} labels")
    if not scores:
        raise LengthMismatchError("empty inputs")
    tn = fp = fn = tp = 0
    for score, label in zip(scores, labels):
        predicted = 1 if score >= threshold else 0
        if predicted == 1 and label == 1:
            tp += 1
        elif predicted == 1:
            fp += 1
        elif label == 1:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tn=tn, fp=fp, fn=fn, tp=tp)


def summary(cm: ConfusionMatrix) -> MetricsSummary:
    undefined = set()
    accuracy = (cm.tp + cm.tn) / cm.total
    if cm.tp + cm.fp == 0:
        precision, flag = 0.0, True
    else:
        precision, flag = cm.tp / (cm.tp + cm.fp), False
    if flag:
        undefined.add("precision")
    if cm.tp + cm.fn == 0:
        recall = 0.0
        undefined.add("recall")
    else:
        recall = cm.tp / (cm.tp + cm.fn)
    if precision + recall == 0:
        f1 = 0.0
        undefined.add("f1")
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsSummary(accuracy, precision, recall, f1, frozenset(undefined))


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Rank-based (Mann-Whitney) AUC with average ranks for ties; equal to
    the trapezoidal area under the ROC at all unique thresholds."""
    n_pos = sum(1 for y in labels if y == 1)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("AUC needs both classes")
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        avg_rank = (i + j) / 2 + 1  # 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = avg_rank
        i = j + 1
    rank_sum_pos = sum(r for r, y in zip(ranks, labels) if y == 1)
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


def mcc(cm: ConfusionMatrix) -> float:
    denom = math.sqrt(
        float(cm.tp + cm.fp) * (cm.tp + cm.fn) * (cm.tn + cm.fp) * (cm.tn + cm.fn)
    )
    if denom == 0:
        return 0.0
    return (cm.tp * cm.tn - cm.fp * cm.fn) / denom


def kappa(cm: ConfusionMatrix) -> float:
    total = cm.total
    observed = (cm.tp + cm.tn) / total
    expected = (
        (cm.tp + cm.fp) * (cm.tp + cm.fn) + (cm.fn + cm.tn) * (cm.fp + cm.tn)
    ) / (total * total)
    if expected == 1.0:
        return 0.0
    return (observed - expected) / (1 - expected)


def compute_report(
    scores: Sequence[float], labels: Sequence[int], threshold: float = 0.5
) -> MetricsReport:
    cm = confusion(scores, labels, threshold)
    summ = summary(cm)
    undefined = set(summ.undefined)
    try:
        auc = roc_auc(scores, labels)
    except SingleClassError:
        auc = 0.0
        undefined.add("auc_roc")
    if mcc(cm) == 0.0 and min(cm.tp + cm.fp, cm.tp + cm.fn, cm.tn + cm.fp, cm.tn + cm.fn) == 0:
        undefined.add("mcc")
    return MetricsReport(
        accuracy=summ.accuracy,
        precision=summ.precision,
        recall=summ.recall,
        f1=summ.f1,
        auc_roc=auc,
        mcc=mcc(cm),
        kappa=kappa(cm),
        threshold=threshold,
        confusion=cm,
        undefined=frozenset(undefined),
    )


def pr_curve(
    scores: Sequence[float], labels: Sequence[int]
) -> list[tuple[float, float]]:
    """(recall, precision) at every unique score threshold, descending."""
    n_pos = sum(1 for y in labels if y == 1)
    if n_pos == 0 or n_pos == len(labels):
        raise SingleClassError("PR curve needs both classes")
    points = []
    for t in sorted(set(scores), reverse=True):
        tp = sum(1 for s, y in zip(scores, labels) if s >= t and y == 1)
        fp = sum(1 for s, y in zip(scores, labels) if s >= t and y == 0)
        precision = tp / (tp + fp) if tp + fp else 0.0
        points.append((tp / n_pos, precision))
    return points


def roc_curve(
    scores: Sequence[float], labels: Sequence[int]
) -> list[tuple[float, float]]:
    """(false positive rate, true positive rate) per unique threshold,
    descending, with the (0,0) and (1,1) endpoints included."""
    n_pos = sum(1 for y in labels if y == 1)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("ROC curve needs both classes")
    points = [(0.0, 0.0)]
    for t in sorted(set(scores), reverse=True):
        tp = sum(1 for s, y in zip(scores, labels) if s >= t and y == 1)
        fp = sum(1 for s, y in zip(scores, labels) if s >= t and y == 0)
        points.append((fp / n_neg, tp / n_pos))
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    return points


@dataclass
class CurvePoint:
    fraction: float
    rows: int
    train_mean: float
    train_std: float
    val_mean: float
    val_std: float


def _accuracy(scores: Sequence[float], labels: Sequence[int]) -> float:
    hits = sum(1 for s, y in zip(scores, labels) if (1 if s >= 0.5 else 0) == y)
    return hits / len(labels)


def learning_curve(
    trainer: Callable[[FeatureTable], Callable[[FeatureTable], list[float]]],
    table: FeatureTable,
    fractions: Sequence[float],
    folds: int = 3,
    seed: int = 42,
) -> list[CurvePoint]:
    """Train/validation accuracy (mean and stddev over stratified k-fold CV)
    at increasing training-set fractions. `trainer` fits on a table and
    returns a scorer mapping a table to per-row probabilities."""
    labels = table.labels()
    points = []
    for frac_idx, fraction in enumerate(fractions):
        if not 0 < fraction <= 1:
            raise ValueError(f"fraction {fraction} outside (0, 1]")
        sub_idx = stratified_subsample(labels, fraction, seed=seed + frac_idx)
        sub = table.select_rows(sub_idx)
        sub_labels = [labels[i] for i in sub_idx]
        if len(set(sub_labels)) < 2:
            raise DegenerateClassError(f"fraction {fraction} leaves a single class")
        fold_assignment = stratified_kfold(sub_labels, folds, seed=seed)
        train_accs, val_accs = [], []
        for held in fold_assignment:
            held_set = set(held)
            train_rows = [i for i in range(len(sub.rows)) if i not in held_set]
            train_part = sub.select_rows(train_rows)
            val_part = sub.select_rows(held)
            scorer = trainer(train_part)
            train_accs.append(_accuracy(scorer(train_part), train_part.labels()))
            val_accs.append(_accuracy(scorer(val_part), val_part.labels()))
        points.append(
            CurvePoint(
                fraction=fraction,
                rows=len(sub.rows),
                train_mean=_mean(train_accs),
                train_std=_std(train_accs),
                val_mean=_mean(val_accs),
                val_std=_std(val_accs),
            )
        )
    return points


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def _std(values: Sequence[float]) -> float:
    mu = _mean(values)
    return math.sqrt(sum((v - mu) ** 2 for v in values) / len(values))
