"""Gradient-boosted decision trees for binary classification, built from
scratch on the second-order (Newton) boosting formulation of logistic loss.

Each round fits one regression tree to per-row gradients g = p - y and
hessians h = p(1 - p) at the current margins; leaves carry the damped
Newton step -sum(g) / (sum(h) + lambda) * learning_rate. Splits are exact
greedy over sorted feature values, deterministic given (data, config).
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, replace
from typing import Callable, Iterator

import numpy as np

from .dataset import FeatureTable
from .metrics import SingleClassError, roc_auc
from .modelio import (
    GBDT_FORMAT,
    CorruptModelError,
    dump_payload,
    load_payload,
    to_matrix,
)

MODEL_VERSION = 1


class EmptyGridError(Exception):
    pass


@dataclass(frozen=True)
class GbdtConfig:
    n_estimators: int = 400
    learning_rate: float = 0.05
    max_depth: int = 10
    subsample: float = 0.8
    colsample_bytree: float = 0.8
    seed: int = 40
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0
    base_score: float = 0.5

    def __post_init__(self):
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if not 0 < self.subsample <= 1 or not 0 < self.colsample_bytree <= 1:
            raise ValueError("subsample and colsample_bytree must be in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    expz = np.exp(z[~pos])
    out[~pos] = expz / (1.0 + expz)
    return out


def _logit(p: float) -> float:
    return float(np.log(p / (1.0 - p)))


def logloss(probabilities: np.ndarray, labels: np.ndarray) -> float:
    p = np.clip(probabilities, 1e-15, 1 - 1e-15)
    return float(-np.mean(labels * np.log(p) + (1 - labels) * np.log(1 - p)))


def _leaf(g_sum: float, h_sum: float, config: GbdtConfig) -> dict:
    return {"leaf": -g_sum / (h_sum + config.reg_lambda) * config.learning_rate}


def _best_split(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    rows: np.ndarray,
    columns: np.ndarray,
    config: GbdtConfig,
) -> tuple[float, int, float] | None:
    """Scan every (feature, threshold) candidate; return (gain, feature,
    threshold) for the best, or None when nothing improves the objective.
    Ties resolve to the lowest feature index, then the lowest threshold."""
    lam = config.reg_lambda
    g_total = g[rows].sum()
    h_total = h[rows].sum()
    parent_score = g_total * g_total / (h_total + lam)
    best: tuple[float, int, float] | None = None
    for feature in columns:
        values = X[rows, feature]
        order = np.argsort(values, kind="stable")
        sorted_values = values[order]
        g_cum = np.cumsum(g[rows][order])
        h_cum = np.cumsum(h[rows][order])
        # Candidate boundaries sit between distinct consecutive values.
        boundaries = np.nonzero(sorted_values[:-1] < sorted_values[1:])[0]
        if boundaries.size == 0:
            continue
        g_left = g_cum[boundaries]
        h_left = h_cum[boundaries]
        g_right = g_total - g_left
        h_right = h_total - h_left
        valid = (h_left >= config.min_child_weight) & (h_right >= config.min_child_weight)
        if not valid.any():
            continue
        gains = 0.5 * (
            g_left**2 / (h_left + lam)
            + g_right**2 / (h_right + lam)
            - parent_score
        )
        gains = np.where(valid, gains, -np.inf)
        pos = int(np.argmax(gains))  # first max: lowest threshold wins ties
        gain = float(gains[pos])
        if gain <= 0:
            continue
        boundary = boundaries[pos]
        threshold = float((sorted_values[boundary] + sorted_values[boundary + 1]) / 2.0)
        if best is None or gain > best[0]:
            best = (gain, int(feature), threshold)
    return best


def _build_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    rows: np.ndarray,
    columns: np.ndarray,
    depth: int,
    config: GbdtConfig,
) -> dict:
    g_sum = float(g[rows].sum())
    h_sum = float(h[rows].sum())
    if depth >= config.max_depth or rows.size < 2:
        return _leaf(g_sum, h_sum, config)
    split = _best_split(X, g, h, rows, columns, config)
    if split is None:
        return _leaf(g_sum, h_sum, config)
    _, feature, threshold = split
    mask = X[rows, feature] < threshold
    left_rows = rows[mask]
    right_rows = rows[~mask]
    return {
        "feature": feature,
        "threshold": threshold,
        "left": _build_tree(X, g, h, left_rows, columns, depth + 1, config),
        "right": _build_tree(X, g, h, right_rows, columns, depth + 1, config),
    }


def tree_output(tree: dict, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.float64)

    def apply(node: dict, idx: np.ndarray) -> None:
        if "leaf" in node:
            out[idx] = node["leaf"]
            return
        mask = X[idx, node["feature"]] < node["threshold"]
        apply(node["left"], idx[mask])
        apply(node["right"], idx[~mask])

    apply(tree, np.arange(X.shape[0]))
    return out


@dataclass
class GbdtModel:
    trees: list[dict]
    feature_names: list[str]
    config: GbdtConfig

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        margins = np.full(X.shape[0], _logit(self.config.base_score))
        for tree in self.trees:
            margins += tree_output(tree, X)
        return _sigmoid(margins)

    def staged_probabilities(self, X: np.ndarray) -> Iterator[np.ndarray]:
        """Probabilities after each boosting round, round by round."""
        margins = np.full(X.shape[0], _logit(self.config.base_score))
        for tree in self.trees:
            margins += tree_output(tree, X)
            yield _sigmoid(margins)


def train_gbdt(
    train: FeatureTable, config: GbdtConfig = GbdtConfig()
) -> GbdtModel:
    feature_names = train.feature_columns()
    X = to_matrix(train, feature_names)
    y = np.asarray(train.labels(), dtype=np.float64)
    # Single-class data needs no special casing: uniform gradients make every
    # split a loss, so the rounds emit single leaves stepping toward the prior.
    rng = np.random.default_rng(config.seed)
    n_rows, n_features = X.shape
    margins = np.full(n_rows, _logit(config.base_score))
    trees: list[dict] = []
    for _ in range(config.n_estimators):
        p = _sigmoid(margins)
        g = p - y
        h = p * (1.0 - p)
        if config.subsample < 1.0:
            k = max(1, int(round(config.subsample * n_rows)))
            rows = np.sort(rng.choice(n_rows, size=k, replace=False))
        else:
            rows = np.arange(n_rows)
        if config.colsample_bytree < 1.0:
            k = max(1, int(round(config.colsample_bytree * n_features)))
            columns = np.sort(rng.choice(n_features, size=k, replace=False))
        else:
            columns = np.arange(n_features)
        tree = _build_tree(X, g, h, rows, columns, 0, config)
        trees.append(tree)
        margins += tree_output(tree, X)
    return GbdtModel(trees, feature_names, config)


def predict_proba(model: GbdtModel, rows: FeatureTable) -> list[float]:
    X = to_matrix(rows, model.feature_names)
    return [float(p) for p in model.predict_matrix(X)]


def feature_importance(model: GbdtModel) -> dict[str, float]:
    """Split-count ("weight") importance, normalized to sum to 1; an
    ensemble that never splits yields all zeros."""
    counts = {name: 0 for name in model.feature_names}

    def walk(node: dict) -> None:
        if "leaf" in node:
            return
        counts[model.feature_names[node["feature"]]] += 1
        walk(node["left"])
        walk(node["right"])

    for tree in model.trees:
        walk(tree)
    total = sum(counts.values())
    if total == 0:
        return {name: 0.0 for name in model.feature_names}
    return {name: count / total for name, count in counts.items()}


@dataclass
class GridSearchResult:
    best_config: object
    candidates: list[dict]
    fold_scores: list[list[float]]


def _gbdt_fit_predict(config, train: FeatureTable, eval_rows: FeatureTable) -> list[float]:
    return predict_proba(train_gbdt(train, config), eval_rows)


def grid_search(
    train: FeatureTable,
    grid: dict[str, list],
    folds: int,
    base_config=None,
    fit_predict: Callable[[object, FeatureTable, FeatureTable], list[float]] | None = None,
    seed: int = 42,
) -> GridSearchResult:
    """Stratified k-fold CV over the cartesian grid, maximizing mean AUC.
    Ties prefer the lower n_estimators, then the lower max_depth. Works for
    any config type whose fields cover the grid keys (the MLP reuses it)."""
    from .dataset import stratified_kfold

    if not grid or any(len(v) == 0 for v in grid.values()):
        raise EmptyGridError("grid must list at least one candidate per parameter")
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if base_config is None:
        base_config = GbdtConfig()
    if fit_predict is None:
        fit_predict = _gbdt_fit_predict

    labels = train.labels()
    fold_assignment = stratified_kfold(labels, folds, seed=seed)
    keys = list(grid.keys())
    candidates = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]

    all_scores: list[list[float]] = []
    ranked: list[tuple] = []
    for index, params in enumerate(candidates):
        config = replace(base_config, **params)
        scores: list[float] = []
        for held in fold_assignment:
            held_set = set(held)
            fit_rows = [i for i in range(len(train.rows)) if i not in held_set]
            fit_part = train.select_rows(fit_rows)
            eval_part = train.select_rows(held)
            predicted = fit_predict(config, fit_part, eval_part)
            try:
                scores.append(roc_auc(predicted, eval_part.labels()))
            except SingleClassError:
                scores.append(0.5)
        all_scores.append(scores)
        mean_auc = sum(scores) / len(scores)
        ranked.append(
            (
                -mean_auc,
                getattr(config, "n_estimators", 0),
                getattr(config, "max_depth", 0),
                index,
                config,
            )
        )
    ranked.sort(key=lambda item: item[:4])
    best = ranked[0][4]
    return GridSearchResult(best_config=best, candidates=candidates, fold_scores=all_scores)


def save_model(model: GbdtModel) -> bytes:
    return dump_payload(
        GBDT_FORMAT,
        MODEL_VERSION,
        {
            "config": asdict(model.config),
            "feature_names": model.feature_names,
            "trees": model.trees,
        },
    )


def load_model(data: bytes) -> GbdtModel:
    document = load_payload(data, GBDT_FORMAT, MODEL_VERSION)
    try:
        config = GbdtConfig(**document["config"])
        trees = document["trees"]
        feature_names = list(document["feature_names"])
        for tree in trees:
            _validate_tree(tree, len(feature_names))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModelError(f"malformed model payload: {exc}") from exc
    return GbdtModel(trees=trees, feature_names=feature_names, config=config)


def _validate_tree(node: dict, n_features: int) -> None:
    if "leaf" in node:
        if not np.isfinite(node["leaf"]):
            raise ValueError("non-finite leaf weight")
        return
    if not 0 <= node["feature"] < n_features:
        raise ValueError(f"split feature {node['feature']} out of range")
    _validate_tree(node["left"], n_features)
    _validate_tree(node["right"], n_features)
