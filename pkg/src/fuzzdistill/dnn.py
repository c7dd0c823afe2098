"""Feedforward binary classifier built from scratch: dense ReLU stack with
inverted dropout, Adam, mean binary cross-entropy, and early stopping that
restores the best-validation-loss weights.

Inputs are z-scored with statistics frozen at training time; zero-variance
features standardize with stddev 1.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .dataset import DegenerateClassError, FeatureTable, stratified_split
from .metrics import roc_auc
from .modelio import (
    MLP_FORMAT,
    CorruptModelError,
    dump_payload,
    load_payload,
    to_matrix,
)

MODEL_VERSION = 1


class ShapeMismatchError(Exception):
    pass


@dataclass(frozen=True)
class MlpConfig:
    hidden_units: tuple[int, ...] = (128, 64, 32)
    dropout_rate: float = 0.2
    learning_rate: float = 0.001
    max_epochs: int = 30
    batch_size: int = 32
    patience: int = 5
    seed: int = 42
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    validation_fraction: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "hidden_units", tuple(self.hidden_units))
        if any(u <= 0 for u in self.hidden_units):
            raise ValueError("hidden units must be positive")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    mean: np.ndarray
    std: np.ndarray
    feature_names: list[str]
    config: MlpConfig

    def clone_parameters(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        return [w.copy() for w in self.weights], [b.copy() for b in self.biases]


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    expz = np.exp(z[~pos])
    out[~pos] = expz / (1.0 + expz)
    return out


def _bce(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1 - 1e-12)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def init_model(
    feature_names: list[str],
    mean: np.ndarray,
    std: np.ndarray,
    config: MlpConfig,
    rng: np.random.Generator,
) -> MlpModel:
    """He-initialized weights, zero biases."""
    sizes = [len(feature_names), *config.hidden_units, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases, mean, std, feature_names, config)


def forward(
    model: MlpModel,
    X: np.ndarray,
    training_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict]:
    """Standardize, run the dense/ReLU/dropout stack, sigmoid at the top.

    Returns per-row probabilities and the cache backpropagation needs.
    Inference applies no dropout; training uses inverted dropout so
    inference needs no rescaling.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != len(model.feature_names):
        raise ShapeMismatchError(
            f"expected {len(model.feature_names)} features, got {X.shape[1]}"
        )
    a = (X - model.mean) / model.std
    activations = [a]
    masks: list[np.ndarray | None] = []
    pre: list[np.ndarray] = []
    n_hidden = len(model.weights) - 1
    for layer in range(n_hidden):
        z = a @ model.weights[layer] + model.biases[layer]
        pre.append(z)
        a = np.maximum(z, 0.0)
        if training_mode and model.config.dropout_rate > 0.0:
            if rng is None:
                raise ValueError("training-mode forward with dropout needs an rng")
            keep = 1.0 - model.config.dropout_rate
            mask = (rng.random(a.shape) < keep) / keep
            a = a * mask
            masks.append(mask)
        else:
            masks.append(None)
        activations.append(a)
    z_out = a @ model.weights[-1] + model.biases[-1]
    pre.append(z_out)
    p = _sigmoid(z_out[:, 0])
    cache = {"activations": activations, "pre": pre, "masks": masks}
    return p, cache


def grad(
    model: MlpModel,
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator | None = None,
    training_mode: bool = False,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Exact gradients of mean BCE over the batch; dropout masks (when
    training) are drawn once and shared between the forward and backward
    passes. The output-layer pre-activation gradient is (p - y)/batch."""
    y = np.asarray(y, dtype=np.float64)
    p, cache = forward(model, X, training_mode=training_mode, rng=rng)
    n = len(y)
    delta = ((p - y) / n)[:, None]
    grads_w = [np.zeros_like(w) for w in model.weights]
    grads_b = [np.zeros_like(b) for b in model.biases]
    for layer in range(len(model.weights) - 1, -1, -1):
        a_prev = cache["activations"][layer]
        grads_w[layer] = a_prev.T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer == 0:
            break
        delta = delta @ model.weights[layer].T
        mask = cache["masks"][layer - 1]
        if mask is not None:
            delta = delta * mask
        delta = delta * (cache["pre"][layer - 1] > 0.0)
    return grads_w, grads_b


class EarlyStopper:
    """Stops after `patience` epochs with no strict validation-loss
    improvement and remembers the best epoch."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_loss = math.inf
        self.best_epoch = -1
        self.stale = 0

    def update(self, epoch: int, loss: float) -> bool:
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = epoch
            self.stale = 0
        else:
            self.stale += 1
        return self.stale >= self.patience


def _standardization(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0.0] = 1.0
    return mean, std


def train_mlp(
    train: FeatureTable, config: MlpConfig = MlpConfig()
) -> tuple[MlpModel, list[EpochStats]]:
    feature_names = train.feature_columns()
    X_all = to_matrix(train, feature_names)
    y_all = np.asarray(train.labels(), dtype=np.float64)
    if len(set(train.labels())) < 2:
        raise DegenerateClassError("both classes must be present")

    mean, std = _standardization(X_all)
    rng = np.random.default_rng(config.seed)
    model = init_model(feature_names, mean, std, config, rng)
    if config.max_epochs == 0:
        return model, []

    if config.validation_fraction > 0:
        fit_part, val_part = stratified_split(
            train, config.validation_fraction, seed=config.seed
        )
        X_fit = to_matrix(fit_part, feature_names)
        y_fit = np.asarray(fit_part.labels(), dtype=np.float64)
        X_val = to_matrix(val_part, feature_names)
        y_val = np.asarray(val_part.labels(), dtype=np.float64)
    else:
        # No holdout: early stopping tracks the training loss instead.
        X_fit, y_fit = X_all, y_all
        X_val, y_val = X_all, y_all

    m_w = [np.zeros_like(w) for w in model.weights]
    v_w = [np.zeros_like(w) for w in model.weights]
    m_b = [np.zeros_like(b) for b in model.biases]
    v_b = [np.zeros_like(b) for b in model.biases]
    step = 0
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_epsilon

    stopper = EarlyStopper(config.patience)
    best_weights, best_biases = model.clone_parameters()
    history: list[EpochStats] = []

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(y_fit))
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            grads_w, grads_b = grad(
                model, X_fit[batch], y_fit[batch], rng=rng, training_mode=True
            )
            step += 1
            for params, grads, m_s, v_s in (
                (model.weights, grads_w, m_w, v_w),
                (model.biases, grads_b, m_b, v_b),
            ):
                for i, g in enumerate(grads):
                    m_s[i] = b1 * m_s[i] + (1 - b1) * g
                    v_s[i] = b2 * v_s[i] + (1 - b2) * g * g
                    m_hat = m_s[i] / (1 - b1**step)
                    v_hat = v_s[i] / (1 - b2**step)
                    params[i] -= config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)

        p_fit, _ = forward(model, X_fit)
        p_val, _ = forward(model, X_val)
        val_loss = _bce(p_val, y_val)
        history.append(
            EpochStats(
                epoch=epoch,
                train_loss=_bce(p_fit, y_fit),
                train_accuracy=float(np.mean((p_fit >= 0.5) == y_fit)),
                val_loss=val_loss,
                val_accuracy=float(np.mean((p_val >= 0.5) == y_val)),
            )
        )
        improved = val_loss < stopper.best_loss
        should_stop = stopper.update(epoch, val_loss)
        if improved:
            best_weights, best_biases = model.clone_parameters()
        if should_stop:
            break

    model.weights, model.biases = best_weights, best_biases
    return model, history


def predict_proba(model: MlpModel, rows: FeatureTable) -> list[float]:
    X = to_matrix(rows, model.feature_names)
    p, _ = forward(model, X)
    return [float(v) for v in p]


def permutation_importance(
    model: MlpModel,
    table: FeatureTable,
    metric: Callable[[Sequence[float], Sequence[int]], float] = roc_auc,
    seed: int = 42,
    repeats: int = 5,
) -> dict[str, float]:
    """Metric drop when one feature column is shuffled, averaged over
    `repeats` seeded shuffles."""
    X = to_matrix(table, model.feature_names)
    labels = table.labels()
    baseline = metric(forward(model, X)[0], labels)
    rng = np.random.default_rng(seed)
    importances: dict[str, float] = {}
    for j, name in enumerate(model.feature_names):
        drops = []
        for _ in range(repeats):
            shuffled = X.copy()
            shuffled[:, j] = shuffled[rng.permutation(X.shape[0]), j]
            drops.append(baseline - metric(forward(model, shuffled)[0], labels))
        importances[name] = float(np.mean(drops))
    return importances


def save_model(model: MlpModel) -> bytes:
    config = asdict(model.config)
    config["hidden_units"] = list(model.config.hidden_units)
    return dump_payload(
        MLP_FORMAT,
        MODEL_VERSION,
        {
            "config": config,
            "feature_names": model.feature_names,
            "mean": model.mean.tolist(),
            "std": model.std.tolist(),
            "weights": [w.tolist() for w in model.weights],
            "biases": [b.tolist() for b in model.biases],
        },
    )


def load_model(data: bytes) -> MlpModel:
    document = load_payload(data, MLP_FORMAT, MODEL_VERSION)
    try:
        config_dict = dict(document["config"])
        config_dict["hidden_units"] = tuple(config_dict["hidden_units"])
        config = MlpConfig(**config_dict)
        feature_names = list(document["feature_names"])
        weights = [np.asarray(w, dtype=np.float64) for w in document["weights"]]
        biases = [np.asarray(b, dtype=np.float64) for b in document["biases"]]
        mean = np.asarray(document["mean"], dtype=np.float64)
        std = np.asarray(document["std"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModelError(f"malformed model payload: {exc}") from exc
    sizes = [len(feature_names), *config.hidden_units, 1]
    if len(weights) != len(sizes) - 1 or any(
        w.shape != (sizes[i], sizes[i + 1]) for i, w in enumerate(weights)
    ):
        raise CorruptModelError("layer shapes do not chain input to output")
    return MlpModel(weights, biases, mean, std, feature_names, config)
