"""KNN and one-vs-rest linear SVM baselines over flattened features.

Both are written against plain arrays, with sklearn-compatible estimator
wrappers so they drop into pipelines; the classifiers themselves are in-repo
(exact tie-breaking rules, deterministic full-batch SVM training).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .audio import AudioWindow

FEATURE_SOURCES = ("raw", "stft", "mel")


@dataclass
class FeatureVector:
    values: np.ndarray
    source: str
    label: int


def featurize(data, source: str, target_dim: int = 2048) -> np.ndarray:
    """Flatten a window or log-spectrogram into a fixed-length vector.

    raw: the amplitude sequence subsampled at evenly spaced positions;
    stft/mel: the log-magnitude matrix flattened row-major and mean-pooled
    over `target_dim` contiguous blocks.
    """
    if source not in FEATURE_SOURCES:
        raise ValueError(f"source must be one of {FEATURE_SOURCES}")
    if source == "raw":
        x = data.samples if isinstance(data, AudioWindow) else np.asarray(data, dtype=np.float64)
        idx = np.linspace(0, len(x) - 1, target_dim).round().astype(np.int64)
        return x[idx].copy()
    flat = np.asarray(data, dtype=np.float64).ravel()
    if flat.size < target_dim:
        raise ValueError(f"{flat.size} values cannot be pooled into {target_dim} blocks")
    bounds = np.linspace(0, flat.size, target_dim + 1).astype(np.int64)
    sums = np.add.reduceat(flat, bounds[:-1])
    return sums / np.diff(bounds)


class Standardizer:
    """Per-dimension zero-mean/unit-variance scaling, fit on train only."""

    def __init__(self):
        self.mean_ = None
        self.std_ = None

    def fit(self, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        self.mean_ = X.mean(axis=0)
        self.std_ = np.maximum(X.std(axis=0), 1e-8)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean_) / self.std_

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        return self.fit(X).transform(X)


# --- k-nearest neighbors ------------------------------------------------------

def knn_predict(train_X: np.ndarray, train_y: np.ndarray, query: np.ndarray,
                k: int) -> int:
    """Majority vote among the k Euclidean-nearest training vectors.

    Vote ties break by the smallest summed distance within the k-set, then by
    the lowest class index.
    """
    train_X = np.asarray(train_X, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.int64)
    if len(train_X) == 0:
        raise ValueError("empty training set")
    if k > len(train_X):
        raise ValueError(f"k={k} exceeds training size {len(train_X)}")
    d = np.linalg.norm(train_X - np.asarray(query, dtype=np.float64), axis=1)
    nearest = np.argsort(d, kind="stable")[:k]
    labels = train_y[nearest]
    votes = np.bincount(labels)
    top = votes.max()
    candidates = np.flatnonzero(votes == top)
    if len(candidates) == 1:
        return int(candidates[0])
    summed = [d[nearest[labels == c]].sum() for c in candidates]
    order = np.lexsort((candidates, summed))  # distance first, then class index
    return int(candidates[order[0]])


class KnnClassifier(BaseEstimator, ClassifierMixin):
    """Exhaustive-scan KNN with the tie rules above."""

    def __init__(self, k: int = 10):
        self.k = k

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.X_ = np.asarray(X, dtype=np.float64)
        self.y_ = np.asarray(y, dtype=np.int64)
        self.classes_ = np.unique(self.y_)
        return self

    def predict(self, X):
        check_is_fitted(self, "X_")
        X = check_array(X)
        return np.array([knn_predict(self.X_, self.y_, q, self.k) for q in X])


# --- linear SVM ----------------------------------------------------------------

@dataclass
class SvmConfig:
    lambda_reg: float = 1e-4
    epochs: int = 200
    averaged: bool = True  # evaluate/return the running average of iterates


def _hinge_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray,
                     lam: float) -> float:
    margins = y * (X @ w + b)
    return 0.5 * lam * float(w @ w) + float(np.maximum(0.0, 1.0 - margins).mean())


def _fit_binary(X: np.ndarray, y: np.ndarray, cfg: SvmConfig,
                history: list[float] | None = None) -> tuple[np.ndarray, float]:
    """Full-batch subgradient descent on the L2-regularized hinge loss.

    Deterministic (no sampling); returns the running average of the iterates,
    whose objective decreases far more smoothly than the raw iterates'.
    """
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    w_avg = np.zeros(d)
    b_avg = 0.0
    for t in range(1, cfg.epochs + 1):
        step = 1.0 / (cfg.lambda_reg * (t + 10.0))
        active = y * (X @ w + b) < 1.0
        gw = cfg.lambda_reg * w - (y[active] @ X[active]) / n
        gb = -y[active].sum() / n
        w -= step * gw
        b -= step * gb
        w_avg += (w - w_avg) / t
        b_avg += (b - b_avg) / t
        if history is not None:
            history.append(_hinge_objective(w_avg, b_avg, X, y, cfg.lambda_reg))
    return (w_avg, b_avg) if cfg.averaged else (w, b)


def svm_fit(X: np.ndarray, y: np.ndarray, config: SvmConfig | None = None) -> np.ndarray:
    """One-vs-rest linear SVMs; returns weights of shape (classes, dim + 1)
    with the bias in the last column."""
    config = config or SvmConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("SVM training needs at least 2 classes")
    n_classes = int(y.max()) + 1
    weights = np.zeros((n_classes, X.shape[1] + 1))
    for c in classes:
        target = np.where(y == c, 1.0, -1.0)
        w, b = _fit_binary(X, target, config)
        weights[c, :-1] = w
        weights[c, -1] = b
    return weights


def svm_predict(weights: np.ndarray, query: np.ndarray) -> int:
    """Argmax of the per-class margins (ties to the lowest class index)."""
    margins = weights[:, :-1] @ np.asarray(query, dtype=np.float64) + weights[:, -1]
    return int(np.argmax(margins))


class LinearSvmClassifier(BaseEstimator, ClassifierMixin):
    def __init__(self, lambda_reg: float = 1e-4, epochs: int = 200):
        self.lambda_reg = lambda_reg
        self.epochs = epochs

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.weights_ = svm_fit(X, y, SvmConfig(self.lambda_reg, self.epochs))
        self.classes_ = np.unique(np.asarray(y, dtype=np.int64))
        return self

    def predict(self, X):
        check_is_fitted(self, "weights_")
        X = check_array(X)
        margins = X @ self.weights_[:, :-1].T + self.weights_[:, -1]
        return margins.argmax(axis=1)
