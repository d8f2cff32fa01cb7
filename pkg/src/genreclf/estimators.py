"""scikit-learn-compatible wrappers around the pipeline.

SpectrogramImageTransformer turns raw 3-second windows into image arrays and
NeuralGenreClassifier fits any of the four architectures, so the whole chain
composes with sklearn pipelines, grid search, and friends.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .audio import DEFAULT_SAMPLE_RATE, AudioWindow
from .dataset import ArrayManifest, group_shuffle_split, naive_split
from .features import FeatureConfig, FeatureExtractor
from .models import INPUT_SHAPE, build_model, predict_batch
from .trainer import TrainConfig, train


def validate_windows(X, sample_rate: int) -> np.ndarray:
    """(N, samples) finite float array of audio windows."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None]
    if X.ndim != 2 or X.shape[1] < sample_rate // 10:
        raise ValueError(f"expected (n_windows, n_samples) audio, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("audio windows contain non-finite samples")
    return X


def validate_images(X) -> np.ndarray:
    """(N, 3, 224, 224) finite image array in [0, 1]."""
    X = np.asarray(X, dtype=np.float32)
    if X.ndim == 3:
        X = X[None]
    if X.ndim != 4 or X.shape[1:] != INPUT_SHAPE:
        raise ValueError(f"expected (n, {INPUT_SHAPE}) images, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("images contain non-finite values")
    return X


class SpectrogramImageTransformer(BaseEstimator, TransformerMixin):
    """Stateless transform: audio windows -> (N, 3, 224, 224) image arrays."""

    def __init__(self, kind: str = "mel", n_mels: int = 128,
                 sample_rate: int = DEFAULT_SAMPLE_RATE):
        self.kind = kind
        self.n_mels = n_mels
        self.sample_rate = sample_rate

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        X = validate_windows(X, self.sample_rate)
        extractor = FeatureExtractor(FeatureConfig(kind=self.kind, n_mels=self.n_mels))
        out = np.empty((len(X), *INPUT_SHAPE), dtype=np.float32)
        for i, row in enumerate(X):
            window = AudioWindow(row, self.sample_rate, f"window.{i:05d}", 0)
            out[i] = extractor.image(window).pixels.transpose(2, 0, 1)
        return out


class NeuralGenreClassifier(BaseEstimator, ClassifierMixin):
    """fit/predict interface over the engine-backed architectures.

    Pass `groups` to fit() to hold out whole songs for the early-stopping
    metric; without groups a plain shuffled split is used, and with
    validation_fraction=0 the monitor falls back to training loss.
    """

    def __init__(self, arch: str = "hybrid", max_epochs: int = 20,
                 patience: int = 10, batch_size: int = 16,
                 learning_rate: float = 1e-3, seed: int = 42,
                 validation_fraction: float = 0.2, monitor: str = "test_loss",
                 stop_when: float | None = None):
        self.arch = arch
        self.max_epochs = max_epochs
        self.patience = patience
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed
        self.validation_fraction = validation_fraction
        self.monitor = monitor
        self.stop_when = stop_when

    def fit(self, X, y, groups=None):
        X = validate_images(X)
        y = np.asarray(y)
        if len(X) != len(y):
            raise ValueError(f"{len(X)} images but {len(y)} labels")
        if len(X) < 2:
            raise ValueError("fit needs at least 2 samples")
        self.classes_, encoded = np.unique(y, return_inverse=True)

        manifest = ArrayManifest(X, encoded,
                                 list(groups) if groups is not None else None)
        monitor = self.monitor
        plan = None
        if self.validation_fraction > 0:
            split = group_shuffle_split if groups is not None else naive_split
            plan = split(manifest, 1.0 - self.validation_fraction, self.seed)
        if plan is None or len(plan.test_indices) == 0:
            # no held-out data (or too few groups): monitor the training side,
            # keeping one sample aside so the loop's eval pass stays non-empty
            plan = naive_split(manifest, (len(X) - 1) / len(X), self.seed)
            monitor = "train_loss" if "loss" in monitor else "train_accuracy"

        self.model_ = build_model(self.arch, num_classes=len(self.classes_),
                                  seed=self.seed)
        config = TrainConfig(max_epochs=self.max_epochs, patience=self.patience,
                             batch_size=self.batch_size,
                             learning_rate=self.learning_rate, seed=self.seed,
                             monitor=monitor, stop_when=self.stop_when)
        self.report_ = train(self.model_, manifest, plan, config)
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        return predict_batch(self.model_, validate_images(X))

    def predict(self, X) -> np.ndarray:
        return self.classes_[self.predict_proba(X).argmax(axis=1)]
