"""Training loop with early stopping, per-epoch curves, and checkpointing."""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import Manifest, SplitPlan, batch_iter
from .engine import Adam, SGD, no_grad, softmax_cross_entropy
from .metrics import ConfusionMatrix, MetricsReport, confusion, weighted_metrics
from .models import GenreModel, save_model, write_model_card

MONITORS = {
    "test_loss": "min",
    "test_accuracy": "max",
    "train_loss": "min",
    "train_accuracy": "max",
}


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    max_epochs: int = 100
    patience: int = 10
    batch_size: int = 16
    learning_rate: float = 1e-3
    seed: int = 42
    optimizer: str = "adam"
    monitor: str = "test_loss"
    stop_when: float | None = None  # optional target on the monitored metric

    def __post_init__(self):
        if self.patience > self.max_epochs:
            raise ValueError("patience must not exceed max_epochs")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.monitor not in MONITORS:
            raise ValueError(f"monitor must be one of {sorted(MONITORS)}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    test_loss: list[float] = field(default_factory=list)
    test_acc: list[float] = field(default_factory=list)
    best_epoch: int = 0           # 1-indexed
    stopped_early: bool = False
    stop_reason: str = ""
    wall_time_s: float = 0.0

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)

    def monitored(self, name: str) -> list[float]:
        return getattr(self, name.replace("accuracy", "acc"))


class EarlyStopper:
    """Strict-improvement patience counter over a monitored metric."""

    def __init__(self, patience: int, mode: str):
        if mode not in ("min", "max"):
            raise ValueError("mode must be 'min' or 'max'")
        self.patience = patience
        self.mode = mode
        self.best: float | None = None
        self.best_epoch = 0
        self.stale = 0

    def improved(self, value: float) -> bool:
        if self.best is None:
            return True
        return value < self.best if self.mode == "min" else value > self.best

    def update(self, epoch: int, value: float) -> bool:
        """Record an epoch's metric; returns True when training should stop."""
        if self.improved(value):
            self.best, self.best_epoch, self.stale = value, epoch, 0
        else:
            self.stale += 1
        return self.stale >= self.patience


def _snapshot(model: GenreModel) -> list[np.ndarray]:
    return [p.data.copy() for p in model.parameters()]


def _restore(model: GenreModel, snap: list[np.ndarray]) -> None:
    for p, data in zip(model.parameters(), snap):
        p.data[...] = data


def evaluate(model: GenreModel, manifest: Manifest, indices: np.ndarray,
             batch_size: int = 32) -> tuple[MetricsReport, ConfusionMatrix, float]:
    """Full eval-mode pass; no parameter mutation. Returns loss per sample."""
    losses, y_true, y_pred = [], [], []
    num_classes = len(manifest.genres)
    with no_grad():
        for images, labels in batch_iter(manifest, indices, batch_size):
            logits = model(images)
            loss, _ = softmax_cross_entropy(logits, labels)
            losses.append(float(loss.data) * len(labels))
            y_true.append(labels)
            y_pred.append(logits.data.argmax(axis=1))
    y_true = np.concatenate(y_true)
    y_pred = np.concatenate(y_pred)
    cm = confusion(y_true, y_pred, num_classes)
    return weighted_metrics(cm), cm, float(np.sum(losses) / len(y_true))


def train(model: GenreModel, manifest: Manifest, plan: SplitPlan,
          config: TrainConfig, out_dir: str | None = None) -> TrainReport:
    """Train until the monitored metric stalls for `patience` epochs, hits the
    optional target, or max_epochs elapse; the best epoch's weights end up in
    the model (and on disk when out_dir is given)."""
    if len(plan.train_indices) == 0 or len(plan.test_indices) == 0:
        raise ValueError("split has an empty side; train needs both train and test entries")
    mode = MONITORS[config.monitor]
    stopper = EarlyStopper(config.patience, mode)
    opt_cls = Adam if config.optimizer == "adam" else SGD
    optimizer = opt_cls(model.trainable_parameters(), lr=config.learning_rate)
    dropout_rng = np.random.default_rng(config.seed + 0x5EED)
    report = TrainReport()
    best_snap = None
    log_f = None
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        log_f = open(os.path.join(out_dir, "train_log.jsonl"), "w")

    started = time.time()
    try:
        for epoch in range(1, config.max_epochs + 1):
            batches = batch_iter(manifest, plan.train_indices, config.batch_size,
                                 shuffle_seed=np.random.default_rng(
                                     [config.seed, epoch]).integers(2**31))
            for b, (images, labels) in enumerate(batches):
                optimizer.zero_grad()
                logits = model(images, training=True, rng=dropout_rng)
                loss, _ = softmax_cross_entropy(logits, labels)
                if not np.isfinite(loss.data):
                    raise TrainingDivergedError(
                        f"non-finite loss at epoch {epoch}, batch {b}")
                loss.backward()
                optimizer.step()

            train_report, _, train_loss = evaluate(
                model, manifest, plan.train_indices, config.batch_size)
            test_report, _, test_loss = evaluate(
                model, manifest, plan.test_indices, config.batch_size)
            report.train_loss.append(train_loss)
            report.train_acc.append(train_report.accuracy)
            report.test_loss.append(test_loss)
            report.test_acc.append(test_report.accuracy)
            if log_f:
                log_f.write(json.dumps({
                    "epoch": epoch, "train_loss": train_loss,
                    "train_acc": train_report.accuracy,
                    "test_loss": test_loss, "test_acc": test_report.accuracy,
                }) + "\n")
                log_f.flush()

            value = report.monitored(config.monitor)[-1]
            if stopper.improved(value):
                best_snap = _snapshot(model)
            should_stop = stopper.update(epoch, value)
            if config.stop_when is not None and (
                    value >= config.stop_when if mode == "max"
                    else value <= config.stop_when):
                report.stopped_early = True
                report.stop_reason = "target"
                break
            if should_stop:
                report.stopped_early = True
                report.stop_reason = "patience"
                break
        else:
            report.stop_reason = "max_epochs"
    finally:
        if log_f:
            log_f.close()

    report.best_epoch = stopper.best_epoch
    report.wall_time_s = time.time() - started
    if best_snap is not None:
        _restore(model, best_snap)
    if out_dir:
        ckpt = os.path.join(out_dir, f"{model.arch_name}.ckpt")
        save_model(model, ckpt)
        write_model_card(os.path.join(out_dir, f"{model.arch_name}.card.txt"),
                         model.arch_name, config.seed, {
                             "max_epochs": config.max_epochs,
                             "patience": config.patience,
                             "batch_size": config.batch_size,
                             "learning_rate": config.learning_rate,
                             "optimizer": config.optimizer,
                             "monitor": config.monitor,
                             "best_epoch": report.best_epoch,
                         })
    return report


def export_curves(report: TrainReport, path) -> None:
    """CSV of the per-epoch accuracy/loss curves."""
    with open(path, "w") as f:
        f.write("epoch,train_loss,train_acc,test_loss,test_acc\n")
        for i in range(report.epochs_run):
            f.write(f"{i + 1},{report.train_loss[i]:.6f},{report.train_acc[i]:.6f},"
                    f"{report.test_loss[i]:.6f},{report.test_acc[i]:.6f}\n")
