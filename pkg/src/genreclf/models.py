"""The four classifier architectures and prediction utilities.

All models take (B, 3, 224, 224) image batches in [0, 1] and emit (B, 10)
logits. The hybrid runs a ResNet18 backbone and a bidirectional GRU over the
image columns in parallel and fuses the two 256-wide feature vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine
from .dataset import GENRES
from .engine import (
    BasicBlock,
    BatchNorm,
    BiGru,
    Conv2d,
    Dropout,
    Linear,
    Module,
    Tensor,
    ops,
)
from .engine import serialization

NUM_CLASSES = len(GENRES)
INPUT_SHAPE = (3, 224, 224)
GRU_HIDDEN = 256


@dataclass
class GenreDistribution:
    """Probability vector over the ten genres."""

    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.shape != (NUM_CLASSES,):
            raise ValueError(f"expected {NUM_CLASSES} probabilities, got {self.probs.shape}")
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-6:
            raise ValueError("probabilities must be nonnegative and sum to 1 (within 1e-6)")

    def top_genre(self) -> tuple[int, str]:
        idx = int(np.argmax(self.probs))  # ties resolve to the lowest index
        return idx, GENRES[idx]


class GenreModel(Module):
    """Base for the classifiers; adds naming, forward contract, counting."""

    arch_name = "base"

    def forward(self, x: Tensor, training: bool = False,
                rng: np.random.Generator | None = None) -> Tensor:
        raise NotImplementedError

    def __call__(self, x, training=False, rng=None) -> Tensor:
        if not isinstance(x, Tensor):
            x = Tensor(np.asarray(x, dtype=np.float32))
        return self.forward(x, training=training, rng=rng)


def columns_as_sequence(x: Tensor, grayscale: bool = False) -> Tensor:
    """Treat image columns as timesteps: (B,C,H,W) -> (W, B, H*C) or (W, B, H)."""
    B = x.data.shape[0]
    if grayscale:
        gray = engine.mean(x, axis=1)           # (B, H, W)
        return engine.permute(gray, (2, 0, 1))  # (W, B, H)
    seq = engine.permute(x, (3, 0, 2, 1))       # (W, B, H, C)
    return seq.reshape((x.data.shape[3], B, -1))  # height-major flatten


class ResNet18(GenreModel):
    """7x7/2 stem, 3x3/2 max pool, four stages of two residual blocks
    (64/128/256/512 filters, stages 2-4 entered at stride 2), global average
    pool, and a linear head."""

    arch_name = "resnet18"

    def __init__(self, num_classes: int = NUM_CLASSES, seed: int = 0):
        super().__init__()
        rng = np.random.default_rng(seed)
        self.conv1 = self.add_child("conv1", Conv2d(3, 64, 7, 2, 3, rng=rng))
        self.bn1 = self.add_child("bn1", BatchNorm(64))
        widths = (64, 128, 256, 512)
        in_ch = 64
        self.stages: list[list[BasicBlock]] = []
        for s, out_ch in enumerate(widths, start=1):
            stride = 1 if s == 1 else 2
            blocks = [
                self.add_child(f"layer{s}.0", BasicBlock(in_ch, out_ch, stride, rng=rng)),
                self.add_child(f"layer{s}.1", BasicBlock(out_ch, out_ch, 1, rng=rng)),
            ]
            self.stages.append(blocks)
            in_ch = out_ch
        self.fc = self.add_child("fc", Linear(512, num_classes, rng=rng))
        self.assign_names()

    def features(self, x: Tensor, training: bool = False) -> Tensor:
        """Backbone output before pooling: (B, 512, 7, 7) on 224 input."""
        out = ops.relu(self.bn1(self.conv1(x), training))
        out = ops.maxpool2d(out, 3, 2, padding=1)
        for blocks in self.stages:
            for block in blocks:
                out = block(out, training)
        return out

    def forward(self, x, training=False, rng=None):
        out = engine.global_avgpool2d(self.features(x, training))
        return self.fc(out)


class HybridResNetBiGru(GenreModel):
    """Parallel ResNet and Bi-GRU pathways fused into one linear head.

    ResNet pathway: backbone -> adaptive max pool 1x1 -> linear 512->256 ->
    dropout 0.5 -> batch norm (that order is deliberate). GRU pathway: image
    columns as timesteps (224 steps of height*channels = 672 features, or 224
    after grayscale collapse), hidden size 256; the last forward state and
    first backward state concatenate to 512 -> linear 512->256. Head:
    concat(256, 256) -> dropout 0.5 -> linear 512->num_classes.
    """

    arch_name = "hybrid"

    def __init__(self, num_classes: int = NUM_CLASSES, seed: int = 0,
                 grayscale_columns: bool = False):
        super().__init__()
        rng = np.random.default_rng(seed)
        self.grayscale_columns = grayscale_columns
        self.resnet = self.add_child("resnet", ResNet18(num_classes, seed=seed))
        self.res_fc = self.add_child("res_fc", Linear(512, 256, rng=rng))
        self.res_dropout = self.add_child("res_dropout", Dropout(0.5))
        self.res_bn = self.add_child("res_bn", BatchNorm(256))
        step_features = 224 if grayscale_columns else 672
        self.gru = self.add_child("gru", BiGru(step_features, GRU_HIDDEN, rng=rng))
        self.gru_fc = self.add_child("gru_fc", Linear(2 * GRU_HIDDEN, 256, rng=rng))
        self.head_dropout = self.add_child("head_dropout", Dropout(0.5))
        self.head = self.add_child("head", Linear(512, num_classes, rng=rng))
        self.assign_names()

    def resnet_pathway(self, x: Tensor, training: bool = False,
                       rng: np.random.Generator | None = None) -> Tensor:
        feat = self.resnet.features(x, training)
        pooled = engine.adaptive_maxpool2d(feat).reshape((x.data.shape[0], 512))
        out = self.res_fc(pooled)
        out = self.res_dropout(out, training, rng)
        return self.res_bn(out, training)

    def gru_pathway(self, x: Tensor, training: bool = False) -> Tensor:
        seq = columns_as_sequence(x, self.grayscale_columns)
        fwd_states, bwd_states = self.gru(seq)
        last_fwd = fwd_states[seq.data.shape[0] - 1]  # consumed the whole sequence
        first_bwd = bwd_states[0]
        return self.gru_fc(engine.concat([last_fwd, first_bwd], axis=1))

    def forward(self, x, training=False, rng=None):
        res = self.resnet_pathway(x, training, rng)
        gru = self.gru_pathway(x, training)
        fused = engine.concat([res, gru], axis=1)
        fused = self.head_dropout(fused, training, rng)
        return self.head(fused)


class CnnBaseline(GenreModel):
    """Three conv/relu/maxpool stages (32/64/128 filters) and a linear head."""

    arch_name = "cnn"

    def __init__(self, num_classes: int = NUM_CLASSES, seed: int = 0):
        super().__init__()
        rng = np.random.default_rng(seed)
        self.convs = [
            self.add_child("conv1", Conv2d(3, 32, 3, 1, 1, bias=True, rng=rng)),
            self.add_child("conv2", Conv2d(32, 64, 3, 1, 1, bias=True, rng=rng)),
            self.add_child("conv3", Conv2d(64, 128, 3, 1, 1, bias=True, rng=rng)),
        ]
        self.fc = self.add_child("fc", Linear(128 * 28 * 28, num_classes, rng=rng))
        self.assign_names()

    def forward(self, x, training=False, rng=None):
        out = x
        for conv in self.convs:
            out = ops.maxpool2d(ops.relu(conv(out)), 2)
        return self.fc(out.reshape((out.data.shape[0], -1)))


class BiGruClassifier(GenreModel):
    """The hybrid's GRU pathway alone, with its own classification head."""

    arch_name = "bigru"

    def __init__(self, num_classes: int = NUM_CLASSES, seed: int = 0,
                 grayscale_columns: bool = False):
        super().__init__()
        rng = np.random.default_rng(seed)
        self.grayscale_columns = grayscale_columns
        step_features = 224 if grayscale_columns else 672
        self.gru = self.add_child("gru", BiGru(step_features, GRU_HIDDEN, rng=rng))
        self.gru_fc = self.add_child("gru_fc", Linear(2 * GRU_HIDDEN, 256, rng=rng))
        self.head = self.add_child("head", Linear(256, num_classes, rng=rng))
        self.assign_names()

    def pathway_features(self, x: Tensor) -> Tensor:
        seq = columns_as_sequence(x, self.grayscale_columns)
        fwd_states, bwd_states = self.gru(seq)
        last_fwd = fwd_states[seq.data.shape[0] - 1]
        first_bwd = bwd_states[0]
        return self.gru_fc(engine.concat([last_fwd, first_bwd], axis=1))

    def forward(self, x, training=False, rng=None):
        return self.head(self.pathway_features(x))


ARCHITECTURES = {
    "cnn": CnnBaseline,
    "bigru": BiGruClassifier,
    "resnet18": ResNet18,
    "hybrid": HybridResNetBiGru,
}


def build_model(arch: str, num_classes: int = NUM_CLASSES, seed: int = 0) -> GenreModel:
    if arch not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {arch!r} (expected one of {sorted(ARCHITECTURES)})")
    return ARCHITECTURES[arch](num_classes=num_classes, seed=seed)


def build_resnet18(num_classes: int = NUM_CLASSES, seed: int = 0) -> ResNet18:
    return ResNet18(num_classes, seed)


def build_hybrid(num_classes: int = NUM_CLASSES, seed: int = 0) -> HybridResNetBiGru:
    return HybridResNetBiGru(num_classes, seed)


def build_cnn_baseline(num_classes: int = NUM_CLASSES, seed: int = 0) -> CnnBaseline:
    return CnnBaseline(num_classes, seed)


def build_bigru_classifier(num_classes: int = NUM_CLASSES, seed: int = 0) -> BiGruClassifier:
    return BiGruClassifier(num_classes, seed)


def predict(model: GenreModel, image: np.ndarray) -> tuple[GenreDistribution, int]:
    """Eval-mode forward of a single (3,224,224) image; argmax prediction."""
    x = np.asarray(image, dtype=np.float32)
    if x.shape == INPUT_SHAPE:
        x = x[None]
    if x.shape != (1, *INPUT_SHAPE):
        raise ValueError(f"expected one {INPUT_SHAPE} image, got {x.shape}")
    with engine.no_grad():
        logits = model(x).data[0]
    if not np.all(np.isfinite(logits)):
        raise ValueError("model produced non-finite logits")
    dist = GenreDistribution(engine.softmax(logits.astype(np.float64)))
    return dist, dist.top_genre()[0]


def predict_batch(model: GenreModel, images: np.ndarray) -> np.ndarray:
    """Eval-mode probabilities for (B,3,224,224) images."""
    with engine.no_grad():
        logits = model(np.asarray(images, dtype=np.float32)).data
    return engine.softmax(logits.astype(np.float64))


def save_model(model: GenreModel, path) -> None:
    serialization.save_checkpoint(model.parameters(), path)


def load_weights(model: GenreModel, path, skip: tuple[str, ...] = ()) -> GenreModel:
    serialization.restore_parameters(model.parameters(),
                                     serialization.load_checkpoint(path), skip)
    return model


def load_external_resnet_weights(model: ResNet18, checkpoint_path,
                                 skip: tuple[str, ...] = ()) -> ResNet18:
    """Overwrite a ResNet18 from an externally produced checkpoint.

    The file must use the engine's archive format with this model's parameter
    names and shapes; every mismatch is enumerated in the raised error. Pass
    the head names in `skip` to transplant a backbone under a fresh head.
    """
    return load_weights(model, checkpoint_path, skip)


def write_model_card(path, arch: str, seed: int, config: dict) -> None:
    """Record architecture, seed, and training config next to a checkpoint."""
    with open(path, "w") as f:
        f.write(f"architecture: {arch}\nseed: {seed}\n")
        for k in sorted(config):
            f.write(f"{k}: {config[k]}\n")
