"""Layer objects: parameter containers around the functional ops.

A Module owns Parameters (and child Modules); parameter names are assigned
from the attribute path once a model finalizes, giving every tensor a stable
checkpoint key like "layer2.0.conv1.weight".
"""

from __future__ import annotations

import numpy as np

from . import ops, rnn
from .tensor import Parameter, Tensor


class Module:
    def __init__(self):
        self._params: dict[str, Parameter] = {}
        self._children: dict[str, "Module"] = {}

    def register(self, local_name: str, param: Parameter) -> Parameter:
        self._params[local_name] = param
        return param

    def add_child(self, local_name: str, module: "Module") -> "Module":
        self._children[local_name] = module
        return module

    def named_parameters(self, prefix: str = ""):
        for local, p in self._params.items():
            yield (f"{prefix}{local}", p)
        for local, child in self._children.items():
            yield from child.named_parameters(prefix=f"{prefix}{local}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def trainable_parameters(self) -> list[Parameter]:
        return [p for p in self.parameters() if p.trainable]

    def assign_names(self):
        """Stamp hierarchical names onto parameters; call once per model."""
        names = set()
        for name, p in self.named_parameters():
            if name in names:
                raise ValueError(f"duplicate parameter name {name!r}")
            names.add(name)
            p.name = name

    def param_count(self, trainable_only: bool = True) -> int:
        return sum(p.data.size for p in self.parameters()
                   if p.trainable or not trainable_only)

    def zero_grad(self):
        for p in self.parameters():
            p.tensor.zero_grad()


def _uniform(rng: np.random.Generator, shape, bound: float, dtype) -> Tensor:
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(dtype))


class Conv2d(Module):
    def __init__(self, in_ch: int, out_ch: int, kernel: int, stride: int = 1,
                 padding: int = 0, bias: bool = False, *,
                 rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.stride, self.padding = stride, padding
        bound = 1.0 / np.sqrt(in_ch * kernel * kernel)
        self.weight = self.register("weight", Parameter(
            "", _uniform(rng, (out_ch, in_ch, kernel, kernel), bound, dtype)))
        self.bias = None
        if bias:
            self.bias = self.register("bias", Parameter(
                "", Tensor(np.zeros(out_ch, dtype=dtype))))

    def __call__(self, x: Tensor) -> Tensor:
        b = self.bias.tensor if self.bias is not None else None
        return ops.conv2d(x, self.weight.tensor, b, self.stride, self.padding)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, bias: bool = True, *,
                 rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        bound = 1.0 / np.sqrt(in_features)
        self.weight = self.register("weight", Parameter(
            "", _uniform(rng, (in_features, out_features), bound, dtype)))
        self.bias = None
        if bias:
            self.bias = self.register("bias", Parameter(
                "", Tensor(np.zeros(out_features, dtype=dtype))))

    def __call__(self, x: Tensor) -> Tensor:
        b = self.bias.tensor if self.bias is not None else None
        return ops.linear(x, self.weight.tensor, b)


class BatchNorm(Module):
    """Per-channel batch normalization for (B,C) or (B,C,H,W) tensors."""

    def __init__(self, num_features: int, momentum: float = 0.1,
                 eps: float = 1e-5, dtype=np.float32):
        super().__init__()
        self.momentum, self.eps = momentum, eps
        self.gamma = self.register("gamma", Parameter(
            "", Tensor(np.ones(num_features, dtype=dtype))))
        self.beta = self.register("beta", Parameter(
            "", Tensor(np.zeros(num_features, dtype=dtype))))
        self.running_mean = self.register("running_mean", Parameter(
            "", Tensor(np.zeros(num_features, dtype=dtype)), trainable=False))
        self.running_var = self.register("running_var", Parameter(
            "", Tensor(np.ones(num_features, dtype=dtype)), trainable=False))

    def __call__(self, x: Tensor, training: bool = False) -> Tensor:
        return ops.batchnorm(x, self.gamma.tensor, self.beta.tensor,
                             self.running_mean.data, self.running_var.data,
                             training, self.momentum, self.eps)


class Dropout(Module):
    def __init__(self, rate: float = 0.5):
        super().__init__()
        self.rate = rate

    def __call__(self, x: Tensor, training: bool = False,
                 rng: np.random.Generator | None = None) -> Tensor:
        return ops.dropout(x, self.rate, training, rng)


class BiGru(Module):
    """Single-layer bidirectional GRU over (T,B,I); gates carry no biases."""

    def __init__(self, input_size: int, hidden_size: int, bias: bool = False, *,
                 rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.hidden_size = hidden_size
        bound = 1.0 / np.sqrt(hidden_size)
        shape = (hidden_size + input_size, hidden_size)
        for d in ("fwd", "bwd"):
            for gate in ("wz", "wr", "wc"):
                self.register(f"{d}.{gate}", Parameter(
                    "", _uniform(rng, shape, bound, dtype)))
            if bias:
                for gate in ("bz", "br", "bc"):
                    self.register(f"{d}.{gate}", Parameter(
                        "", Tensor(np.zeros(hidden_size, dtype=dtype))))
        self.has_bias = bias

    def direction_weights(self, direction: str) -> rnn.GruWeights:
        d = {"forward": "fwd", "backward": "bwd"}[direction]
        pick = lambda k: self._params[f"{d}.{k}"].tensor
        biases = {f"b{g}": pick(f"b{g}") for g in "zrc"} if self.has_bias else {}
        return rnn.GruWeights(pick("wz"), pick("wr"), pick("wc"), **biases)

    def __call__(self, inputs: Tensor) -> tuple[Tensor, Tensor]:
        return rnn.bigru_sequence(inputs,
                                  self.direction_weights("forward"),
                                  self.direction_weights("backward"))


class BasicBlock(Module):
    """Two-layer residual block: relu(bn(conv(relu(bn(conv x)))) + shortcut)."""

    def __init__(self, in_ch: int, out_ch: int, stride: int = 1, *,
                 rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.conv1 = self.add_child("conv1", Conv2d(
            in_ch, out_ch, 3, stride, 1, rng=rng, dtype=dtype))
        self.bn1 = self.add_child("bn1", BatchNorm(out_ch, dtype=dtype))
        self.conv2 = self.add_child("conv2", Conv2d(
            out_ch, out_ch, 3, 1, 1, rng=rng, dtype=dtype))
        self.bn2 = self.add_child("bn2", BatchNorm(out_ch, dtype=dtype))
        self.downsample = None
        self.downsample_bn = None
        if stride != 1 or in_ch != out_ch:
            self.downsample = self.add_child("downsample", Conv2d(
                in_ch, out_ch, 1, stride, 0, rng=rng, dtype=dtype))
            self.downsample_bn = self.add_child("downsample_bn",
                                                BatchNorm(out_ch, dtype=dtype))

    def __call__(self, x: Tensor, training: bool = False) -> Tensor:
        out = ops.relu(self.bn1(self.conv1(x), training))
        out = self.bn2(self.conv2(out), training)
        if self.downsample is not None:
            shortcut = self.downsample_bn(self.downsample(x), training)
        else:
            shortcut = x
        return ops.relu(ops.add(out, shortcut))


def residual_block(x: Tensor, block: BasicBlock, training: bool = False) -> Tensor:
    """Functional entry point for a configured residual block."""
    return block(x, training)
