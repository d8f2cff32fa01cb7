"""Minimal dense-tensor NN engine with exact analytic gradients."""

import ctypes
import ctypes.util


def _tune_allocator():
    """Keep large transient buffers (im2col, activations) in the heap.

    glibc mmaps allocations above ~32 MB and returns them to the OS on free,
    so every conv layer pays page-zeroing costs again; raising the thresholds
    lets buffers recycle. Best effort: silently skipped on other libcs.
    """
    try:
        libc = ctypes.CDLL(ctypes.util.find_library("c") or "libc.so.6", use_errno=True)
        M_TRIM_THRESHOLD, M_MMAP_THRESHOLD = -1, -3
        libc.mallopt(M_MMAP_THRESHOLD, 1 << 28)
        libc.mallopt(M_TRIM_THRESHOLD, 1 << 28)
    except (OSError, AttributeError):
        pass


_tune_allocator()

from .gradcheck import gradient_check
from .layers import (
    BasicBlock,
    BatchNorm,
    BiGru,
    Conv2d,
    Dropout,
    Linear,
    Module,
    residual_block,
)
from .ops import (
    adaptive_maxpool2d,
    add,
    batchnorm,
    batchnorm2d,
    concat,
    conv2d,
    dropout,
    getitem,
    global_avgpool2d,
    linear,
    matmul,
    maxpool2d,
    mean,
    mul,
    permute,
    relu,
    reshape,
    sigmoid,
    softmax,
    softmax_cross_entropy,
    sub,
    tanh,
    tsum,
)
from .optim import SGD, Adam, adam_step, sgd_step
from .rnn import GruState, GruWeights, bigru_sequence, gru_cell
from .serialization import load_checkpoint, restore_parameters, save_checkpoint
from .tensor import Parameter, Tensor, no_grad

__all__ = [
    "Adam", "BasicBlock", "BatchNorm", "BiGru", "Conv2d", "Dropout",
    "GruState", "GruWeights", "Linear", "Module", "Parameter", "SGD",
    "Tensor", "adam_step", "adaptive_maxpool2d", "add", "batchnorm",
    "batchnorm2d", "bigru_sequence", "concat", "conv2d", "dropout", "getitem",
    "global_avgpool2d", "gradient_check", "gru_cell", "linear",
    "load_checkpoint", "matmul", "maxpool2d", "mean", "mul", "no_grad",
    "permute", "relu", "reshape", "residual_block", "restore_parameters",
    "save_checkpoint", "sgd_step", "sigmoid", "softmax",
    "softmax_cross_entropy", "sub", "tanh", "tsum",
]
