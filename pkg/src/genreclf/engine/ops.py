"""Differentiable operations: elementwise math, GEMM-backed conv, pooling,
batch norm, dropout, and the softmax cross-entropy loss.

Convolution and pooling lower to im2col + GEMM so the heavy lifting runs in
BLAS; their backwards are exact (col2im scatter / argmax routing), verified
against finite differences and naive loop oracles in the test suite.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Tensor, as_tensor, make_node


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the source shape."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# --- elementwise -------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data + b.data

    def bw(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g, b.data.shape))

    return make_node(out_data, (a, b), bw)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data - b.data

    def bw(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g, b.data.shape))

    return make_node(out_data, (a, b), bw)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data * b.data

    def bw(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g * a.data, b.data.shape))

    return make_node(out_data, (a, b), bw)


def relu(x: Tensor) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    out_data = np.where(mask, x.data, 0)

    def bw(g):
        x.accumulate_grad(g * mask)

    return make_node(out_data, (x,), bw)


def sigmoid(x: Tensor) -> Tensor:
    x = as_tensor(x)
    s = np.empty_like(x.data)
    pos = x.data >= 0
    s[pos] = 1.0 / (1.0 + np.exp(-x.data[pos]))
    ex = np.exp(x.data[~pos])
    s[~pos] = ex / (1.0 + ex)

    def bw(g):
        x.accumulate_grad(g * s * (1.0 - s))

    return make_node(s, (x,), bw)


def tanh(x: Tensor) -> Tensor:
    x = as_tensor(x)
    t = np.tanh(x.data)

    def bw(g):
        x.accumulate_grad(g * (1.0 - t * t))

    return make_node(t, (x,), bw)


# --- shape plumbing ----------------------------------------------------------

def reshape(x: Tensor, shape) -> Tensor:
    x = as_tensor(x)
    src = x.data.shape

    def bw(g):
        x.accumulate_grad(g.reshape(src))

    return make_node(x.data.reshape(shape), (x,), bw)


def permute(x: Tensor, axes) -> Tensor:
    x = as_tensor(x)
    inv = np.argsort(axes)

    def bw(g):
        x.accumulate_grad(g.transpose(inv))

    return make_node(np.ascontiguousarray(x.data.transpose(axes)), (x,), bw)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            if t.requires_grad:
                t.accumulate_grad(piece)

    return make_node(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), bw)


def _is_basic_index(idx) -> bool:
    parts = idx if isinstance(idx, tuple) else (idx,)
    return all(isinstance(p, (int, np.integer, slice)) for p in parts)


def getitem(x: Tensor, idx) -> Tensor:
    x = as_tensor(x)
    out_data = x.data[idx]

    def bw(g):
        # write into the parent's grad buffer directly; a fresh zero buffer
        # per slice would dominate tight index loops (GRU timesteps)
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        if _is_basic_index(idx):
            x.grad[idx] += g  # basic indices hit each element at most once
        else:
            np.add.at(x.grad, idx, g)

    return make_node(np.ascontiguousarray(out_data), (x,), bw)


def tsum(x: Tensor) -> Tensor:
    x = as_tensor(x)

    def bw(g):
        x.accumulate_grad(np.broadcast_to(g, x.data.shape).astype(x.data.dtype))

    return make_node(np.asarray(x.data.sum()), (x,), bw)


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    out_data = x.data.mean(axis=axis, keepdims=keepdims)
    count = x.data.size if axis is None else np.prod([x.data.shape[a] for a in np.atleast_1d(axis)])

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        x.accumulate_grad(np.broadcast_to(g, x.data.shape) / count)

    return make_node(out_data, (x,), bw)


# --- linear algebra ----------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.data.shape} @ {b.data.shape}")

    def bw(g):
        if a.requires_grad:
            a.accumulate_grad(g @ b.data.T)
        if b.requires_grad:
            b.accumulate_grad(a.data.T @ g)

    return make_node(a.data @ b.data, (a, b), bw)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Affine map: x (B,I) @ weight (I,O) + bias (O,)."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.data.shape[1] != weight.data.shape[0]:
        raise ValueError(f"linear: {x.data.shape} incompatible with weight {weight.data.shape}")
    out_data = x.data @ weight.data
    if bias is not None:
        out_data = out_data + bias.data

    def bw(g):
        if x.requires_grad:
            x.accumulate_grad(g @ weight.data.T)
        if weight.requires_grad:
            weight.accumulate_grad(x.data.T @ g)
        if bias is not None and bias.requires_grad:
            bias.accumulate_grad(g.sum(axis=0))

    parents = (x, weight) if bias is None else (x, weight, bias)
    return make_node(out_data, parents, bw)


# --- convolution and pooling ---------------------------------------------------

def _im2col_t(xp: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """(B,C,Hp,Wp) -> (C*kh*kw, B*Ho*Wo) patch matrix.

    Patch-major layout keeps the innermost copied runs contiguous (whole
    output rows), which is several times faster than the sample-major layout
    when channels are interleaved.
    """
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    b, c, ho, wo = win.shape[:4]
    return np.ascontiguousarray(win.transpose(1, 4, 5, 0, 2, 3)).reshape(c * kh * kw, b * ho * wo)


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation of (B,C,H,W) with (O,C,kh,kw) kernels."""
    x, weight = as_tensor(x), as_tensor(weight)
    B, C, H, W = x.data.shape
    O, C2, kh, kw = weight.data.shape
    if C != C2:
        raise ValueError(f"conv2d: input has {C} channels, kernel expects {C2}")
    if stride < 1 or padding < 0:
        raise ValueError("conv2d: stride must be >= 1 and padding >= 0")
    Ho = (H + 2 * padding - kh) // stride + 1
    Wo = (W + 2 * padding - kw) // stride + 1
    if Ho <= 0 or Wo <= 0:
        raise ValueError(f"conv2d: non-positive output dims ({Ho}x{Wo})")

    pad = ((0, 0), (0, 0), (padding, padding), (padding, padding))
    xp = np.pad(x.data, pad) if padding else x.data
    cols_t = _im2col_t(xp, kh, kw, stride)
    wf = weight.data.reshape(O, -1)
    out_t = wf @ cols_t  # (O, B*Ho*Wo)
    if bias is not None:
        out_t = out_t + bias.data[:, None]
    out_data = np.ascontiguousarray(out_t.reshape(O, B, Ho, Wo).transpose(1, 0, 2, 3))
    del out_t
    cache = [cols_t]  # consumed (and freed) by the weight-gradient GEMM
    del cols_t

    def bw(g):
        gflat_t = np.ascontiguousarray(g.transpose(1, 0, 2, 3)).reshape(O, B * Ho * Wo)
        if weight.requires_grad:
            cols_b = cache[0] if cache[0] is not None else _im2col_t(
                np.pad(x.data, pad) if padding else x.data, kh, kw, stride)
            cache[0] = None
            weight.accumulate_grad((gflat_t @ cols_b.T).reshape(O, C, kh, kw))
            del cols_b
        if bias is not None and bias.requires_grad:
            bias.accumulate_grad(g.sum(axis=(0, 2, 3)))
        if x.requires_grad:
            dcols = (wf.T @ gflat_t).reshape(C, kh, kw, B, Ho, Wo)
            # accumulate in (C,B,Hp,Wp) so each tap adds into aligned planes
            dxp = np.zeros((C, B, H + 2 * padding, W + 2 * padding), dtype=g.dtype)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, :, i:i + stride * Ho:stride, j:j + stride * Wo:stride] += dcols[:, i, j]
            dx = dxp.transpose(1, 0, 2, 3)
            if padding:
                dx = dx[:, :, padding:padding + H, padding:padding + W]
            x.accumulate_grad(np.ascontiguousarray(dx))

    parents = (x, weight) if bias is None else (x, weight, bias)
    return make_node(out_data, parents, bw)


def maxpool2d(x: Tensor, kernel: int, stride: int | None = None, padding: int = 0) -> Tensor:
    """Max over kxk windows; backward routes to the first maximal element
    (row-major window order on ties)."""
    x = as_tensor(x)
    stride = stride or kernel
    B, C, H, W = x.data.shape
    if kernel > H + 2 * padding or kernel > W + 2 * padding:
        raise ValueError(f"maxpool2d: kernel {kernel} exceeds padded input {H}x{W}")
    if padding:
        xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)),
                    constant_values=-np.inf)
    else:
        xp = x.data
    Ho = (H + 2 * padding - kernel) // stride + 1
    Wo = (W + 2 * padding - kernel) // stride + 1

    def tap(arr, i, j):  # the (i,j) kernel tap as a strided (B,C,Ho,Wo) view
        return arr[:, :, i:i + stride * (Ho - 1) + 1:stride,
                   j:j + stride * (Wo - 1) + 1:stride]

    out_data = tap(xp, 0, 0).copy()
    for i in range(kernel):
        for j in range(kernel):
            if i or j:
                np.maximum(out_data, tap(xp, i, j), out=out_data)

    def bw(g):
        dxp = np.zeros_like(xp, dtype=g.dtype)
        taken = np.zeros(out_data.shape, dtype=bool)
        for i in range(kernel):
            for j in range(kernel):
                # out came verbatim from some tap, so equality is exact
                sel = (tap(xp, i, j) == out_data) & ~taken
                tap(dxp, i, j)[sel] += g[sel]
                taken |= sel
        if padding:
            dxp = dxp[:, :, padding:padding + H, padding:padding + W]
        x.accumulate_grad(np.ascontiguousarray(dxp))

    return make_node(out_data, (x,), bw)


def adaptive_maxpool2d(x: Tensor) -> Tensor:
    """Global spatial max per channel, output (B,C,1,1)."""
    x = as_tensor(x)
    B, C, H, W = x.data.shape
    flat = x.data.reshape(B, C, H * W)
    arg = flat.argmax(axis=-1)
    out_data = np.take_along_axis(flat, arg[..., None], axis=-1).reshape(B, C, 1, 1)

    def bw(g):
        buf = np.zeros((B, C, H * W), dtype=g.dtype)
        bi, ci = np.ogrid[:B, :C]
        buf[bi, ci, arg] = g.reshape(B, C)
        x.accumulate_grad(buf.reshape(B, C, H, W))

    return make_node(out_data, (x,), bw)


def global_avgpool2d(x: Tensor) -> Tensor:
    """Global spatial mean per channel, output (B,C)."""
    x = as_tensor(x)
    B, C, H, W = x.data.shape

    def bw(g):
        x.accumulate_grad(np.broadcast_to(g[:, :, None, None], (B, C, H, W)) / (H * W))

    return make_node(x.data.mean(axis=(2, 3)), (x,), bw)


# --- normalization and regularization ---------------------------------------

def batchnorm(x: Tensor, gamma: Tensor, beta: Tensor,
              running_mean: np.ndarray, running_var: np.ndarray,
              training: bool, momentum: float = 0.1, eps: float = 1e-5) -> Tensor:
    """Batch normalization over (B,) or (B,H,W) per channel.

    Accepts (B,C) or (B,C,H,W) input. Training mode normalizes by biased
    batch statistics and folds them into the running buffers (in place);
    eval mode uses the running buffers.
    """
    x = as_tensor(x)
    if eps <= 0:
        raise ValueError("eps must be positive")
    nd = x.data.ndim
    if nd not in (2, 4):
        raise ValueError(f"batchnorm expects 2-D or 4-D input, got {x.data.shape}")
    red = (0,) if nd == 2 else (0, 2, 3)
    cshape = (1, -1) if nd == 2 else (1, -1, 1, 1)
    gb = gamma.data.reshape(cshape)
    bb = beta.data.reshape(cshape)

    if training:
        mu = x.data.mean(axis=red)
        var = x.data.var(axis=red)
        running_mean += momentum * (mu - running_mean)
        running_var += momentum * (var - running_var)
    else:
        mu, var = running_mean, running_var
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu.reshape(cshape)) * inv.reshape(cshape)
    out_data = gb * xhat + bb

    n = int(np.prod([x.data.shape[a] for a in red]))
    spec = "bc,bc->c" if nd == 2 else "bchw,bchw->c"

    def bw(g):
        # per-channel reductions via einsum avoid full-size temporaries
        g_sum = g.sum(axis=red)
        gx_sum = np.einsum(spec, g, xhat)
        if gamma.requires_grad:
            gamma.accumulate_grad(gx_sum.astype(gamma.data.dtype))
        if beta.requires_grad:
            beta.accumulate_grad(g_sum.astype(beta.data.dtype))
        if x.requires_grad:
            gvec = gamma.data * inv
            if training:
                # batch statistics depend on x: full normalization backward,
                # written as gx = a*g + b*xhat + c with per-channel a, b, c
                a = gvec
                bcoef = -gvec * gx_sum / n
                ccoef = -gvec * g_sum / n
                gx = g * a.reshape(cshape)
                gx += xhat * bcoef.reshape(cshape)
                gx += ccoef.reshape(cshape)
                x.accumulate_grad(gx)
            else:
                x.accumulate_grad(g * gvec.reshape(cshape))

    return make_node(out_data, (x, gamma, beta), bw)


# (B,C,H,W) callers usually reach for the dimension-specific name
batchnorm2d = batchnorm


def dropout(x: Tensor, rate: float, training: bool,
            rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: survivors scaled by 1/(1-rate); identity in eval."""
    x = as_tensor(x)
    if not (0.0 <= rate < 1.0):
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        def bw_id(g):
            x.accumulate_grad(g)
        return make_node(x.data.copy(), (x,), bw_id)

    if rng is None:
        raise ValueError("training-mode dropout needs a seeded generator")
    scale = 1.0 / (1.0 - rate)
    mask = (rng.random(x.data.shape) >= rate) * np.asarray(scale, dtype=x.data.dtype)
    mask = mask.astype(x.data.dtype)

    def bw(g):
        x.accumulate_grad(g * mask)

    return make_node(x.data * mask, (x,), bw)


# --- loss ---------------------------------------------------------------------

def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray) -> tuple[Tensor, np.ndarray]:
    """Mean negative log-likelihood; also returns the analytic logits gradient.

    grad = (softmax(logits) - onehot(labels)) / batch, which is what flows
    into `logits` when the returned loss tensor is backpropagated.
    """
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    B, C = logits.data.shape
    if labels.shape != (B,):
        raise ValueError(f"labels shape {labels.shape} does not match batch {B}")
    if labels.min() < 0 or labels.max() >= C:
        raise ValueError(f"labels out of range [0, {C})")

    zmax = logits.data.max(axis=1, keepdims=True)
    z = logits.data - zmax
    lse = np.log(np.exp(z).sum(axis=1)) + zmax[:, 0]
    loss_val = np.asarray((lse - logits.data[np.arange(B), labels]).mean())

    probs = softmax(logits.data)
    grad = probs.copy()
    grad[np.arange(B), labels] -= 1.0
    grad /= B
    grad = grad.astype(logits.data.dtype)

    def bw(g):
        logits.accumulate_grad(grad * g)

    return make_node(loss_val, (logits,), bw), grad
