"""Gated recurrent unit cell and bidirectional sequence scan.

Gates follow the concatenation form with no bias terms:

    z = sigmoid([h, x] @ Wz)
    r = sigmoid([h, x] @ Wr)
    c = tanh([r*h, x] @ Wc)
    h' = (1 - z)*h + z*c

Weights have shape (hidden + input, hidden); rows [:hidden] act on the
recurrent state and rows [hidden:] on the input, which lets the sequence
scan hoist all input projections into one GEMM per gate. Biases are off by
default but supported for loading externally trained weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops
from .tensor import Tensor, as_tensor


@dataclass
class GruState:
    hidden: Tensor  # (batch, hidden_size)
    direction: str  # "forward" or "backward"


@dataclass
class GruWeights:
    """One direction's gate matrices (update, reset, candidate)."""

    wz: Tensor
    wr: Tensor
    wc: Tensor
    bz: Tensor | None = None
    br: Tensor | None = None
    bc: Tensor | None = None

    @property
    def hidden_size(self) -> int:
        return self.wz.data.shape[1]

    @property
    def input_size(self) -> int:
        return self.wz.data.shape[0] - self.wz.data.shape[1]


def _gate(hx: Tensor, w: Tensor, b: Tensor | None) -> Tensor:
    pre = ops.matmul(hx, w)
    return pre if b is None else ops.add(pre, b)


def gru_cell(x_t: Tensor, h_prev: Tensor, weights: GruWeights,
             direction: str = "forward") -> GruState:
    """One GRU step on a (batch, input) slice."""
    x_t, h_prev = as_tensor(x_t), as_tensor(h_prev)
    H = weights.hidden_size
    if x_t.data.shape[1] + H != weights.wz.data.shape[0]:
        raise ValueError(
            f"gru_cell: [h|x] width {H + x_t.data.shape[1]} does not match "
            f"weight rows {weights.wz.data.shape[0]}"
        )
    hx = ops.concat([h_prev, x_t], axis=1)
    z = ops.sigmoid(_gate(hx, weights.wz, weights.bz))
    r = ops.sigmoid(_gate(hx, weights.wr, weights.br))
    rhx = ops.concat([ops.mul(r, h_prev), x_t], axis=1)
    c = ops.tanh(_gate(rhx, weights.wc, weights.bc))
    h_new = ops.add(ops.mul(ops.sub(1.0, z), h_prev), ops.mul(z, c))
    return GruState(h_new, direction)


def _scan(inputs: Tensor, weights: GruWeights, reverse: bool) -> list[Tensor]:
    """Run one direction over (T,B,I); returns states indexed by time."""
    T, B, _ = inputs.data.shape
    H = weights.hidden_size

    whz, whr, whc = weights.wz[:H], weights.wr[:H], weights.wc[:H]
    flat = inputs.reshape((T * B, -1))
    # one GEMM per gate for every timestep's input projection
    xz, xr, xc = (
        _gate(flat, w[H:], b).reshape((T, B, H))
        for w, b in ((weights.wz, weights.bz), (weights.wr, weights.br),
                     (weights.wc, weights.bc))
    )

    h = Tensor(np.zeros((B, H), dtype=inputs.data.dtype))
    states: list[Tensor | None] = [None] * T
    order = range(T - 1, -1, -1) if reverse else range(T)
    for t in order:
        z = ops.sigmoid(ops.add(ops.matmul(h, whz), xz[t]))
        r = ops.sigmoid(ops.add(ops.matmul(h, whr), xr[t]))
        c = ops.tanh(ops.add(ops.matmul(ops.mul(r, h), whc), xc[t]))
        h = ops.add(ops.mul(ops.sub(1.0, z), h), ops.mul(z, c))
        states[t] = h
    return states  # type: ignore[return-value]


def bigru_sequence(inputs: Tensor, forward: GruWeights,
                   backward: GruWeights) -> tuple[Tensor, Tensor]:
    """Bidirectional scan over (T,B,I) from zero initial states.

    Returns the full forward and backward state sequences, each (T,B,H):
    forward_states[t] has consumed x[0..t], backward_states[t] has consumed
    x[t..T-1]. Callers pick their pooling (e.g. last forward + first
    backward state).
    """
    inputs = as_tensor(inputs)
    if inputs.data.ndim != 3:
        raise ValueError(f"bigru_sequence expects (T,B,I), got {inputs.data.shape}")
    fwd = _scan(inputs, forward, reverse=False)
    bwd = _scan(inputs, backward, reverse=True)
    B, H = fwd[0].data.shape
    stack_f = ops.concat([s.reshape((1, B, H)) for s in fwd], axis=0)
    stack_b = ops.concat([s.reshape((1, B, H)) for s in bwd], axis=0)
    return stack_f, stack_b
