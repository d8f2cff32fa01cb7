"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, no_grad


def gradient_check(fn, inputs: list[Tensor], step: float = 1e-5) -> float:
    """Compare backprop gradients of sum(fn(*inputs)) to central differences.

    Returns the max over all input coordinates of
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
    Inputs must have requires_grad set; fn must be deterministic.
    """
    for t in inputs:
        t.zero_grad()
    out = fn(*inputs)
    out.sum().backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy()
                for t in inputs]

    def eval_sum() -> float:
        with no_grad():
            return float(fn(*inputs).data.sum())

    worst = 0.0
    for t, a in zip(inputs, analytic):
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            f_plus = eval_sum()
            flat[i] = orig - step
            f_minus = eval_sum()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * step)
            a_i = float(a.reshape(-1)[i])
            err = abs(a_i - numeric) / max(abs(a_i), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
