"""Adam and SGD parameter updates."""

from __future__ import annotations

import numpy as np

from .tensor import Parameter


def adam_step(data: np.ndarray, grad: np.ndarray, m: np.ndarray, v: np.ndarray,
              t: int, lr: float, beta1: float, beta2: float, eps: float) -> None:
    """One bias-corrected Adam update, in place (m, v, data)."""
    m += (1.0 - beta1) * (grad - m)
    v += (1.0 - beta2) * (grad * grad - v)
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    data -= lr * m_hat / (np.sqrt(v_hat) + eps)


def sgd_step(data: np.ndarray, grad: np.ndarray, lr: float,
             momentum: float = 0.0, buf: np.ndarray | None = None) -> None:
    if momentum and buf is not None:
        buf *= momentum
        buf += grad
        data -= lr * buf
    else:
        data -= lr * grad


class Adam:
    def __init__(self, params: list[Parameter], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = [p for p in params if p.trainable]
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.t += 1
        for p, m, v in zip(self.params, self._m, self._v):
            if p.grad is None:
                continue
            adam_step(p.data, p.grad, m, v, self.t,
                      self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self):
        for p in self.params:
            p.tensor.zero_grad()


class SGD:
    def __init__(self, params: list[Parameter], lr: float = 1e-2, momentum: float = 0.0):
        self.params = [p for p in params if p.trainable]
        self.lr, self.momentum = lr, momentum
        self._buf = [np.zeros_like(p.data) for p in self.params] if momentum else None

    def step(self):
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            buf = self._buf[i] if self._buf is not None else None
            sgd_step(p.data, p.grad, self.lr, self.momentum, buf)

    def zero_grad(self):
        for p in self.params:
            p.tensor.zero_grad()
