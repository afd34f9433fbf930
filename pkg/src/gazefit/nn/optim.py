"""Adam optimiser with bias correction and a hard non-finite gradient guard."""

from __future__ import annotations

import numpy as np

from .tensor import Parameter

__all__ = ["Adam", "AdamState", "NonFiniteGradient", "adam_step"]


class NonFiniteGradient(FloatingPointError):
    """Raised when a gradient contains NaN or infinity; names the parameter."""


class AdamState:
    """First/second moment buffers plus the shared step counter."""

    def __init__(self, params: list[Parameter]):
        self.m = {p.name: np.zeros_like(p.data) for p in params}
        self.v = {p.name: np.zeros_like(p.data) for p in params}
        self.t = 0


def adam_step(
    params: list[Parameter],
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One in-place Adam update over every trainable parameter with a gradient."""
    state.t += 1
    t = state.t
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for p in params:
        if not p.trainable:
            continue
        g = p.grad
        if g is None:
            continue
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient in parameter '{p.name}'")
        m = state.m[p.name]
        v = state.v[p.name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p.data -= (lr * (m / bc1) / (np.sqrt(v / bc2) + eps)).astype(p.data.dtype, copy=False)


class Adam:
    """Convenience wrapper binding parameters, hyperparameters and state."""

    def __init__(self, params: list[Parameter], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState(params)

    def step(self) -> None:
        adam_step(self.params, self.state, self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
