"""Scalar training losses."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, make_op

__all__ = ["mse_loss", "bce_with_logits"]


def mse_loss(pred: Tensor, target: np.ndarray) -> Tensor:
    """Mean squared error over every element."""
    target = np.asarray(target, dtype=pred.data.dtype)
    diff = pred.data - target
    n = diff.size

    def bwd(g):
        if pred.requires_grad:
            pred._accumulate((2.0 / n) * g * diff)

    return make_op(np.asarray((diff * diff).mean(), dtype=pred.data.dtype), (pred,), bwd)


def bce_with_logits(logits: Tensor, target: np.ndarray) -> Tensor:
    """Mean binary cross-entropy computed from logits.

    Uses the stable form max(x,0) - x*t + log(1 + exp(-|x|)) so large
    logits of either sign never overflow.
    """
    target = np.asarray(target, dtype=logits.data.dtype)
    x = logits.data
    loss = np.maximum(x, 0.0) - x * target + np.log1p(np.exp(-np.abs(x)))
    n = x.size

    def bwd(g):
        if logits.requires_grad:
            sig = 1.0 / (1.0 + np.exp(-x))
            logits._accumulate((g / n) * (sig - target))

    return make_op(np.asarray(loss.mean(), dtype=x.dtype), (logits,), bwd)
