"""Reverse-mode automatic differentiation over dense numpy arrays.

Values are row-major float32 by default; gradient checking promotes a copy of
the graph to float64 so finite differences stay meaningful. The graph is a
plain tape: every op records its parents and a closure that scatters the
output gradient back to them. Only the ops the three networks need exist.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Iterable, Sequence

import numpy as np


class ConfigError(ValueError):
    """Shape or configuration mismatch in a network definition."""


_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph construction inside the block (inference mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    """A node in the autodiff graph wrapping an ndarray."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data: np.ndarray, requires_grad: bool = False):
        self.data = data
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    # -- graph plumbing ------------------------------------------------------

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = g.astype(self.data.dtype, copy=True)
        else:
            self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Backpropagate from this node through the recorded tape."""
        if grad is None:
            if self.data.size != 1:
                raise ConfigError(f"backward() without gradient needs a scalar, got shape {self.data.shape}")
            grad = np.ones_like(self.data)
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(np.asarray(grad, dtype=self.data.dtype))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- operator sugar ------------------------------------------------------

    def __add__(self, other):
        return add(self, _as_tensor(other, self.dtype))

    def __sub__(self, other):
        return sub(self, _as_tensor(other, self.dtype))

    def __mul__(self, other):
        return mul(self, _as_tensor(other, self.dtype))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])


class Parameter(Tensor):
    """A named trainable leaf."""

    __slots__ = ("name", "trainable")

    def __init__(self, name: str, data: np.ndarray, trainable: bool = True):
        super().__init__(np.ascontiguousarray(data, dtype=np.float32), requires_grad=trainable)
        self.name = name
        self.trainable = trainable

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.data.shape})"


def tensor(data, dtype=np.float32, requires_grad: bool = False) -> Tensor:
    return Tensor(np.asarray(data, dtype=dtype), requires_grad=requires_grad)


def _as_tensor(x, dtype) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def make_op(data: np.ndarray, parents: Sequence[Tensor], backward_fn) -> Tensor:
    """Create an op output node; skips tape recording under no_grad()."""
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcasted gradient back to the original operand shape."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, s) in enumerate(zip(g.shape, shape)) if s == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# -- elementwise and structural ops -----------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    out = a.data + b.data

    def bwd(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.data.shape))

    return make_op(out, (a, b), bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    out = a.data - b.data

    def bwd(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.data.shape))

    return make_op(out, (a, b), bwd)


def neg(a: Tensor) -> Tensor:
    def bwd(g):
        if a.requires_grad:
            a._accumulate(-g)

    return make_op(-a.data, (a,), bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = a.data * b.data

    def bwd(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    return make_op(out, (a, b), bwd)


def scale(a: Tensor, c: float) -> Tensor:
    def bwd(g):
        if a.requires_grad:
            a._accumulate(g * c)

    return make_op(a.data * c, (a,), bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape[-1] != b.data.shape[0]:
        raise ConfigError(f"matmul inner dims disagree: {a.data.shape} @ {b.data.shape}")
    out = a.data @ b.data

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T if b.data.ndim == 2 else g * b.data)
        if b.requires_grad:
            if a.data.ndim == 2:
                b._accumulate(a.data.T @ g)
            else:
                b._accumulate(np.outer(a.data, g) if g.ndim == 1 else a.data.T @ g)

    return make_op(out, (a, b), bwd)


def reshape(a: Tensor, shape) -> Tensor:
    def bwd(g):
        if a.requires_grad:
            a._accumulate(g.reshape(a.data.shape))

    return make_op(a.data.reshape(shape), (a,), bwd)


def sum_axis(a: Tensor, axis: int, keepdims: bool = False) -> Tensor:
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bwd(g):
        if a.requires_grad:
            gg = g if keepdims else np.expand_dims(g, axis)
            a._accumulate(np.broadcast_to(gg, a.data.shape).astype(a.data.dtype))

    return make_op(out, (a,), bwd)


def mean_axes(a: Tensor, axes: tuple[int, ...]) -> Tensor:
    out = a.data.mean(axis=axes)
    n = 1
    for ax in axes:
        n *= a.data.shape[ax]

    def bwd(g):
        if a.requires_grad:
            gg = np.expand_dims(g, axes) / n
            a._accumulate(np.broadcast_to(gg, a.data.shape).astype(a.data.dtype))

    return make_op(out, (a,), bwd)


def mean_all(a: Tensor) -> Tensor:
    n = a.data.size

    def bwd(g):
        if a.requires_grad:
            a._accumulate(np.full(a.data.shape, g / n, dtype=a.data.dtype))

    return make_op(np.asarray(a.data.mean(), dtype=a.data.dtype), (a,), bwd)


def take_step(a: Tensor, t: int) -> Tensor:
    """Slice step t from a (N, T, D) sequence -> (N, D)."""

    def bwd(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[:, t, :] = g
            a._accumulate(full)

    return make_op(np.ascontiguousarray(a.data[:, t, :]), (a,), bwd)


def stack_steps(steps: list[Tensor]) -> Tensor:
    """Stack T tensors of (N, D) into (N, T, D)."""
    out = np.stack([s.data for s in steps], axis=1)

    def bwd(g):
        for t, s in enumerate(steps):
            if s.requires_grad:
                s._accumulate(np.ascontiguousarray(g[:, t, :]))

    return make_op(out, tuple(steps), bwd)


# -- nonlinearities ----------------------------------------------------------


def relu(a: Tensor) -> Tensor:
    out = np.maximum(a.data, 0)

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g * (a.data > 0))

    return make_op(out, (a,), bwd)


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g * out * (1.0 - out))

    return make_op(out, (a,), bwd)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g * (1.0 - out * out))

    return make_op(out, (a,), bwd)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    x = a.data
    m = x.max(axis=axis, keepdims=True)
    e = np.exp(x - m)
    out = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        if a.requires_grad:
            dot = (g * out).sum(axis=axis, keepdims=True)
            a._accumulate(out * (g - dot))

    return make_op(out, (a,), bwd)


def check_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {name}")
