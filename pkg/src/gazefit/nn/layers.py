"""Layer primitives: convolutions (zero-padded "same" geometry), batch norm,
dense, GRU and attention pooling, all channels-last and batch-first.

Convolution forward/backward share one im2col/col2im pair; the transposed
convolution is implemented literally as the adjoint of conv2d, so the
inner-product identity <conv(x), y> == <x, conv_T(y)> holds by construction.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .tensor import ConfigError, Parameter, Tensor, make_op, mean_axes, reshape
from .tensor import matmul, softmax, stack_steps, sum_axis, take_step
from .tensor import mul as t_mul
from .tensor import add as t_add
from .tensor import sub as t_sub
from .tensor import relu, sigmoid, tanh  # re-exported for model code

__all__ = [
    "conv2d",
    "conv2d_transpose",
    "dense",
    "gap",
    "batchnorm",
    "relu",
    "sigmoid",
    "tanh",
    "Conv2d",
    "ConvTranspose2d",
    "Dense",
    "BatchNorm",
    "GRU",
    "AttentionPool",
    "uniform_fan_in",
]


def uniform_fan_in(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


# -- convolution geometry -----------------------------------------------------


def _same_pads(size: int, k: int, stride: int) -> tuple[int, int, int]:
    if stride not in (1, 2):
        raise ConfigError(f"stride must be 1 or 2, got {stride}")
    if size % stride != 0:
        raise ConfigError(f"spatial size {size} not divisible by stride {stride}")
    out = size // stride
    total = max((out - 1) * stride + k - size, 0)
    beg = total // 2
    return beg, total - beg, out


def _im2col(xp: np.ndarray, k: int, stride: int, oh: int, ow: int) -> np.ndarray:
    """(N, Hp, Wp, C) -> (N*oh*ow, k*k*C) patch matrix."""
    n, _, _, c = xp.shape
    sn, sh, sw, sc = xp.strides
    view = as_strided(
        xp,
        shape=(n, oh, ow, k, k, c),
        strides=(sn, stride * sh, stride * sw, sh, sw, sc),
        writeable=False,
    )
    return view.reshape(n * oh * ow, k * k * c)


def _col2im(cols: np.ndarray, xp_shape: tuple[int, ...], k: int, stride: int, oh: int, ow: int) -> np.ndarray:
    """Scatter-add (N*oh*ow, k*k*C) patches back into a padded image."""
    n, hp, wp, c = xp_shape
    xp = np.zeros(xp_shape, dtype=cols.dtype)
    cols = cols.reshape(n, oh, ow, k, k, c)
    for i in range(k):
        for j in range(k):
            xp[:, i : i + stride * oh : stride, j : j + stride * ow : stride, :] += cols[:, :, :, i, j, :]
    return xp


def _pad(x: np.ndarray, pt: int, pb: int, pl: int, pr: int) -> np.ndarray:
    if pt == pb == pl == pr == 0:
        return x
    return np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))


def _conv_fwd(x: np.ndarray, w: np.ndarray, stride: int) -> np.ndarray:
    n, h, wd, cin = x.shape
    k = w.shape[0]
    pt, pb, oh = _same_pads(h, k, stride)
    pl, pr, ow = _same_pads(wd, k, stride)
    cols = _im2col(_pad(x, pt, pb, pl, pr), k, stride, oh, ow)
    y = cols @ w.reshape(k * k * cin, -1)
    return y.reshape(n, oh, ow, -1)


def _conv_bwd_x(gy: np.ndarray, w: np.ndarray, stride: int, x_shape: tuple[int, ...]) -> np.ndarray:
    n, h, wd, cin = x_shape
    k = w.shape[0]
    pt, pb, oh = _same_pads(h, k, stride)
    pl, pr, ow = _same_pads(wd, k, stride)
    gcols = gy.reshape(n * oh * ow, -1) @ w.reshape(k * k * cin, -1).T
    gxp = _col2im(gcols, (n, h + pt + pb, wd + pl + pr, cin), k, stride, oh, ow)
    return gxp[:, pt : pt + h, pl : pl + wd, :]


def _conv_bwd_w(x: np.ndarray, gy: np.ndarray, stride: int, k: int, cout: int) -> np.ndarray:
    n, h, wd, cin = x.shape
    pt, pb, oh = _same_pads(h, k, stride)
    pl, pr, ow = _same_pads(wd, k, stride)
    cols = _im2col(_pad(x, pt, pb, pl, pr), k, stride, oh, ow)
    gw = cols.T @ gy.reshape(n * oh * ow, cout)
    return gw.reshape(k, k, cin, cout)


def _with_batch(x: Tensor):
    if x.data.ndim == 3:
        return reshape(x, (1,) + x.data.shape), True
    if x.data.ndim != 4:
        raise ConfigError(f"conv input must be (H,W,C) or (N,H,W,C), got {x.data.shape}")
    return x, False


def conv2d(x: Tensor, kernels: Tensor, bias: Tensor | None, stride: int) -> Tensor:
    """Zero-padded "same" convolution: (N,H,W,Cin) -> (N,H/stride,W/stride,Cout)."""
    x, squeeze = _with_batch(x)
    k, k2, cin, cout = kernels.data.shape
    if k != k2:
        raise ConfigError(f"kernels must be square, got {kernels.data.shape}")
    if x.data.shape[3] != cin:
        raise ConfigError(f"conv2d channel mismatch: input {x.data.shape} vs kernels {kernels.data.shape}")
    y = _conv_fwd(x.data, kernels.data, stride)
    if bias is not None:
        y = y + bias.data

    x_shape = x.data.shape

    def bwd(g):
        if x.requires_grad:
            x._accumulate(_conv_bwd_x(g, kernels.data, stride, x_shape))
        if kernels.requires_grad:
            kernels._accumulate(_conv_bwd_w(x.data, g, stride, k, cout))
        if bias is not None and bias.requires_grad:
            bias._accumulate(g.sum(axis=(0, 1, 2)))

    parents = (x, kernels) if bias is None else (x, kernels, bias)
    out = make_op(y, parents, bwd)
    return reshape(out, out.data.shape[1:]) if squeeze else out


def conv2d_transpose(x: Tensor, kernels: Tensor, bias: Tensor | None, stride: int) -> Tensor:
    """Adjoint of conv2d: (N,h,w,Csrc) -> (N,h*stride,w*stride,Cdst).

    ``kernels`` has shape (k,k,Cdst,Csrc), i.e. the kernel tensor of the
    conv2d whose backward-data pass this op computes.
    """
    x, squeeze = _with_batch(x)
    k, k2, cdst, csrc = kernels.data.shape
    if k != k2:
        raise ConfigError(f"kernels must be square, got {kernels.data.shape}")
    if x.data.shape[3] != csrc:
        raise ConfigError(f"conv2d_transpose channel mismatch: input {x.data.shape} vs kernels {kernels.data.shape}")
    n, h, w, _ = x.data.shape
    big_shape = (n, h * stride, w * stride, cdst)
    y = _conv_bwd_x(x.data, kernels.data, stride, big_shape)
    if bias is not None:
        y = y + bias.data

    def bwd(g):
        if x.requires_grad:
            x._accumulate(_conv_fwd(g, kernels.data, stride))
        if kernels.requires_grad:
            kernels._accumulate(_conv_bwd_w(g, x.data, stride, k, csrc))
        if bias is not None and bias.requires_grad:
            bias._accumulate(g.sum(axis=(0, 1, 2)))

    parents = (x, kernels) if bias is None else (x, kernels, bias)
    out = make_op(y, parents, bwd)
    return reshape(out, out.data.shape[1:]) if squeeze else out


def dense(x: Tensor, weights: Tensor, bias: Tensor | None) -> Tensor:
    if x.data.shape[-1] != weights.data.shape[0]:
        raise ConfigError(f"dense shape mismatch: input {x.data.shape} vs weights {weights.data.shape}")
    y = matmul(x, weights)
    return t_add(y, bias) if bias is not None else y


def gap(x: Tensor) -> Tensor:
    """Global average pooling over the spatial axes."""
    if x.data.ndim == 4:
        return mean_axes(x, (1, 2))
    if x.data.ndim == 3:
        return mean_axes(x, (0, 1))
    raise ConfigError(f"gap expects (H,W,C) or (N,H,W,C), got {x.data.shape}")


# -- batch normalisation -------------------------------------------------------


def batchnorm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.9,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel batch norm over all leading axes; channels last.

    In training mode batch statistics normalise and the running statistics
    are updated in place; in inference mode only running statistics are used.
    """
    axes = tuple(range(x.data.ndim - 1))
    if training:
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        inv = 1.0 / np.sqrt(var + eps)
        xhat = (x.data - mu) * inv
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mu
        running_var *= momentum
        running_var += (1.0 - momentum) * var
        m = x.data.size // x.data.shape[-1]

        def bwd(g):
            if gamma.requires_grad:
                gamma._accumulate((g * xhat).sum(axis=axes))
            if beta.requires_grad:
                beta._accumulate(g.sum(axis=axes))
            if x.requires_grad:
                dxhat = g * gamma.data
                s1 = dxhat.sum(axis=axes)
                s2 = (dxhat * xhat).sum(axis=axes)
                x._accumulate((dxhat - s1 / m - xhat * (s2 / m)) * inv)

        y = gamma.data * xhat + beta.data
    else:
        inv = 1.0 / np.sqrt(running_var + eps)
        xhat = (x.data - running_mean) * inv

        def bwd(g):
            if gamma.requires_grad:
                gamma._accumulate((g * xhat).sum(axis=axes))
            if beta.requires_grad:
                beta._accumulate(g.sum(axis=axes))
            if x.requires_grad:
                x._accumulate(g * (gamma.data * inv))

        y = gamma.data * xhat + beta.data
    return make_op(y.astype(x.data.dtype, copy=False), (x, gamma, beta), bwd)


# -- layer objects --------------------------------------------------------------


class Conv2d:
    def __init__(self, name: str, cin: int, cout: int, k: int, stride: int, rng: np.random.Generator):
        fan_in = k * k * cin
        self.kernel = Parameter(f"{name}.kernel", uniform_fan_in(rng, (k, k, cin, cout), fan_in))
        self.bias = Parameter(f"{name}.bias", np.zeros(cout, dtype=np.float32))
        self.stride = stride

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.kernel, self.bias, self.stride)

    def params(self) -> list[Parameter]:
        return [self.kernel, self.bias]


class ConvTranspose2d:
    def __init__(self, name: str, csrc: int, cdst: int, k: int, stride: int, rng: np.random.Generator):
        fan_in = k * k * csrc
        self.kernel = Parameter(f"{name}.kernel", uniform_fan_in(rng, (k, k, cdst, csrc), fan_in))
        self.bias = Parameter(f"{name}.bias", np.zeros(cdst, dtype=np.float32))
        self.stride = stride

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d_transpose(x, self.kernel, self.bias, self.stride)

    def params(self) -> list[Parameter]:
        return [self.kernel, self.bias]


class Dense:
    def __init__(self, name: str, nin: int, nout: int, rng: np.random.Generator):
        self.weights = Parameter(f"{name}.weights", uniform_fan_in(rng, (nin, nout), nin))
        self.bias = Parameter(f"{name}.bias", np.zeros(nout, dtype=np.float32))

    def __call__(self, x: Tensor) -> Tensor:
        return dense(x, self.weights, self.bias)

    def params(self) -> list[Parameter]:
        return [self.weights, self.bias]


class BatchNorm:
    def __init__(self, name: str, channels: int, momentum: float = 0.9, eps: float = 1e-5):
        self.name = name
        self.gamma = Parameter(f"{name}.gamma", np.ones(channels, dtype=np.float32))
        self.beta = Parameter(f"{name}.beta", np.zeros(channels, dtype=np.float32))
        self.running_mean = np.zeros(channels, dtype=np.float32)
        self.running_var = np.ones(channels, dtype=np.float32)
        self.momentum = momentum
        self.eps = eps

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        return batchnorm(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            training, self.momentum, self.eps,
        )

    def params(self) -> list[Parameter]:
        return [self.gamma, self.beta]

    def state_tensors(self) -> dict[str, np.ndarray]:
        return {
            f"{self.name}.running_mean": self.running_mean,
            f"{self.name}.running_var": self.running_var,
        }

    def load_state(self, tensors: dict[str, np.ndarray]) -> None:
        self.running_mean = tensors[f"{self.name}.running_mean"].astype(np.float32).copy()
        self.running_var = tensors[f"{self.name}.running_var"].astype(np.float32).copy()


class GRU:
    """Single-layer gated recurrent unit returning the full hidden sequence.

    Update/reset-gate form with tanh candidate state:
        z_t = sig(x W_z + h U_z + b_z)
        r_t = sig(x W_r + h U_r + b_r)
        n_t = tanh(x W_n + (r_t * h) U_n + b_n)
        h_t = (1 - z_t) * n_t + z_t * h_{t-1},  h_0 = 0
    """

    def __init__(self, name: str, din: int, dh: int, rng: np.random.Generator):
        self.din = din
        self.dh = dh
        mk_in = lambda n: Parameter(f"{name}.{n}", uniform_fan_in(rng, (din, dh), din))
        mk_h = lambda n: Parameter(f"{name}.{n}", uniform_fan_in(rng, (dh, dh), dh))
        mk_b = lambda n: Parameter(f"{name}.{n}", np.zeros(dh, dtype=np.float32))
        self.w_z, self.w_r, self.w_n = mk_in("w_z"), mk_in("w_r"), mk_in("w_n")
        self.u_z, self.u_r, self.u_n = mk_h("u_z"), mk_h("u_r"), mk_h("u_n")
        self.b_z, self.b_r, self.b_n = mk_b("b_z"), mk_b("b_r"), mk_b("b_n")

    def __call__(self, x: Tensor) -> Tensor:
        n, t, din = x.data.shape
        if din != self.din:
            raise ConfigError(f"GRU expects input width {self.din}, got {din}")
        flat = reshape(x, (n * t, din))
        # input projections for the whole sequence in one GEMM each
        xz = reshape(t_add(matmul(flat, self.w_z), self.b_z), (n, t, self.dh))
        xr = reshape(t_add(matmul(flat, self.w_r), self.b_r), (n, t, self.dh))
        xn = reshape(t_add(matmul(flat, self.w_n), self.b_n), (n, t, self.dh))
        h = Tensor(np.zeros((n, self.dh), dtype=x.data.dtype))
        ones = Tensor(np.ones((n, self.dh), dtype=x.data.dtype))
        steps = []
        for i in range(t):
            z = sigmoid(t_add(take_step(xz, i), matmul(h, self.u_z)))
            r = sigmoid(t_add(take_step(xr, i), matmul(h, self.u_r)))
            cand = tanh(t_add(take_step(xn, i), matmul(t_mul(r, h), self.u_n)))
            h = t_add(t_mul(t_sub(ones, z), cand), t_mul(z, h))
            steps.append(h)
        return stack_steps(steps)

    def params(self) -> list[Parameter]:
        return [
            self.w_z, self.w_r, self.w_n,
            self.u_z, self.u_r, self.u_n,
            self.b_z, self.b_r, self.b_n,
        ]


class AttentionPool:
    """Tanh-score attention over time steps.

    M = tanh(H); alpha = softmax(M w); r = sum_t alpha_t h_t; output tanh(r).
    The most recent alpha is kept on the layer for reporting.
    """

    def __init__(self, name: str, dh: int, rng: np.random.Generator):
        self.dh = dh
        self.w = Parameter(f"{name}.w", uniform_fan_in(rng, (dh, 1), dh))
        self.last_alpha: np.ndarray | None = None

    def __call__(self, h: Tensor) -> Tensor:
        n, t, dh = h.data.shape
        m = tanh(h)
        scores = reshape(matmul(reshape(m, (n * t, dh)), self.w), (n, t))
        alpha = softmax(scores, axis=1)
        self.last_alpha = alpha.data.copy()
        weighted = t_mul(h, reshape(alpha, (n, t, 1)))
        return tanh(sum_axis(weighted, axis=1))

    def params(self) -> list[Parameter]:
        return [self.w]
