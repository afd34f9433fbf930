from .tensor import Tensor, Parameter, ConfigError, no_grad, tensor
from .layers import (
    BatchNorm,
    Conv2d,
    ConvTranspose2d,
    Dense,
    GRU,
    AttentionPool,
    conv2d,
    conv2d_transpose,
    dense,
    gap,
    batchnorm,
    relu,
    sigmoid,
    tanh,
)
from .losses import mse_loss, bce_with_logits
from .optim import Adam, AdamState, NonFiniteGradient
from .gradcheck import grad_check, GradCheckReport

__all__ = [
    "Tensor",
    "Parameter",
    "ConfigError",
    "no_grad",
    "tensor",
    "BatchNorm",
    "Conv2d",
    "ConvTranspose2d",
    "Dense",
    "GRU",
    "AttentionPool",
    "conv2d",
    "conv2d_transpose",
    "dense",
    "gap",
    "batchnorm",
    "relu",
    "sigmoid",
    "tanh",
    "mse_loss",
    "bce_with_logits",
    "Adam",
    "AdamState",
    "NonFiniteGradient",
    "grad_check",
    "GradCheckReport",
]
