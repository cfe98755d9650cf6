"""Minimal neural toolkit: layers, losses, Adam, gradient checking, checkpoints.

All training runs in float64; forward passes are pure functions of
(parameters, input). No framework dependency; backprop is hand-derived per
layer in `layers`.
"""

from vsearch.nn.checkpoint import (
    checkpoint_hash,
    encode_checkpoint,
    load_checkpoint,
    params_hash,
    save_checkpoint,
)
from vsearch.nn.gradcheck import GradientCheckReport, gradient_check
from vsearch.nn.layers import (
    BiLSTM,
    Conv1DMaxPool,
    Dense,
    Embedding,
    LSTM,
    Relu,
    conv_maxpool_backward,
    conv_maxpool_batch,
    conv_maxpool_forward,
    glorot_uniform,
    sigmoid,
)
from vsearch.nn.losses import (
    log_softmax,
    logsumexp,
    softmax,
    softmax_cross_entropy,
    softmax_cross_entropy_grad,
)
from vsearch.nn.optim import Adam

__all__ = [
    "Adam",
    "BiLSTM",
    "Conv1DMaxPool",
    "Dense",
    "Embedding",
    "GradientCheckReport",
    "LSTM",
    "Relu",
    "checkpoint_hash",
    "conv_maxpool_backward",
    "conv_maxpool_batch",
    "conv_maxpool_forward",
    "encode_checkpoint",
    "glorot_uniform",
    "gradient_check",
    "params_hash",
    "load_checkpoint",
    "log_softmax",
    "logsumexp",
    "save_checkpoint",
    "sigmoid",
    "softmax",
    "softmax_cross_entropy",
    "softmax_cross_entropy_grad",
]
