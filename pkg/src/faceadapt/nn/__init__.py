from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import grad_check
from .ops import (
    add,
    concat,
    conv2d,
    dense,
    dropout,
    flatten,
    maxpool2,
    relu,
    scale,
    softmax,
    softmax_cross_entropy,
    weighted_sum,
)
from .optim import AdamState, LrSchedule, adam_step, triangular_lr
from .tensor import Tensor

__all__ = [
    "Tensor",
    "add",
    "concat",
    "conv2d",
    "dense",
    "dropout",
    "flatten",
    "maxpool2",
    "relu",
    "scale",
    "softmax",
    "softmax_cross_entropy",
    "weighted_sum",
    "AdamState",
    "LrSchedule",
    "adam_step",
    "triangular_lr",
    "grad_check",
    "load_checkpoint",
    "save_checkpoint",
]
