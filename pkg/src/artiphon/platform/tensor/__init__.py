"""
Tensor: numpy reverse-mode autodiff, differentiable ops, losses and layers.
"""

from artiphon.platform.tensor import ops
from artiphon.platform.tensor.engine import (
    Parameter,
    Tape,
    Tensor,
    active_tape,
    backward,
    default_dtype,
    no_grad,
    set_debug_numerics,
    set_precision,
)
from artiphon.platform.tensor.losses import weighted_cross_entropy

__all__ = [
    "ops",
    "Parameter",
    "Tape",
    "Tensor",
    "active_tape",
    "backward",
    "default_dtype",
    "no_grad",
    "set_debug_numerics",
    "set_precision",
    "weighted_cross_entropy",
]
