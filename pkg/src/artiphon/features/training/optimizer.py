"""
AdamW with decoupled weight decay.

    m_t = β1·m + (1 − β1)·g
    v_t = β2·v + (1 − β2)·g²
    w  ← w − lr·(m̂_t/(√v̂_t + ε) + wd·w)

Moment estimates live on the parameters themselves (``Parameter.m`` and
``Parameter.v``) so a model carries its optimizer state.
"""

from typing import Optional, Sequence

import numpy as np

from artiphon.core.exceptions import ShapeMismatchError
from artiphon.core.utils.validators import validate_number_range
from artiphon.platform.tensor import Parameter


def adamw_step(
    params: Sequence[Parameter],
    grads: Sequence[Optional[np.ndarray]],
    lr: float,
    weight_decay: float,
    t: int,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """
    Apply one AdamW update in place.

    Frozen parameters are skipped entirely, including weight decay and
    moment updates. A missing gradient counts as zero.

    Args:
        params: Parameters to update
        grads: One gradient per parameter
        lr: Learning rate
        weight_decay: Decoupled decay coefficient
        t: 1-based step number used for bias correction

    Raises:
        ShapeMismatchError: Lengths or a gradient shape disagree
        ValidationError: t < 1
    """
    if len(params) != len(grads):
        raise ShapeMismatchError(f"{len(params)} parameters but {len(grads)} gradients")
    validate_number_range(t, min_value=1, field_name="step number")

    correction1 = 1.0 - beta1**t
    correction2 = 1.0 - beta2**t
    for param, grad in zip(params, grads):
        if param.frozen:
            continue
        g = np.zeros_like(param.data) if grad is None else np.asarray(grad, dtype=param.data.dtype)
        if g.shape != param.data.shape:
            raise ShapeMismatchError(
                f"gradient shape {g.shape} does not match parameter {param.name} {param.data.shape}"
            )
        if param.m is None or param.v is None:
            param.m = np.zeros_like(param.data)
            param.v = np.zeros_like(param.data)

        param.m = beta1 * param.m + (1.0 - beta1) * g
        param.v = beta2 * param.v + (1.0 - beta2) * g * g
        m_hat = param.m / correction1
        v_hat = param.v / correction2
        param.data = param.data - lr * (m_hat / (np.sqrt(v_hat) + eps) + weight_decay * param.data)


class AdamW:
    """Step counter plus hyperparameters around ``adamw_step``."""

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = 1e-4,
        weight_decay: float = 5e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if lr <= 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        self.params = list(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        self.t += 1
        adamw_step(
            self.params,
            [p.grad for p in self.params],
            self.lr,
            self.weight_decay,
            self.t,
            self.beta1,
            self.beta2,
            self.eps,
        )
