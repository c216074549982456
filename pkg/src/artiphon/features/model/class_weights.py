"""
Learnable class weights for the cross-entropy loss.

The weights are w = C·softmax(a): always positive and always summing to C,
so the loss cannot be lowered by shrinking every weight at once. The
logits start at log(1/frequency), making the initial weights proportional
to inverse class frequency.
"""

from typing import Optional

import numpy as np

from artiphon.platform.tensor import Parameter, Tensor, ops
from artiphon.platform.tensor.nn import Module


def inverse_frequency_prior(frequencies: np.ndarray) -> np.ndarray:
    """
    1/frequency per class.

    Classes with zero frequency borrow the smallest positive frequency; an
    all-zero vector gives a uniform prior.
    """
    freq = np.asarray(frequencies, dtype=np.float64)
    positive = freq[freq > 0]
    if positive.size == 0:
        return np.ones_like(freq)
    freq = np.where(freq > 0, freq, positive.min())
    return 1.0 / freq


class ClassWeights(Module):
    def __init__(self, n_classes: int, frequencies: Optional[np.ndarray] = None):
        self.n_classes = n_classes
        prior = inverse_frequency_prior(frequencies) if frequencies is not None else np.ones(n_classes)
        self.prior = prior
        log_prior = np.log(prior)
        self.logits = Parameter(log_prior - log_prior.mean())

    def forward(self) -> Tensor:
        return ops.softmax(self.logits, axis=-1) * float(self.n_classes)


def effective_class_weights(weights: ClassWeights) -> Tensor:
    """w = C·softmax(a), shape [C]."""
    return weights()
