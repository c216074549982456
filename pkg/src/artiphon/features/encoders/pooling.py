"""
Attention pooling over a sequence of frame embeddings.
"""

import numpy as np

from artiphon.core.exceptions import ShapeMismatchError
from artiphon.platform.tensor import Parameter, Tensor, ops
from artiphon.platform.tensor.nn import Linear, Module, trunc_normal


class AttentionPool(Module):
    """
    s_t = qᵀ·tanh(M·h_t); output Σ_t softmax(s)_t · h_t.

    The output is a convex combination of the inputs, so a sequence of
    identical vectors pools to that vector.
    """

    def __init__(self, dim: int, rng: np.random.Generator):
        self.proj = Linear(dim, dim, rng, bias=False)
        self.query = Parameter(trunc_normal(rng, (dim, 1)))

    def weights(self, seq: Tensor) -> Tensor:
        """Pooling weights [B, T], summing to 1 over T."""
        if seq.ndim != 3 or seq.shape[1] < 1:
            raise ShapeMismatchError(f"attention pooling expects [B, T, D] with T >= 1, got {seq.shape}")
        batch, steps, _ = seq.shape
        scores = ops.matmul(ops.tanh(self.proj(seq)), self.query)  # [B, T, 1]
        return ops.softmax(scores, axis=1).reshape(batch, steps)

    def forward(self, seq: Tensor) -> Tensor:
        alpha = self.weights(seq)
        return ops.sum(seq * alpha.reshape(alpha.shape + (1,)), axis=1)
