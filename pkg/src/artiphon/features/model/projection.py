"""
Temporal projection used by the contrastive branch.
"""

import numpy as np

from artiphon.core.exceptions import ShapeMismatchError
from artiphon.platform.tensor import Tensor, ops
from artiphon.platform.tensor.nn import MLP, Linear, Module


class Projection(Module):
    """
    [B, N, D_in] → [B, T, D].

    A learned linear map over the token axis (N → T, applied to the
    transposed token matrix so every feature channel shares it), then a
    two-layer MLP over features (D_in → D → D) at every time step.
    """

    def __init__(self, n_tokens: int, steps: int, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.n_tokens = n_tokens
        self.token_map = Linear(n_tokens, steps, rng)
        self.mlp = MLP(in_dim, out_dim, out_dim, rng)

    def forward(self, tokens: Tensor) -> Tensor:
        if tokens.ndim != 3 or tokens.shape[1] != self.n_tokens:
            raise ShapeMismatchError(
                f"projection expects [B, {self.n_tokens}, D], got {tokens.shape}"
            )
        mapped = self.token_map(ops.swapaxes(tokens, 1, 2))  # [B, D_in, T]
        return self.mlp(ops.swapaxes(mapped, 1, 2))
