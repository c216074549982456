"""
Training objectives: cross-modal cosine loss and the combined loss.
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from artiphon.core.exceptions import ShapeMismatchError
from artiphon.features.model.config import Negatives
from artiphon.platform.tensor import Tensor, ops, weighted_cross_entropy


class LossBreakdown(BaseModel):
    """Total loss tensor plus its components as floats for logging."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    total: Tensor
    loss_cls: float
    loss_cos: float


def contrastive_loss(
    img: Tensor,
    aud: Tensor,
    negatives: Negatives = Negatives.NONE,
    margin: float = 0.0,
) -> Tensor:
    """
    Cosine embedding loss between paired [B, T, D] sequences.

    Both modalities are flattened to [B, T·D]; the loss is
    mean_i(1 − cos(img_i, aud_i)). With in-batch negatives, the mean over
    i ≠ j of max(0, cos(img_i, aud_j) − margin) is added.

    Raises:
        ShapeMismatchError: The two inputs differ in shape or are not 3-D
    """
    if img.shape != aud.shape or img.ndim != 3:
        raise ShapeMismatchError(f"contrastive loss needs matching [B, T, D] inputs, got {img.shape} and {aud.shape}")
    batch = img.shape[0]
    u = img.reshape(batch, -1)
    v = aud.reshape(batch, -1)
    loss = ops.mean(1.0 - ops.cosine_similarity(u, v, axis=-1))

    if negatives == Negatives.IN_BATCH_MARGIN and batch > 1:
        width = u.shape[1]
        pairs = ops.cosine_similarity(u.reshape(batch, 1, width), v.reshape(1, batch, width), axis=-1)
        off_diagonal = 1.0 - np.eye(batch)
        hinge = ops.relu(pairs - margin) * off_diagonal
        loss = loss + ops.sum(hinge) / float(batch * (batch - 1))
    return loss


def total_loss(
    logits: Tensor,
    labels: np.ndarray,
    mask: np.ndarray,
    weights: Tensor,
    img: Optional[Tensor] = None,
    aud: Optional[Tensor] = None,
    contrastive_weight: float = 0.0,
    negatives: Negatives = Negatives.NONE,
    margin: float = 0.0,
) -> LossBreakdown:
    """
    L = L_cls + λ·L_cos.

    With λ = 0, or without both projections, the total is the weighted
    cross-entropy tensor itself and L_cos is reported as 0.
    """
    loss_cls = weighted_cross_entropy(logits, labels, weights, mask)
    if contrastive_weight == 0 or img is None or aud is None:
        return LossBreakdown(total=loss_cls, loss_cls=loss_cls.item(), loss_cos=0.0)
    loss_cos = contrastive_loss(img, aud, negatives, margin)
    total = loss_cls + loss_cos * float(contrastive_weight)
    return LossBreakdown(total=total, loss_cls=loss_cls.item(), loss_cos=loss_cos.item())
