"""
Loss functions built from differentiable ops.
"""

import numpy as np

from artiphon.core.exceptions import EmptyBatchError, ShapeMismatchError
from artiphon.platform.tensor import ops
from artiphon.platform.tensor.engine import Tensor


def weighted_cross_entropy(
    logits: Tensor,
    labels: np.ndarray,
    weights: Tensor,
    mask: np.ndarray,
) -> Tensor:
    """
    Class-weighted, masked cross-entropy, normalised by the total weight.

        L = Σ_i m_i·w[y_i]·(−log softmax(z_i)[y_i]) / Σ_i m_i·w[y_i]

    Scaling every weight by the same factor leaves L unchanged; masked items
    contribute nothing.

    Args:
        logits: [B, C]
        labels: [B] integer class indices
        weights: [C] positive class weights (may require gradients)
        mask: [B] boolean, True for items that count

    Returns:
        Scalar tensor

    Raises:
        EmptyBatchError: No item is unmasked
        ShapeMismatchError: Inconsistent shapes or a label >= C
    """
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],) or mask.shape != labels.shape:
        raise ShapeMismatchError(
            f"cross-entropy expects logits [B, C], labels [B], mask [B]; "
            f"got {logits.shape}, {labels.shape}, {mask.shape}"
        )
    n_classes = logits.shape[1]
    if weights.shape != (n_classes,):
        raise ShapeMismatchError(f"weights must have shape ({n_classes},), got {weights.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ShapeMismatchError(f"labels must lie in [0, {n_classes})")
    if not mask.any():
        raise EmptyBatchError()

    log_probs = ops.log_softmax(logits, axis=-1)
    picked = log_probs[np.arange(labels.shape[0]), labels]
    item_weights = weights[labels] * mask.astype(np.float64)
    return -(item_weights * picked).sum() / item_weights.sum()
