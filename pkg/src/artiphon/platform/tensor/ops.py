"""
Differentiable operations.

Every op computes its forward value with numpy and hands ``make_node`` a
closure mapping the upstream gradient to one gradient per input. Binary
ops broadcast like numpy; their gradients are summed back to input shape.
Arithmetic operators on Tensor are bound at the bottom of this module.
"""

import math
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np

from artiphon.core.exceptions import ShapeMismatchError
from artiphon.platform.tensor.engine import Tensor, make_node

Operand = Union[Tensor, np.ndarray, float, int]
Axis = Optional[Union[int, Tuple[int, ...]]]

_GELU_K = math.sqrt(2.0 / math.pi)
_GELU_C = 0.044715


def as_tensor(x: Operand) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatchError(f"{op}: cannot broadcast {a.shape} with {b.shape}") from None


# Elementwise arithmetic


def add(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")
    return make_node(
        a.data + b.data,
        (a, b),
        lambda g: (unbroadcast(g, a.shape), unbroadcast(g, b.shape)),
        "add",
    )


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "sub")
    return make_node(
        a.data - b.data,
        (a, b),
        lambda g: (unbroadcast(g, a.shape), unbroadcast(-g, b.shape)),
        "sub",
    )


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")
    return make_node(
        a.data * b.data,
        (a, b),
        lambda g: (unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)),
        "mul",
    )


def div(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "div")
    out = a.data / b.data
    return make_node(
        out,
        (a, b),
        lambda g: (unbroadcast(g / b.data, a.shape), unbroadcast(-g * out / b.data, b.shape)),
        "div",
    )


def neg(a: Tensor) -> Tensor:
    return make_node(-a.data, (a,), lambda g: (-g,), "neg")


def power(a: Tensor, exponent: float) -> Tensor:
    """Elementwise ``a ** exponent`` for a constant exponent."""
    return make_node(
        a.data**exponent,
        (a,),
        lambda g: (g * exponent * a.data ** (exponent - 1),),
        "pow",
    )


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return make_node(out, (a,), lambda g: (g * out,), "exp")


def log(a: Tensor) -> Tensor:
    return make_node(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return make_node(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def maximum(a: Tensor, floor: float) -> Tensor:
    """Elementwise max(a, floor); the gradient passes where a > floor."""
    keep = a.data > floor
    return make_node(np.where(keep, a.data, floor), (a,), lambda g: (g * keep,), "maximum")


def relu(a: Tensor) -> Tensor:
    return maximum(a, 0.0)


def gelu(a: Tensor) -> Tensor:
    """GELU, tanh approximation."""
    x = a.data
    inner = _GELU_K * (x + _GELU_C * x**3)
    t = np.tanh(inner)
    out = 0.5 * x * (1.0 + t)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        d_inner = _GELU_K * (1.0 + 3.0 * _GELU_C * x * x)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner),)

    return make_node(out, (a,), backward, "gelu")


# Linear algebra and shape


def matmul(a: Operand, b: Operand) -> Tensor:
    """
    Matrix product over the last two axes; leading axes broadcast.

    Raises:
        ShapeMismatchError: Inner dimensions disagree or an operand is 1-D
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatchError(f"matmul: incompatible shapes {a.shape} @ {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeMismatchError(f"matmul: batch shapes {a.shape} and {b.shape} do not broadcast") from None

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        da = g @ np.swapaxes(b.data, -1, -2)
        db = np.swapaxes(a.data, -1, -2) @ g
        return unbroadcast(da, a.shape), unbroadcast(db, b.shape)

    return make_node(a.data @ b.data, (a, b), backward, "matmul")


def reshape(a: Tensor, shape: Tuple[int, ...]) -> Tensor:
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeMismatchError(f"reshape: cannot view {a.shape} as {shape}") from None
    return make_node(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    axes = tuple(range(a.ndim))[::-1] if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return make_node(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),), "transpose")


def swapaxes(a: Tensor, axis1: int, axis2: int) -> Tensor:
    axes = list(range(a.ndim))
    axes[axis1], axes[axis2] = axes[axis2], axes[axis1]
    return transpose(a, axes)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeMismatchError(f"concat: {e}") from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return make_node(out, tensors, lambda g: np.split(g, bounds, axis=axis), "concat")


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if axis < 0:
        axis += tensors[0].ndim + 1
    expanded = [reshape(t, t.shape[:axis] + (1,) + t.shape[axis:]) for t in tensors]
    return concat(expanded, axis=axis)


def getitem(a: Tensor, index: Any) -> Tensor:
    """Basic or advanced indexing; repeated indices accumulate gradient."""

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        grad = np.zeros_like(a.data)
        np.add.at(grad, index, g)
        return (grad,)

    return make_node(a.data[index], (a,), backward, "getitem")


# Reductions


def _expand(g: np.ndarray, shape: Tuple[int, ...], axis: Axis, keepdims: bool) -> np.ndarray:
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)


def sum(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    return make_node(
        a.data.sum(axis=axis, keepdims=keepdims),
        (a,),
        lambda g: (_expand(g, a.shape, axis, keepdims),),
        "sum",
    )


def mean(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([a.shape[ax] for ax in axes]))
    return make_node(
        a.data.mean(axis=axis, keepdims=keepdims),
        (a,),
        lambda g: (_expand(g, a.shape, axis, keepdims) / count,),
        "mean",
    )


# Normalisation and probability


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    """Softmax with max-subtraction."""
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)
    return make_node(
        out,
        (a,),
        lambda g: (out * (g - (g * out).sum(axis=axis, keepdims=True)),),
        "softmax",
    )


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse
    probs = np.exp(out)
    return make_node(
        out,
        (a,),
        lambda g: (g - probs * g.sum(axis=axis, keepdims=True),),
        "log_softmax",
    )


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """
    Normalise the last axis to zero mean and unit variance, then scale and shift.
    """
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    x_hat = centered * inv_std
    out = x_hat * gain.data + bias.data

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        d_hat = g * gain.data
        dx = inv_std * (
            d_hat
            - d_hat.mean(axis=-1, keepdims=True)
            - x_hat * (d_hat * x_hat).mean(axis=-1, keepdims=True)
        )
        return dx, unbroadcast(g * x_hat, gain.shape), unbroadcast(g, bias.shape)

    return make_node(out, (x, gain, bias), backward, "layer_norm")


def cosine_similarity(u: Tensor, v: Tensor, axis: int = -1, eps: float = 1e-8) -> Tensor:
    """
    u·v / (max(‖u‖, eps)·max(‖v‖, eps)) along ``axis``; other axes broadcast.
    """
    _check_broadcast(u, v, "cosine_similarity")
    nu = np.sqrt((u.data * u.data).sum(axis=axis, keepdims=True))
    nv = np.sqrt((v.data * v.data).sum(axis=axis, keepdims=True))
    nu_c, nv_c = np.maximum(nu, eps), np.maximum(nv, eps)
    dot = (u.data * v.data).sum(axis=axis, keepdims=True)
    cos = dot / (nu_c * nv_c)

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        g = np.expand_dims(g, axis)
        du = g * (v.data / (nu_c * nv_c) - cos * (u.data / (nu_c * nu_c)) * (nu > eps))
        dv = g * (u.data / (nu_c * nv_c) - cos * (v.data / (nv_c * nv_c)) * (nv > eps))
        return unbroadcast(du, u.shape), unbroadcast(dv, v.shape)

    return make_node(np.squeeze(cos, axis=axis), (u, v), backward, "cosine_similarity")


# Stochastic and structural


def dropout(a: Tensor, rate: float, key: Sequence[int], training: bool = True) -> Tensor:
    """
    Inverted dropout with a counter-based stream.

    The mask is drawn from ``np.random.default_rng(key)``, so it depends only
    on the key, typically (seed, step, layer). Identity at rate 0 or in eval.
    """
    if not training or rate <= 0.0:
        return a
    rng = np.random.default_rng([int(k) for k in key])
    scale = 1.0 / (1.0 - rate)
    mask = (rng.random(a.shape) >= rate) * scale
    return make_node(a.data * mask, (a,), lambda g: (g * mask,), "dropout")


def unfold1d(x: Tensor, kernel: int, stride: int) -> Tensor:
    """
    Sliding windows of a [B, C, L] signal as [B, L_out, C·kernel] rows.

    L_out = floor((L − kernel)/stride) + 1. Overlapping windows sum their
    gradients back into the signal.
    """
    if x.ndim != 3:
        raise ShapeMismatchError(f"unfold1d expects [B, C, L], got {x.shape}")
    batch, channels, length = x.shape
    if length < kernel:
        raise ShapeMismatchError(f"unfold1d: length {length} shorter than kernel {kernel}")
    n_out = (length - kernel) // stride + 1
    index = np.arange(n_out)[:, None] * stride + np.arange(kernel)[None, :]
    windows = x.data[:, :, index]  # [B, C, L_out, K]
    out = np.transpose(windows, (0, 2, 1, 3)).reshape(batch, n_out, channels * kernel)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        g = np.transpose(g.reshape(batch, n_out, channels, kernel), (0, 2, 1, 3))
        grad = np.zeros_like(x.data)
        np.add.at(grad, (slice(None), slice(None), index), g)
        return (grad,)

    return make_node(out, (x,), backward, "unfold1d")


def conv_output_length(length: int, kernel: int, stride: int) -> int:
    return (length - kernel) // stride + 1


def _rsub(a: Tensor, b: Operand) -> Tensor:
    return sub(b, a)


def _rdiv(a: Tensor, b: Operand) -> Tensor:
    return div(b, a)


def _rmatmul(a: Tensor, b: Operand) -> Tensor:
    return matmul(b, a)


def _bind_operators() -> None:
    Tensor.__add__ = add  # type: ignore[assignment]
    Tensor.__radd__ = add  # type: ignore[assignment]
    Tensor.__sub__ = sub  # type: ignore[assignment]
    Tensor.__rsub__ = _rsub  # type: ignore[assignment]
    Tensor.__mul__ = mul  # type: ignore[assignment]
    Tensor.__rmul__ = mul  # type: ignore[assignment]
    Tensor.__truediv__ = div  # type: ignore[assignment]
    Tensor.__rtruediv__ = _rdiv  # type: ignore[assignment]
    Tensor.__neg__ = neg  # type: ignore[assignment]
    Tensor.__pow__ = power  # type: ignore[assignment]
    Tensor.__matmul__ = matmul  # type: ignore[assignment]
    Tensor.__rmatmul__ = _rmatmul  # type: ignore[assignment]
    Tensor.__getitem__ = getitem  # type: ignore[assignment]
    Tensor.sum = sum  # type: ignore[attr-defined]
    Tensor.mean = mean  # type: ignore[attr-defined]
    Tensor.reshape = lambda self, *shape: reshape(  # type: ignore[attr-defined]
        self, shape[0] if len(shape) == 1 and isinstance(shape[0], tuple) else shape
    )
    Tensor.transpose = transpose  # type: ignore[attr-defined]
    Tensor.exp = exp  # type: ignore[attr-defined]
    Tensor.log = log  # type: ignore[attr-defined]
    Tensor.tanh = tanh  # type: ignore[attr-defined]


_bind_operators()

__all__: List[str] = [
    "add",
    "as_tensor",
    "concat",
    "conv_output_length",
    "cosine_similarity",
    "div",
    "dropout",
    "exp",
    "gelu",
    "getitem",
    "layer_norm",
    "log",
    "log_softmax",
    "matmul",
    "maximum",
    "mean",
    "mul",
    "neg",
    "power",
    "relu",
    "reshape",
    "softmax",
    "stack",
    "sub",
    "sum",
    "swapaxes",
    "tanh",
    "transpose",
    "unbroadcast",
    "unfold1d",
]
