"""
Neural-network layers on top of the autodiff engine.

Modules discover their parameters by walking attributes in definition
order, so parameter names (``vit.blocks.0.attn.qkv.weight``) and their
order are stable across runs.
"""

from contextlib import contextmanager
from contextvars import ContextVar
from typing import Any, Dict, Iterator, List, Mapping, Tuple

import numpy as np

from artiphon.core.exceptions import CheckpointError
from artiphon.platform.tensor import ops
from artiphon.platform.tensor.engine import Parameter, Tensor

INIT_STD = 0.02

_DROPOUT_STREAM: ContextVar[Tuple[int, int]] = ContextVar("artiphon_dropout_stream", default=(0, 0))


@contextmanager
def dropout_stream(seed: int, step: int) -> Iterator[None]:
    """Key dropout masks drawn inside the block by (seed, step)."""
    token = _DROPOUT_STREAM.set((int(seed), int(step)))
    try:
        yield
    finally:
        _DROPOUT_STREAM.reset(token)


def trunc_normal(rng: np.random.Generator, shape: Tuple[int, ...], std: float = INIT_STD) -> np.ndarray:
    """Normal(0, std) truncated at ±2·std by redrawing outliers."""
    values = rng.normal(0.0, std, size=shape)
    outside = np.abs(values) > 2 * std
    while outside.any():
        values[outside] = rng.normal(0.0, std, size=int(outside.sum()))
        outside = np.abs(values) > 2 * std
    return values


def sinusoidal_positions(length: int, dim: int) -> np.ndarray:
    """Fixed sine/cosine position table [length, dim]."""
    position = np.arange(length)[:, None]
    rate = np.exp(-np.log(10000.0) * (np.arange(0, dim, 2) / dim))
    table = np.zeros((length, dim))
    table[:, 0::2] = np.sin(position * rate)
    table[:, 1::2] = np.cos(position * rate[: dim // 2])
    return table


class Module:
    """Base class: parameter discovery, train/eval switching, state I/O."""

    training: bool = True

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        raise NotImplementedError

    def _children(self) -> Iterator[Tuple[str, Any]]:
        for name, value in vars(self).items():
            if isinstance(value, (Parameter, Module)):
                yield name, value
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, (Parameter, Module)):
                        yield f"{name}.{i}", item

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for name, child in self._children():
            if isinstance(child, Parameter):
                yield prefix + name, child
            else:
                yield from child.named_parameters(f"{prefix}{name}.")

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def modules(self) -> Iterator["Module"]:
        yield self
        for _, child in self._children():
            if isinstance(child, Module):
                yield from child.modules()

    def train(self, mode: bool = True) -> "Module":
        for module in self.modules():
            module.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def freeze(self) -> None:
        for p in self.parameters():
            p.freeze()

    def unfreeze(self) -> None:
        for p in self.parameters():
            p.unfreeze()

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: Mapping[str, np.ndarray], strict: bool = True) -> List[str]:
        """
        Copy values into matching parameters.

        Returns:
            Names that were loaded

        Raises:
            CheckpointError: Shape mismatch, or (strict) missing/unexpected names
        """
        own = dict(self.named_parameters())
        if strict:
            missing = sorted(set(own) - set(state))
            unexpected = sorted(set(state) - set(own))
            if missing or unexpected:
                raise CheckpointError(
                    "Checkpoint parameters do not match the model",
                    details={"missing": missing[:10], "unexpected": unexpected[:10]},
                )
        loaded = []
        for name, value in state.items():
            if name not in own:
                continue
            if tuple(value.shape) != own[name].shape:
                raise CheckpointError(
                    f"Parameter {name} has shape {tuple(value.shape)}, model expects {own[name].shape}"
                )
            own[name].assign(value)
            loaded.append(name)
        return loaded

    def assign_dropout_keys(self) -> None:
        """Number Dropout layers in traversal order for their mask streams."""
        for key, module in enumerate(m for m in self.modules() if isinstance(m, Dropout)):
            module.key = key


class Dropout(Module):
    def __init__(self, rate: float = 0.0):
        self.rate = rate
        self.key = 0

    def forward(self, x: Tensor) -> Tensor:
        seed, step = _DROPOUT_STREAM.get()
        return ops.dropout(x, self.rate, (seed, step, self.key), training=self.training)


class Linear(Module):
    """y = x·W + b with W of shape [in, out]."""

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        rng: np.random.Generator,
        bias: bool = True,
        zero_init: bool = False,
    ):
        weight = np.zeros((in_dim, out_dim)) if zero_init else trunc_normal(rng, (in_dim, out_dim))
        self.weight = Parameter(weight)
        self.bias = Parameter(np.zeros(out_dim)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        y = ops.matmul(x, self.weight)
        return y + self.bias if self.bias is not None else y


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        self.gain = Parameter(np.ones(dim))
        self.bias = Parameter(np.zeros(dim))
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gain, self.bias, self.eps)


class MLP(Module):
    """Linear → GELU → Linear, with dropout after each linear map."""

    def __init__(
        self,
        in_dim: int,
        hidden_dim: int,
        out_dim: int,
        rng: np.random.Generator,
        dropout: float = 0.0,
    ):
        self.fc1 = Linear(in_dim, hidden_dim, rng)
        self.fc2 = Linear(hidden_dim, out_dim, rng)
        self.drop1 = Dropout(dropout)
        self.drop2 = Dropout(dropout)

    def forward(self, x: Tensor) -> Tensor:
        return self.drop2(self.fc2(self.drop1(ops.gelu(self.fc1(x)))))


class MultiHeadSelfAttention(Module):
    """Scaled dot-product self-attention over [B, N, D] sequences."""

    def __init__(self, dim: int, heads: int, rng: np.random.Generator, dropout: float = 0.0):
        if dim % heads:
            raise ValueError(f"dim {dim} is not divisible by heads {heads}")
        self.heads = heads
        self.head_dim = dim // heads
        self.scale = self.head_dim**-0.5
        self.qkv = Linear(dim, 3 * dim, rng)
        self.proj = Linear(dim, dim, rng)
        self.attn_drop = Dropout(dropout)
        self.proj_drop = Dropout(dropout)

    def forward(self, x: Tensor) -> Tensor:
        batch, tokens, dim = x.shape
        qkv = self.qkv(x).reshape(batch, tokens, 3, self.heads, self.head_dim)
        qkv = ops.transpose(qkv, (2, 0, 3, 1, 4))  # [3, B, H, N, Dh]
        q, k, v = qkv[0], qkv[1], qkv[2]

        scores = ops.matmul(q, ops.swapaxes(k, -1, -2)) * self.scale
        attention = self.attn_drop(ops.softmax(scores, axis=-1))
        out = ops.matmul(attention, v)  # [B, H, N, Dh]
        out = ops.transpose(out, (0, 2, 1, 3)).reshape(batch, tokens, dim)
        return self.proj_drop(self.proj(out))


class TransformerBlock(Module):
    """Pre-norm block: x + MHSA(LN(x)), then x + MLP(LN(x))."""

    def __init__(
        self,
        dim: int,
        heads: int,
        mlp_dim: int,
        rng: np.random.Generator,
        dropout: float = 0.0,
    ):
        self.norm1 = LayerNorm(dim)
        self.attn = MultiHeadSelfAttention(dim, heads, rng, dropout)
        self.norm2 = LayerNorm(dim)
        self.mlp = MLP(dim, mlp_dim, dim, rng, dropout)

    def forward(self, x: Tensor) -> Tensor:
        x = x + self.attn(self.norm1(x))
        return x + self.mlp(self.norm2(x))


class Conv1d(Module):
    """
    Strided 1-D convolution, [B, C_in, L] → [B, L_out, C_out] (channels last).
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel: int,
        stride: int,
        rng: np.random.Generator,
        bias: bool = True,
    ):
        self.kernel = kernel
        self.stride = stride
        fan_in = in_channels * kernel
        self.weight = Parameter(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, out_channels)))
        self.bias = Parameter(np.zeros(out_channels)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        y = ops.matmul(ops.unfold1d(x, self.kernel, self.stride), self.weight)
        return y + self.bias if self.bias is not None else y


def count_parameters(module: Module, trainable_only: bool = False) -> int:
    return int(
        np.sum([p.size for p in module.parameters() if p.requires_grad or not trainable_only])
    )


__all__ = [
    "Conv1d",
    "Dropout",
    "LayerNorm",
    "Linear",
    "MLP",
    "Module",
    "MultiHeadSelfAttention",
    "TransformerBlock",
    "count_parameters",
    "dropout_stream",
    "sinusoidal_positions",
    "trunc_normal",
]
