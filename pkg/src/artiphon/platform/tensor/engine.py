"""
Reverse-mode automatic differentiation over numpy arrays.

A ``Tape`` records every operation whose inputs need gradients while it is
the active tape. Nodes are appended as they are created, so the record is
already in topological order and ``backward`` is one reversed sweep.

Example:
    >>> w = Parameter(np.array([1.0, -2.0]), name="w")
    >>> with Tape() as tape:
    ...     loss = (w * w).sum()
    ...     tape.backward(loss)
    >>> w.grad
    array([ 2., -4.])
"""

from contextlib import contextmanager
from contextvars import ContextVar
from typing import Any, Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from artiphon.core.config import settings
from artiphon.core.exceptions import NotScalarError, NumericError, StaleTapeError

# Backward rule: upstream gradient -> one gradient (or None) per parent.
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_ACTIVE_TAPE: ContextVar[Optional["Tape"]] = ContextVar("artiphon_active_tape", default=None)

_state = {
    "dtype": np.dtype(settings.precision),
    "debug_numerics": settings.debug_numerics,
}


def default_dtype() -> np.dtype:
    return _state["dtype"]


def set_precision(precision: str) -> None:
    """Switch the dtype used for new tensors ("float64" or "float32")."""
    _state["dtype"] = np.dtype(precision)


def set_debug_numerics(enabled: bool) -> None:
    """Toggle the NaN/Inf check on every forward op."""
    _state["debug_numerics"] = bool(enabled)


class Tensor:
    """
    Dense array with an optional gradient.

    Attributes:
        data: Value as a numpy array in the default precision
        grad: Accumulated gradient after backward, or None
        requires_grad: Whether operations on this tensor are recorded
    """

    # numpy defers mixed arithmetic to Tensor operators
    __array_ufunc__ = None

    def __init__(self, data: Any, requires_grad: bool = False, name: Optional[str] = None):
        self.data: np.ndarray = np.asarray(data, dtype=default_dtype())
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self.op = ""
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None
        self._tape: Optional["Tape"] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise NotScalarError(self.shape)
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        """Same values, cut from the tape."""
        return Tensor(self.data)

    def accumulate(self, grad: np.ndarray) -> None:
        if grad.shape != self.data.shape:
            grad = np.broadcast_to(grad, self.data.shape)
        self.grad = grad.copy() if self.grad is None else self.grad + grad

    def __len__(self) -> int:
        return int(self.data.shape[0])

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    """
    Trainable tensor with a gradient accumulator and AdamW moment slots.

    Frozen parameters do not require gradients, so nothing that depends
    only on them is ever recorded.
    """

    def __init__(self, data: Any, name: Optional[str] = None, frozen: bool = False):
        super().__init__(data, requires_grad=not frozen, name=name)
        self.m: Optional[np.ndarray] = None
        self.v: Optional[np.ndarray] = None

    @property
    def frozen(self) -> bool:
        return not self.requires_grad

    def freeze(self) -> None:
        self.requires_grad = False

    def unfreeze(self) -> None:
        self.requires_grad = True

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def assign(self, value: np.ndarray) -> None:
        """Replace the value in place, checking the shape."""
        value = np.asarray(value, dtype=default_dtype())
        if value.shape != self.data.shape:
            raise NumericError(
                f"Cannot assign shape {value.shape} to parameter {self.name} of shape {self.data.shape}"
            )
        self.data = value.copy()


class Tape:
    """
    Record of differentiable operations.

    Use as a context manager to make it the active tape. A tape can run
    ``backward`` once; replaying it raises StaleTapeError.
    """

    def __init__(self) -> None:
        self._nodes: List[Tensor] = []
        self._consumed = False
        self._token: Any = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc: Any) -> None:
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def consumed(self) -> bool:
        return self._consumed

    def record(self, node: Tensor) -> None:
        if self._consumed:
            raise StaleTapeError("Cannot record onto a tape that already ran backward")
        node._tape = self
        self._nodes.append(node)

    def backward(self, loss: Tensor) -> None:
        """
        Propagate d(loss)/d(node) to every recorded node and leaf.

        Raises:
            StaleTapeError: The tape already ran backward
            NotScalarError: ``loss`` has more than one element
            NumericError: ``loss`` was not recorded on this tape
        """
        if self._consumed:
            raise StaleTapeError()
        if loss.data.size != 1:
            raise NotScalarError(loss.shape)
        if loss._tape is not self:
            raise NumericError("Loss was not recorded on this tape", details={"op": loss.op})

        self._consumed = True
        loss.grad = np.ones_like(loss.data)
        for node in reversed(self._nodes):
            if node.grad is None or node._backward is None:
                continue
            grads = node._backward(node.grad)
            for parent, grad in zip(node._parents, grads):
                if grad is not None and parent.requires_grad:
                    parent.accumulate(grad)

        # drop closures so intermediate arrays can be collected
        for node in self._nodes:
            node._backward = None
            node._parents = ()


def active_tape() -> Optional[Tape]:
    return _ACTIVE_TAPE.get()


@contextmanager
def no_grad() -> Iterator[None]:
    """Run without recording, e.g. for evaluation."""
    token = _ACTIVE_TAPE.set(None)
    try:
        yield
    finally:
        _ACTIVE_TAPE.reset(token)


def make_node(data: np.ndarray, parents: Sequence[Tensor], backward: BackwardFn, op: str) -> Tensor:
    """
    Wrap an op result, recording it when a tape is active and a parent
    needs gradients.
    """
    out = Tensor(data)
    out.op = op
    if _state["debug_numerics"] and not np.all(np.isfinite(out.data)):
        raise NumericError(f"Non-finite output from {op}", details={"op": op, "shape": out.shape})

    tape = _ACTIVE_TAPE.get()
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
        tape.record(out)
    return out


def backward(tape: Tape, loss: Tensor, params: Sequence[Parameter] = ()) -> List[np.ndarray]:
    """
    Run ``tape.backward(loss)`` and return the gradients of ``params``.

    Parameters the loss does not reach get a zero gradient.
    """
    tape.backward(loss)
    return [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]
