"""Reverse-mode automatic differentiation on dense float64 tensors.

A ``Tensor`` wraps a numpy array and, when an operation involves at least one
tensor with ``requires_grad``, records the operation on an implicit tape (the
``_parents`` graph plus a ``_backward`` closure per node). Calling
``backward()`` on a scalar result walks the tape once in reverse topological
order and accumulates gradients into the participating leaves.

Tensors are immutable values and safe to share across threads; a tape belongs
to a single forward pass and is not thread-safe. Every operation validates
that its result is finite and raises :class:`NonFiniteError` otherwise, so
NaN/Inf never propagate silently.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .exceptions import NonFiniteError

__all__ = [
    "Tensor",
    "as_tensor",
    "concat",
    "matmul",
    "sigmoid",
    "softplus",
    "tanh",
]


def _ensure_finite(data: np.ndarray, ctx: str) -> None:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"non-finite values produced by {ctx}")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """Dense float64 tensor participating in reverse-mode autodiff."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        _ensure_finite(arr, "tensor construction")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def _from_op(data: np.ndarray, parents: Sequence["Tensor"], backward, ctx: str) -> "Tensor":
        _ensure_finite(data, ctx)
        out = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        tracked = tuple(p for p in parents if p.requires_grad or p._parents)
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = tracked
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    def item(self) -> float:
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def grad_array(self) -> np.ndarray:
        """Gradient as an array; leaves never reached by backward get zeros."""
        if self.grad is None:
            return np.zeros_like(self.data)
        return self.grad

    # -- backward pass ---------------------------------------------------------

    def backward(self) -> None:
        """Backpropagate from this scalar through the recorded tape.

        Visits each node exactly once in reverse topological order. Raises
        ``ValueError`` if called on a non-scalar. Tapes are single-use:
        leaf gradients accumulate across calls, so clear them (``zero_grad``)
        before reusing leaves in a new forward pass.
        """
        if self.data.size != 1:
            raise ValueError(f"backward() requires a scalar root, got shape {self.data.shape}")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = grad if grad.flags.writeable else np.array(grad)
        else:
            self.grad = self.grad + grad

    # -- elementwise arithmetic -------------------------------------------------

    def __add__(self, other) -> "Tensor":
        other = as_tensor(other)
        data = self.data + other.data

        def backward(g):
            if self.requires_grad or self._parents:
                self._accumulate(_unbroadcast(g, self.data.shape))
            if other.requires_grad or other._parents:
                other._accumulate(_unbroadcast(g, other.data.shape))

        return Tensor._from_op(data, (self, other), backward, "add")

    __radd__ = __add__

    def __sub__(self, other) -> "Tensor":
        other = as_tensor(other)
        data = self.data - other.data

        def backward(g):
            if self.requires_grad or self._parents:
                self._accumulate(_unbroadcast(g, self.data.shape))
            if other.requires_grad or other._parents:
                other._accumulate(_unbroadcast(-g, other.data.shape))

        return Tensor._from_op(data, (self, other), backward, "sub")

    def __rsub__(self, other) -> "Tensor":
        return as_tensor(other) - self

    def __mul__(self, other) -> "Tensor":
        other = as_tensor(other)
        data = self.data * other.data

        def backward(g):
            if self.requires_grad or self._parents:
                self._accumulate(_unbroadcast(g * other.data, self.data.shape))
            if other.requires_grad or other._parents:
                other._accumulate(_unbroadcast(g * self.data, other.data.shape))

        return Tensor._from_op(data, (self, other), backward, "mul")

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = as_tensor(other)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            data = self.data / other.data

        def backward(g):
            if self.requires_grad or self._parents:
                self._accumulate(_unbroadcast(g / other.data, self.data.shape))
            if other.requires_grad or other._parents:
                other._accumulate(_unbroadcast(-g * self.data / (other.data * other.data), other.data.shape))

        return Tensor._from_op(data, (self, other), backward, "div")

    def __rtruediv__(self, other) -> "Tensor":
        return as_tensor(other) / self

    def __neg__(self) -> "Tensor":
        data = -self.data

        def backward(g):
            self._accumulate(-g)

        return Tensor._from_op(data, (self,), backward, "neg")

    def __pow__(self, exponent: float) -> "Tensor":
        if not isinstance(exponent, (int, float)):
            raise TypeError("exponent must be a plain number")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            data = self.data ** exponent

        def backward(g):
            self._accumulate(g * exponent * self.data ** (exponent - 1))

        return Tensor._from_op(data, (self,), backward, f"pow({exponent})")

    def __matmul__(self, other) -> "Tensor":
        return matmul(self, other)

    # -- reductions ---------------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        data = self.data.sum(axis=axis, keepdims=keepdims)

        def backward(g):
            if axis is None:
                self._accumulate(np.broadcast_to(g.reshape((1,) * self.data.ndim), self.data.shape))
                return
            if not keepdims:
                axes = axis if isinstance(axis, tuple) else (axis,)
                g = np.expand_dims(g, axes)
            self._accumulate(np.broadcast_to(g, self.data.shape))

        return Tensor._from_op(data, (self,), backward, "sum")

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        if axis is None:
            count = self.data.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            count = int(np.prod([self.data.shape[a] for a in axes]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    # -- shape manipulation ---------------------------------------------------------

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        data = self.data.reshape(shape)

        def backward(g):
            self._accumulate(g.reshape(self.data.shape))

        return Tensor._from_op(data, (self,), backward, "reshape")

    def transpose(self, axes: Sequence[int]) -> "Tensor":
        axes = tuple(axes)
        data = self.data.transpose(axes)
        inverse = tuple(np.argsort(axes))

        def backward(g):
            self._accumulate(g.transpose(inverse))

        return Tensor._from_op(data, (self,), backward, "transpose")

    def broadcast_to(self, shape: Sequence[int]) -> "Tensor":
        shape = tuple(shape)
        data = np.broadcast_to(self.data, shape)

        def backward(g):
            self._accumulate(_unbroadcast(g, self.data.shape))

        return Tensor._from_op(data, (self,), backward, "broadcast_to")

    def __getitem__(self, key) -> "Tensor":
        data = self.data[key]

        def backward(g):
            full = np.zeros_like(self.data)
            np.add.at(full, key, g)
            self._accumulate(full)

        return Tensor._from_op(data, (self,), backward, "getitem")

    def take_along(self, indices: np.ndarray, axis: int) -> "Tensor":
        """Gather entries along `axis` with integer `indices` (take_along_axis
        semantics; indices must broadcast against the data shape)."""
        idx = np.asarray(indices)
        data = np.take_along_axis(self.data, idx, axis=axis)
        expanded = np.broadcast_to(idx, data.shape)

        def backward(g):
            full = np.zeros_like(self.data)
            grids = list(np.meshgrid(*[np.arange(n) for n in g.shape], indexing="ij"))
            grids[axis] = np.broadcast_to(expanded, g.shape)
            np.add.at(full, tuple(grids), g)
            self._accumulate(full)

        return Tensor._from_op(data, (self,), backward, "take_along")

    # -- elementwise nonlinearities ---------------------------------------------------

    def exp(self) -> "Tensor":
        with np.errstate(over="ignore"):
            data = np.exp(self.data)

        def backward(g):
            self._accumulate(g * data)

        return Tensor._from_op(data, (self,), backward, "exp")

    def log(self) -> "Tensor":
        with np.errstate(divide="ignore", invalid="ignore"):
            data = np.log(self.data)

        def backward(g):
            self._accumulate(g / self.data)

        return Tensor._from_op(data, (self,), backward, "log")

    def sqrt(self) -> "Tensor":
        with np.errstate(invalid="ignore"):
            data = np.sqrt(self.data)

        def backward(g):
            self._accumulate(g * 0.5 / data)

        return Tensor._from_op(data, (self,), backward, "sqrt")

    def tanh(self) -> "Tensor":
        data = np.tanh(self.data)

        def backward(g):
            self._accumulate(g * (1.0 - data * data))

        return Tensor._from_op(data, (self,), backward, "tanh")

    def sigmoid(self) -> "Tensor":
        x = self.data
        data = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))

        def backward(g):
            self._accumulate(g * data * (1.0 - data))

        return Tensor._from_op(data, (self,), backward, "sigmoid")

    def softplus(self) -> "Tensor":
        data = np.logaddexp(0.0, self.data)
        sig = np.where(
            self.data >= 0,
            1.0 / (1.0 + np.exp(-np.abs(self.data))),
            np.exp(-np.abs(self.data)) / (1.0 + np.exp(-np.abs(self.data))),
        )

        def backward(g):
            self._accumulate(g * sig)

        return Tensor._from_op(data, (self,), backward, "softplus")

    def clip(self, lo: float, hi: float) -> "Tensor":
        """Clamp to [lo, hi]; gradient is zero outside the active range."""
        data = np.clip(self.data, lo, hi)
        mask = (self.data >= lo) & (self.data <= hi)

        def backward(g):
            self._accumulate(g * mask)

        return Tensor._from_op(data, (self,), backward, "clip")


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def matmul(a: Tensor, b) -> Tensor:
    """Matrix product with numpy broadcasting over leading batch dimensions.

    Both operands must have ndim >= 2; gradients are summed back down to the
    original shapes of any broadcast operand.
    """
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError("matmul operands must have at least 2 dimensions")
    data = np.matmul(a.data, b.data)

    def backward(g):
        if a.requires_grad or a._parents:
            ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
            a._accumulate(_unbroadcast(ga, a.data.shape))
        if b.requires_grad or b._parents:
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
            b._accumulate(_unbroadcast(gb, b.data.shape))

    return Tensor._from_op(data, (a, b), backward, "matmul")


def concat(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    if not parts:
        raise ValueError("concat needs at least one tensor")
    data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for part, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if part.requires_grad or part._parents:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                part._accumulate(g[tuple(sl)])

    return Tensor._from_op(data, parts, backward, "concat")


def sigmoid(x: Tensor) -> Tensor:
    """Logistic function, numerically stable for large |x|."""
    return as_tensor(x).sigmoid()


def tanh(x: Tensor) -> Tensor:
    return as_tensor(x).tanh()


def softplus(x: Tensor) -> Tensor:
    return as_tensor(x).softplus()
