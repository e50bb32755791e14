"""Dense float64 tensors with a dynamic reverse-mode tape.

Every op returns a new ``Tensor``. When at least one input requires a gradient
and belongs to a ``Tape``, the result is recorded on that tape together with a
closure mapping the output gradient to one gradient per input.
"""

from __future__ import annotations

from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.special import expit, log_softmax as _log_softmax, softmax as _softmax

from errors import NonFiniteError, ShapeError, TapeError

ArrayLike = Union[np.ndarray, float, Sequence[float]]
GradFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    def __init__(self, data: ArrayLike, *, requires_grad: bool = False, name: str | None = None) -> None:
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self.grad: Optional[np.ndarray] = None
        self.tape: Optional[Tape] = None
        self._parents: Tuple[Tensor, ...] = ()
        self._grad_fn: Optional[GradFn] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError("item", self.shape)
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    def __add__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return mul(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


class Tape:
    """Records op nodes in creation order and owns the parameter registry."""

    def __init__(self) -> None:
        self._nodes: List[Tensor] = []
        self._params: Dict[str, Tensor] = {}

    def parameter(self, name: str, value: ArrayLike) -> Tensor:
        if name in self._params:
            raise TapeError(f"parameter {name!r} registered twice")
        tensor = Tensor(value, requires_grad=True, name=name)
        tensor.tape = self
        self._params[name] = tensor
        return tensor

    @property
    def parameters(self) -> Dict[str, Tensor]:
        return dict(self._params)

    def record(self, node: Tensor) -> None:
        self._nodes.append(node)

    def __len__(self) -> int:
        return len(self._nodes)

    def zero_grad(self) -> None:
        for node in self._nodes:
            node.grad = None
        for param in self._params.values():
            param.grad = None

    def backward(self, loss: Tensor) -> Dict[str, np.ndarray]:
        return backward(self, loss)


def backward(tape: Tape, loss: Tensor) -> Dict[str, np.ndarray]:
    """Accumulates d(loss)/d(parameter) for every registered parameter."""
    if not tape._nodes or loss.tape is not tape:
        raise TapeError("backward called before a forward pass was recorded on this tape")
    if loss.data.size != 1:
        raise TapeError(f"loss must be a scalar, got shape {loss.shape}")

    loss.grad = np.ones_like(loss.data)
    for node in reversed(tape._nodes):
        if node.grad is None or node._grad_fn is None:
            continue
        for parent, grad in zip(node._parents, node._grad_fn(node.grad)):
            if grad is None or not parent.requires_grad:
                continue
            if parent.grad is None:
                parent.grad = np.array(grad, dtype=np.float64, copy=True)
            else:
                parent.grad = parent.grad + grad

    return {
        name: (param.grad.copy() if param.grad is not None else np.zeros_like(param.data))
        for name, param in tape._params.items()
    }


def constant(value: ArrayLike) -> Tensor:
    return Tensor(value)


def _wrap(value: "Tensor | ArrayLike") -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _tape_of(parents: Iterable[Tensor]) -> Optional[Tape]:
    tape: Optional[Tape] = None
    for parent in parents:
        if parent.tape is None or not parent.requires_grad:
            continue
        if tape is not None and parent.tape is not tape:
            raise TapeError("op mixes tensors from different tapes")
        tape = parent.tape
    return tape


def _result(op: str, data: np.ndarray, parents: Tuple[Tensor, ...], grad_fn: GradFn) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(op)
    tape = _tape_of(parents)
    requires = tape is not None
    out = Tensor(data, requires_grad=requires, name=op)
    if requires:
        out.tape = tape
        out._parents = parents
        out._grad_fn = grad_fn
        tape.record(out)
    return out


def stop_gradient(t: Tensor) -> Tensor:
    """Forward identity that blocks every upstream gradient."""
    return Tensor(t.data, requires_grad=False, name="stop_gradient")


# Linear algebra -----------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)
    return _result(
        "matmul",
        a.data @ b.data,
        (a, b),
        lambda g: (g @ b.data.T, a.data.T @ g),
    )


def sparse_matmul(matrix: sparse.spmatrix, t: Tensor) -> Tensor:
    """Constant sparse matrix times tensor; gradient flows only into ``t``."""
    t = _wrap(t)
    if t.ndim != 2 or matrix.shape[1] != t.shape[0]:
        raise ShapeError("sparse_matmul", matrix.shape, t.shape)
    transposed = matrix.T.tocsr()
    return _result(
        "sparse_matmul",
        np.asarray(matrix @ t.data),
        (t,),
        lambda g: (np.asarray(transposed @ g),),
    )


def aggregation_matrix(index_lists: Sequence[Iterable[int]], n_cols: int) -> sparse.csr_matrix:
    """CSR matrix whose row i averages the rows listed in ``index_lists[i]``."""
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    for row, indices in enumerate(index_lists):
        indices = list(indices)
        if not indices:
            continue
        weight = 1.0 / len(indices)
        for col in indices:
            if not 0 <= col < n_cols:
                raise ShapeError("mean_rows", (row, col), (n_cols,))
            rows.append(row)
            cols.append(col)
            vals.append(weight)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(len(index_lists), n_cols), dtype=np.float64)


def mean_rows(t: Tensor, index_lists: Sequence[Iterable[int]]) -> Tensor:
    """Row i of the result is the mean of the listed rows of ``t``; empty lists give zeros."""
    t = _wrap(t)
    if t.ndim != 2:
        raise ShapeError("mean_rows", t.shape)
    return sparse_matmul(aggregation_matrix(index_lists, t.shape[0]), t)


# Elementwise --------------------------------------------------------------


def _broadcast_shapes(op: str, a: Tensor, b: Tensor) -> bool:
    """True when ``b`` is a row vector broadcast over the leading axis of ``a``."""
    if a.shape == b.shape:
        return False
    if a.ndim == 2 and b.ndim == 1 and b.shape[0] == a.shape[1]:
        return True
    raise ShapeError(op, a.shape, b.shape)


def add(a: Tensor, b: "Tensor | ArrayLike") -> Tensor:
    a, b = _wrap(a), _wrap(b)
    broadcast = _broadcast_shapes("add", a, b)
    return _result(
        "add",
        a.data + b.data,
        (a, b),
        lambda g: (g, g.sum(axis=0) if broadcast else g),
    )


def sub(a: Tensor, b: "Tensor | ArrayLike") -> Tensor:
    a, b = _wrap(a), _wrap(b)
    broadcast = _broadcast_shapes("sub", a, b)
    return _result(
        "sub",
        a.data - b.data,
        (a, b),
        lambda g: (g, -(g.sum(axis=0) if broadcast else g)),
    )


def mul(a: Tensor, b: "Tensor | ArrayLike") -> Tensor:
    """Elementwise product of equally shaped tensors."""
    a, b = _wrap(a), _wrap(b)
    if a.shape != b.shape:
        raise ShapeError("elementwise_mul", a.shape, b.shape)
    return _result(
        "elementwise_mul",
        a.data * b.data,
        (a, b),
        lambda g: (g * b.data, g * a.data),
    )


elementwise_mul = mul


def scale(t: Tensor, factor: float) -> Tensor:
    t = _wrap(t)
    return _result("scale", t.data * factor, (t,), lambda g: (g * factor,))


def square(t: Tensor) -> Tensor:
    t = _wrap(t)
    return _result("square", t.data * t.data, (t,), lambda g: (2.0 * t.data * g,))


def sigmoid(t: Tensor) -> Tensor:
    t = _wrap(t)
    out = expit(t.data)
    return _result("sigmoid", out, (t,), lambda g: (g * out * (1.0 - out),))


def tanh(t: Tensor) -> Tensor:
    t = _wrap(t)
    out = np.tanh(t.data)
    return _result("tanh", out, (t,), lambda g: (g * (1.0 - out * out),))


def relu(t: Tensor) -> Tensor:
    t = _wrap(t)
    active = t.data > 0.0
    return _result("relu", np.where(active, t.data, 0.0), (t,), lambda g: (g * active,))


# Shape manipulation -------------------------------------------------------


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = tuple(_wrap(t) for t in tensors)
    if not tensors:
        raise ShapeError("concat")
    if axis not in (-1, tensors[0].ndim - 1):
        raise ShapeError("concat", *(t.shape for t in tensors))
    leading = tensors[0].shape[:-1]
    if any(t.shape[:-1] != leading for t in tensors):
        raise ShapeError("concat", *(t.shape for t in tensors))
    bounds = np.cumsum([t.shape[-1] for t in tensors])[:-1]
    return _result(
        "concat",
        np.concatenate([t.data for t in tensors], axis=-1),
        tensors,
        lambda g: tuple(np.split(g, bounds, axis=-1)),
    )


def slice_chunk(t: Tensor, index: int, count: int) -> Tensor:
    """Chunk ``index`` of ``count`` equal chunks along the last axis."""
    t = _wrap(t)
    width = t.shape[-1]
    if count < 1 or width % count or not 0 <= index < count:
        raise ShapeError("slice_chunk", t.shape, (index, count))
    size = width // count
    lo, hi = index * size, (index + 1) * size

    def grad_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        full = np.zeros_like(t.data)
        full[..., lo:hi] = g
        return (full,)

    return _result("slice_chunk", t.data[..., lo:hi], (t,), grad_fn)


def take_rows(t: Tensor, rows: Sequence[int] | np.ndarray) -> Tensor:
    t = _wrap(t)
    index = np.asarray(rows, dtype=np.int64)
    if t.ndim < 1 or (index.size and (index.min() < 0 or index.max() >= t.shape[0])):
        raise ShapeError("take_rows", t.shape, index.shape)

    def grad_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        full = np.zeros_like(t.data)
        np.add.at(full, index, g)
        return (full,)

    return _result("take_rows", t.data[index], (t,), grad_fn)


# Reductions and probability -----------------------------------------------


def sum(t: Tensor) -> Tensor:  # noqa: A001 - mirrors numpy naming
    t = _wrap(t)
    return _result("sum", np.asarray(t.data.sum()), (t,), lambda g: (np.full_like(t.data, float(g)),))


def mean(t: Tensor) -> Tensor:
    t = _wrap(t)
    if t.data.size == 0:
        raise ShapeError("mean", t.shape)
    n = t.data.size
    return _result("mean", np.asarray(t.data.mean()), (t,), lambda g: (np.full_like(t.data, float(g) / n),))


def softmax(t: Tensor) -> Tensor:
    t = _wrap(t)
    out = _softmax(t.data, axis=-1)

    def grad_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        return (out * (g - np.sum(g * out, axis=-1, keepdims=True)),)

    return _result("softmax", out, (t,), grad_fn)


def log_softmax(t: Tensor) -> Tensor:
    t = _wrap(t)
    out = _log_softmax(t.data, axis=-1)
    probs = np.exp(out)

    def grad_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g - probs * np.sum(g, axis=-1, keepdims=True),)

    return _result("log_softmax", out, (t,), grad_fn)


def cross_entropy(logits: Tensor, classes: int | Sequence[int] | np.ndarray) -> Tensor:
    """Per-row -log softmax(logits)[class]; 1-D logits with one class give a scalar."""
    logits = _wrap(logits)
    target = np.asarray(classes, dtype=np.int64)
    single = logits.ndim == 1
    scores = logits.data[None, :] if single else logits.data
    target = target.reshape(-1)
    if scores.ndim != 2 or target.shape[0] != scores.shape[0]:
        raise ShapeError("cross_entropy", logits.shape, target.shape)
    if target.size and (target.min() < 0 or target.max() >= scores.shape[1]):
        raise ShapeError("cross_entropy", logits.shape, (int(target.max()),))

    log_probs = _log_softmax(scores, axis=-1)
    rows = np.arange(scores.shape[0])
    losses = -log_probs[rows, target]
    probs = np.exp(log_probs)

    def grad_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        delta = probs.copy()
        delta[rows, target] -= 1.0
        delta *= np.reshape(g, (-1, 1))
        return (delta[0] if single else delta,)

    return _result("cross_entropy", np.asarray(losses[0]) if single else losses, (logits,), grad_fn)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    out = matmul(x, weight)
    return add(out, bias) if bias is not None else out
