"""Minimal dense tensors with reverse-mode gradients.

Every op records its inputs and a backward rule on the produced tensor, so a
single call to :func:`backward` on a scalar loss yields gradients for all leaf
tensors (parameters). Arrays are float64 by default; float32 can be enabled
for speed at the cost of looser gradient checks.
"""
from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible for an op."""


_DTYPE = np.float64
_GRAD_ENABLED = True


def set_default_dtype(dtype) -> None:
    global _DTYPE
    if dtype not in (np.float32, np.float64):
        raise ValueError("dtype must be float32 or float64")
    _DTYPE = dtype


def default_dtype():
    return _DTYPE


class no_grad:
    """Context manager disabling tape recording (evaluation mode)."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


class Tensor:
    __slots__ = ("data", "parents", "_bwd", "name")

    def __init__(self, data, parents=(), bwd=None, name=None):
        self.data = np.asarray(data, dtype=_DTYPE)
        if _GRAD_ENABLED:
            self.parents = tuple(parents)
            self._bwd = bwd
        else:
            self.parents = ()
            self._bwd = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def rows(self):
        if self.data.ndim != 2:
            raise ShapeError("rows/cols only defined for 2-d tensors")
        return self.data.shape[0]

    @property
    def cols(self):
        if self.data.ndim != 2:
            raise ShapeError("rows/cols only defined for 2-d tensors")
        return self.data.shape[1]

    def is_leaf(self):
        return not self.parents

    def item(self):
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.data.shape})"


def parameter(data, name=None) -> Tensor:
    """A leaf tensor holding learnable values (never records parents)."""
    t = Tensor.__new__(Tensor)
    t.data = np.asarray(data, dtype=_DTYPE)
    t.parents = ()
    t._bwd = None
    t.name = name
    return t


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    if grad.shape == tuple(shape):
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _shapes(*ts):
    return ", ".join(str(t.shape if isinstance(t, Tensor) else np.shape(t)) for t in ts)


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as e:
        raise ShapeError(f"matmul: incompatible shapes {_shapes(a, b)}") from e

    def bwd(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor(out, (a, b), bwd)


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = a.data + b.data
    except ValueError as e:
        raise ShapeError(f"add: incompatible shapes {_shapes(a, b)}") from e

    def bwd(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor(out, (a, b), bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return add(a, scale(b, -1.0))


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = a.data * b.data
    except ValueError as e:
        raise ShapeError(f"mul: incompatible shapes {_shapes(a, b)}") from e

    def bwd(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor(out, (a, b), bwd)


def mul_const(a: Tensor, c) -> Tensor:
    c = np.asarray(c, dtype=_DTYPE)
    out = a.data * c

    def bwd(g):
        return (_unbroadcast(g * c, a.shape),)

    return Tensor(out, (a,), bwd)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def bwd(g):
        return (g * c,)

    return Tensor(a.data * c, (a,), bwd)


def concat(tensors, axis=0) -> Tensor:
    tensors = list(tensors)
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        return tuple(
            np.take(g, np.arange(offsets[i], offsets[i + 1]), axis=axis)
            for i in range(len(tensors))
        )

    return Tensor(out, tensors, bwd)


def concat_rows(tensors) -> Tensor:
    return concat(tensors, axis=0)


def sum_all(a: Tensor) -> Tensor:
    def bwd(g):
        return (np.full(a.shape, float(g), dtype=_DTYPE),)

    return Tensor(a.data.sum(), (a,), bwd)


def sum_axis(a: Tensor, axis: int, keepdims: bool = False) -> Tensor:
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bwd(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor(out, (a,), bwd)


def mean_rows(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise ShapeError(f"mean_rows: expected 2-d tensor, got {_shapes(a)}")
    return scale(sum_axis(a, 0, keepdims=True), 1.0 / a.shape[0])


def softmax_last(a: Tensor) -> Tensor:
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        dot = (g * out).sum(axis=-1, keepdims=True)
        return (out * (g - dot),)

    return Tensor(out, (a,), bwd)


def softmax_rows(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise ShapeError(f"softmax_rows: expected 2-d tensor, got {_shapes(a)}")
    return softmax_last(a)


def logsumexp_last(a: Tensor) -> Tensor:
    m = a.data.max(axis=-1, keepdims=True)
    e = np.exp(a.data - m)
    s = e.sum(axis=-1, keepdims=True)
    out = (np.log(s) + m).squeeze(-1)

    def bwd(g):
        return (np.expand_dims(g, -1) * (e / s),)

    return Tensor(out, (a,), bwd)


def log(a: Tensor) -> Tensor:
    def bwd(g):
        return (g / a.data,)

    return Tensor(np.log(a.data), (a,), bwd)


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)

    def bwd(g):
        return (g * out,)

    return Tensor(out, (a,), bwd)


def leaky_relu(a: Tensor, slope: float = 0.01) -> Tensor:
    pos = a.data >= 0
    out = np.where(pos, a.data, slope * a.data)

    def bwd(g):
        return (np.where(pos, g, slope * g),)

    return Tensor(out, (a,), bwd)


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    out = a.data.reshape(shape)

    def bwd(g):
        return (g.reshape(a.shape),)

    return Tensor(out, (a,), bwd)


def transpose(a: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))

    def bwd(g):
        return (g.transpose(inv),)

    return Tensor(a.data.transpose(axes), (a,), bwd)


def broadcast_to(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    out = np.broadcast_to(a.data, shape).copy()

    def bwd(g):
        return (_unbroadcast(g, a.shape),)

    return Tensor(out, (a,), bwd)


def gather_rows(a: Tensor, idx) -> Tensor:
    """a[idx] along axis 0; idx may have any shape. Backward scatter-adds."""
    idx = np.asarray(idx, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
        raise IndexError(f"gather_rows: index out of range for {a.shape[0]} rows")
    out = a.data[idx]

    def bwd(g):
        ga = np.zeros(a.shape, dtype=_DTYPE)
        np.add.at(ga, idx, g)
        return (ga,)

    return Tensor(out, (a,), bwd)


embedding_gather = gather_rows


def scatter_rows(base: Tensor, idx, rows: Tensor) -> Tensor:
    """Copy of `base` with base[idx] replaced by `rows`. Indices must be unique."""
    idx = np.asarray(idx, dtype=np.intp)
    out = base.data.copy()
    out[idx] = rows.data

    def bwd(g):
        gb = g.copy()
        gb[idx] = 0.0
        return gb, g[idx]

    return Tensor(out, (base, rows), bwd)


def slice_rows(a: Tensor, start: int, stop: int) -> Tensor:
    out = a.data[start:stop].copy()

    def bwd(g):
        ga = np.zeros(a.shape, dtype=_DTYPE)
        ga[start:stop] = g
        return (ga,)

    return Tensor(out, (a,), bwd)


def masked_fill(a: Tensor, mask, value: float) -> Tensor:
    """Replace entries where mask is True with `value` (mask broadcastable)."""
    mask = np.asarray(mask, dtype=bool)
    out = np.where(mask, _DTYPE(value), a.data)

    def bwd(g):
        return (_unbroadcast(np.where(mask, 0.0, g), a.shape),)

    return Tensor(out, (a,), bwd)


def inner_product_rows(a: Tensor, b: Tensor) -> Tensor:
    """Row-wise dot products over the last axis; output drops that axis."""
    if a.shape != b.shape:
        raise ShapeError(f"inner_product_rows: shapes differ {_shapes(a, b)}")
    out = (a.data * b.data).sum(axis=-1)

    def bwd(g):
        g = np.expand_dims(g, -1)
        return g * b.data, g * a.data

    return Tensor(out, (a, b), bwd)


def distance_bias(table: Tensor, buckets) -> Tensor:
    """Per-head attention bias from a bucket lookup table.

    table: (P, n_buckets); buckets: int array (G, R, R).
    Returns (G, P, R, R) with out[g, p, r, c] = table[p, buckets[g, r, c]].
    """
    buckets = np.asarray(buckets, dtype=np.intp)
    out = np.moveaxis(table.data[:, buckets], 0, 1)

    def bwd(g):
        gt = np.zeros(table.shape, dtype=_DTYPE)
        for p in range(table.shape[0]):
            np.add.at(gt[p], buckets, g[:, p])
        return (gt,)

    return Tensor(out, (table,), bwd)


# ---------------------------------------------------------------------------
# backward pass
# ---------------------------------------------------------------------------

def backward(loss: Tensor) -> dict:
    """Gradients of a scalar loss w.r.t. every leaf tensor on its tape.

    Returns a dict keyed by leaf Tensor. Leaves not reachable from the loss
    are simply absent (callers substitute zeros).
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward: loss must be scalar, got shape {loss.shape}")

    topo = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))

    grads = {id(loss): np.ones(loss.shape, dtype=_DTYPE)}
    by_id = {id(loss): loss}
    leaf_grads = {}
    for node in reversed(topo):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf():
            leaf_grads[node] = g
            continue
        for parent, pg in zip(node.parents, node._bwd(g)):
            pid = id(parent)
            by_id[pid] = parent
            if pid in grads:
                grads[pid] = grads[pid] + pg
            else:
                grads[pid] = pg
    return leaf_grads


def assert_finite(t: Tensor, what: str = "tensor") -> None:
    if not np.isfinite(t.data).all():
        raise FloatingPointError(f"non-finite values in {what}")
