"""Tape-based reverse-mode automatic differentiation on dense 2-D float64 arrays.

Every tensor is a matrix. Scalars are ``(1, 1)``. Operations executed while a
:class:`Tape` is active are recorded if any operand is tracked (a leaf created
with ``requires_grad=True`` or the output of an earlier recorded operation).

Lifecycle: a tape is single-use. :meth:`Tape.gradient` consumes the record
unless the tape was created with ``persistent=True``.
"""

import threading

import numpy as np
from numba import njit

CHECK_FINITE = True

_local = threading.local()


class ShapeError(ValueError):
    """Operand shapes violate an operation's contract."""


class Tensor:
    __slots__ = ("data", "requires_grad", "_tape", "name")
    # let numpy arrays on the left defer to the reflected Tensor operators
    __array_ufunc__ = None

    def __init__(self, data, requires_grad=False, name=None):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got ndim={arr.ndim}")
        self.data = arr
        self.requires_grad = requires_grad
        self._tape = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def item(self):
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single value, shape is {self.shape}")
        return float(self.data[0, 0])

    def numpy(self):
        return self.data

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data, name=None):
    return Tensor(data, requires_grad=True, name=name)


class Tape:
    """Records operations for one backward pass.

    >>> x = parameter(3.0)
    >>> with Tape() as tape:
    ...     y = x * x
    >>> tape.gradient(y, [x])[0]
    array([[6.]])
    """

    def __init__(self, persistent=False):
        self.persistent = persistent
        self._entries = []
        self._consumed = False

    def __enter__(self):
        stack = getattr(_local, "stack", None)
        if stack is None:
            stack = _local.stack = []
        stack.append(self)
        return self

    def __exit__(self, *exc):
        _local.stack.pop()
        return False

    def __len__(self):
        return len(self._entries)

    def tracks(self, t):
        return t.requires_grad or t._tape is self

    def record(self, out, inputs, vjp):
        out._tape = self
        self._entries.append((out, inputs, vjp))

    def gradient(self, loss, sources):
        """Gradients of scalar ``loss`` w.r.t. each tensor in ``sources``.

        Sources the loss does not depend on get exact zeros.
        """
        if self._consumed:
            raise RuntimeError("tape already consumed; use Tape(persistent=True) to reuse")
        if loss.shape != (1, 1):
            raise ShapeError(f"loss must be a (1, 1) scalar, got {loss.shape}")
        grads = {id(loss): np.ones((1, 1))}
        for out, inputs, vjp in reversed(self._entries):
            g = grads.get(id(out))
            if g is None:
                continue
            for t, gi in zip(inputs, vjp(g)):
                if gi is None:
                    continue
                key = id(t)
                prev = grads.get(key)
                grads[key] = gi if prev is None else prev + gi
        result = []
        for s in sources:
            g = grads.get(id(s))
            result.append(np.zeros_like(s.data) if g is None else g)
        if not self.persistent:
            self._entries = []
            self._consumed = True
        return result


def active_tape():
    stack = getattr(_local, "stack", None)
    return stack[-1] if stack else None


def _emit(data, inputs, vjp):
    if CHECK_FINITE and not np.isfinite(data).all():
        raise FloatingPointError("non-finite value produced in forward pass")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.requires_grad = False
    out._tape = None
    out.name = None
    tape = active_tape()
    if tape is not None:
        tracked = [tape.tracks(t) for t in inputs]
        if any(tracked):
            mask = tuple(tracked)

            def masked(g):
                return [gi if m else None for gi, m in zip(vjp(g), mask)]

            tape.record(out, inputs, masked)
    return out


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    for axis in (0, 1):
        if shape[axis] == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _check_broadcast(a, b, op):
    for da, db in zip(a.shape, b.shape):
        if da != db and da != 1 and db != 1:
            raise ShapeError(f"{op}: cannot broadcast {a.shape} with {b.shape}")


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dims differ, {a.shape} @ {b.shape}")
    A, B = a.data, b.data
    tape = active_tape()
    need_a = tape is not None and tape.tracks(a)
    need_b = tape is not None and tape.tracks(b)
    return _emit(A @ B, (a, b), lambda g: (g @ B.T if need_a else None, A.T @ g if need_b else None))


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")
    sa, sb = a.shape, b.shape
    return _emit(a.data + b.data, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "sub")
    sa, sb = a.shape, b.shape
    return _emit(a.data - b.data, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")
    A, B = a.data, b.data
    return _emit(A * B, (a, b), lambda g: (_unbroadcast(g * B, A.shape), _unbroadcast(g * A, B.shape)))


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "div")
    A, B = a.data, b.data
    out = A / B
    return _emit(out, (a, b), lambda g: (_unbroadcast(g / B, A.shape), _unbroadcast(-g * out / B, B.shape)))


def neg(a):
    a = as_tensor(a)
    return _emit(-a.data, (a,), lambda g: (-g,))


def square(a):
    a = as_tensor(a)
    A = a.data
    return _emit(A * A, (a,), lambda g: (2.0 * g * A,))


def tanh(a):
    a = as_tensor(a)
    out = np.tanh(a.data)
    return _emit(out, (a,), lambda g: (g * (1.0 - out * out),))


def relu(a):
    a = as_tensor(a)
    out = np.maximum(a.data, 0.0)
    return _emit(out, (a,), lambda g: (g * (out > 0.0),))


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.data)
    return _emit(out, (a,), lambda g: (g * out,))


def log(a):
    a = as_tensor(a)
    A = a.data
    return _emit(np.log(A), (a,), lambda g: (g / A,))


def clip(a, lo, hi):
    """Clamp values; gradient passes only where the input was inside the range."""
    a = as_tensor(a)
    mask = (a.data >= lo) & (a.data <= hi)
    return _emit(np.clip(a.data, lo, hi), (a,), lambda g: (g * mask,))


def minimum(a, b):
    """Elementwise min of equal-shaped tensors; ties route the gradient to ``a``."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"minimum: shapes differ, {a.shape} vs {b.shape}")
    pick_a = a.data <= b.data
    return _emit(np.where(pick_a, a.data, b.data), (a, b), lambda g: (g * pick_a, g * ~pick_a))


def sum(a, axis=None):
    a = as_tensor(a)
    shape = a.shape
    if axis is None:
        return _emit(a.data.sum().reshape(1, 1), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))
    return _emit(a.data.sum(axis=axis, keepdims=True), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


def mean(a, axis=None):
    a = as_tensor(a)
    n = a.data.size if axis is None else a.shape[axis]
    return mul(sum(a, axis), 1.0 / n)


def concat(tensors, axis=1):
    tensors = [as_tensor(t) for t in tensors]
    other = 1 - axis
    if len({t.shape[other] for t in tensors}) != 1:
        raise ShapeError(f"concat along axis {axis}: mismatched shapes {[t.shape for t in tensors]}")
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def vjp(g):
        return np.split(g, sizes, axis=axis)

    return _emit(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), vjp)


@njit(cache=True)
def _scatter_rows(values, index, out):
    for k in range(index.shape[0]):
        r = index[k]
        for j in range(values.shape[1]):
            out[r, j] += values[k, j]


def _segment_sum(values, index, n_rows):
    out = np.zeros((n_rows, values.shape[1]))
    if index.size:
        _scatter_rows(np.ascontiguousarray(values), index.astype(np.int64, copy=False), out)
    return out


def take_rows(a, index):
    """Gather rows ``a[index]``; duplicated indices accumulate in the gradient."""
    a = as_tensor(a)
    index = np.asarray(index, dtype=np.intp)
    n = a.shape[0]

    def vjp(g):
        return (_segment_sum(g, index, n),)

    return _emit(a.data[index], (a,), vjp)


def scatter_add_rows(a, index, n_rows):
    """Sum row ``k`` of ``a`` into output row ``index[k]``; output has ``n_rows`` rows."""
    a = as_tensor(a)
    index = np.asarray(index, dtype=np.intp)
    if index.shape[0] != a.shape[0]:
        raise ShapeError(f"scatter_add_rows: {index.shape[0]} indices for {a.shape[0]} rows")
    return _emit(_segment_sum(a.data, index, n_rows), (a,), lambda g: (g[index],))


def columns(a, start, stop):
    """Column slice ``a[:, start:stop]``."""
    a = as_tensor(a)
    shape = a.shape

    def vjp(g):
        out = np.zeros(shape)
        out[:, start:stop] = g
        return (out,)

    return _emit(a.data[:, start:stop].copy(), (a,), vjp)


def reshape(a, rows, cols):
    a = as_tensor(a)
    shape = a.shape
    if rows * cols != a.data.size:
        raise ShapeError(f"reshape: {shape} has {a.data.size} values, not {rows}x{cols}")
    return _emit(a.data.reshape(rows, cols), (a,), lambda g: (g.reshape(shape),))


def stop_gradient(a):
    a = as_tensor(a)
    return Tensor(a.data)
