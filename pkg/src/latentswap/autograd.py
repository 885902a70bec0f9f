"""Minimal reverse-mode autodiff over numpy arrays.

A Tensor wraps an ndarray plus an optional backward closure; ops build the
tape as they run. The tape is per-forward-pass and garbage-collected with
its tensors, so training steps do not accumulate state. Gradients are only
recorded for tensors reachable from a leaf with requires_grad=True, which
is also how detachment works: fake images passed to the discriminators as
`detach()`-ed constants contribute no generator gradient.

All ops support float32 and float64; dtype follows the inputs (gradient
checks run the whole graph in float64).
"""

import contextlib

import numpy as np

from . import kernels

_grad_enabled = [True]


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the context (inference paths)."""
    _grad_enabled.append(False)
    try:
        yield
    finally:
        _grad_enabled.pop()


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data)
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data, requires_grad=False)

    def __repr__(self):
        tag = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{tag})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_as_tensor(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)


def _as_tensor(x, dtype):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def _pair(a, b):
    if isinstance(a, Tensor):
        return a, _as_tensor(b, a.dtype)
    return _as_tensor(a, b.dtype), b


def _attach(out, parents, backward):
    if _grad_enabled[-1] and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _accum(t, g):
    # First contribution may alias the child's buffer; later contributions
    # therefore allocate instead of mutating in place.
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g
    else:
        t.grad = t.grad + g


def _unbroadcast(g, shape):
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def backward(loss):
    """Backpropagate from a scalar tensor, accumulating into `.grad`."""
    if loss.data.ndim != 0:
        raise ValueError("backward() expects a scalar loss")
    order = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    loss.grad = np.ones((), dtype=loss.data.dtype)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def zero_grads(params):
    for p in params:
        p.grad = None


# ---------------------------------------------------------------------------
# elementwise / arithmetic


def add(a, b):
    a, b = _pair(a, b)
    out = Tensor(a.data + b.data)

    def bw(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _attach(out, (a, b), bw)


def sub(a, b):
    a, b = _pair(a, b)
    out = Tensor(a.data - b.data)

    def bw(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))

    return _attach(out, (a, b), bw)


def mul(a, b):
    a, b = _pair(a, b)
    out = Tensor(a.data * b.data)

    def bw(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _attach(out, (a, b), bw)


def div(a, b):
    a, b = _pair(a, b)
    out = Tensor(a.data / b.data)

    def bw(g):
        _accum(a, _unbroadcast(g / b.data, a.data.shape))
        _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _attach(out, (a, b), bw)


def leaky_relu(x, slope=0.2):
    mask = x.data >= 0
    out = Tensor(np.where(mask, x.data, x.data * x.dtype.type(slope)))

    def bw(g):
        _accum(x, np.where(mask, g, g * x.dtype.type(slope)))

    return _attach(out, (x,), bw)


def tanh(x):
    y = np.tanh(x.data)
    out = Tensor(y)

    def bw(g):
        _accum(x, g * (1 - y * y))

    return _attach(out, (x,), bw)


def sigmoid(x):
    e = np.exp(-np.abs(x.data))
    y = np.where(x.data >= 0, 1 / (1 + e), e / (1 + e))
    out = Tensor(y)

    def bw(g):
        _accum(x, g * (y * (1 - y)))

    return _attach(out, (x,), bw)


def log(x):
    out = Tensor(np.log(x.data))

    def bw(g):
        _accum(x, g / x.data)

    return _attach(out, (x,), bw)


def sqrt(x):
    y = np.sqrt(x.data)
    out = Tensor(y)

    def bw(g):
        _accum(x, g * (0.5 / y))

    return _attach(out, (x,), bw)


def absolute(x):
    out = Tensor(np.abs(x.data))

    def bw(g):
        _accum(x, g * np.sign(x.data))

    return _attach(out, (x,), bw)


def clamp(x, lo=None, hi=None):
    """Clip to [lo, hi]; gradient passes only where the input was in range."""
    y = np.clip(x.data, lo, hi)
    mask = np.ones(x.data.shape, dtype=bool)
    if lo is not None:
        mask &= x.data >= lo
    if hi is not None:
        mask &= x.data <= hi
    out = Tensor(y)

    def bw(g):
        _accum(x, np.where(mask, g, 0))

    return _attach(out, (x,), bw)


# ---------------------------------------------------------------------------
# reductions / shape


def sum_all(x):
    out = Tensor(x.data.sum())

    def bw(g):
        _accum(x, np.broadcast_to(g, x.data.shape))

    return _attach(out, (x,), bw)


def mean_all(x):
    n = x.dtype.type(x.data.size)
    out = Tensor(x.data.mean())

    def bw(g):
        _accum(x, np.broadcast_to(g / n, x.data.shape))

    return _attach(out, (x,), bw)


def sum_axis(x, axis, keepdims=True):
    out = Tensor(x.data.sum(axis=axis, keepdims=keepdims))

    def bw(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        _accum(x, np.broadcast_to(g, x.data.shape))

    return _attach(out, (x,), bw)


def reshape(x, shape):
    out = Tensor(x.data.reshape(shape))

    def bw(g):
        _accum(x, g.reshape(x.data.shape))

    return _attach(out, (x,), bw)


def concat(tensors, axis=1):
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    sizes = [t.data.shape[axis] for t in tensors]

    def bw(g):
        start = 0
        for t, s in zip(tensors, sizes):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(start, start + s)
            _accum(t, g[tuple(sl)])
            start += s

    return _attach(out, tuple(tensors), bw)


def narrow(x, axis, start, stop):
    sl = [slice(None)] * x.data.ndim
    sl[axis] = slice(start, stop)
    sl = tuple(sl)
    out = Tensor(np.ascontiguousarray(x.data[sl]))

    def bw(g):
        full = np.zeros(x.data.shape, dtype=g.dtype)
        full[sl] = g
        _accum(x, full)

    return _attach(out, (x,), bw)


# ---------------------------------------------------------------------------
# linear / spatial


def matmul(a, b):
    out = Tensor(a.data @ b.data)

    def bw(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return _attach(out, (a, b), bw)


def conv2d(x, w, stride=2, pad=1):
    if not _grad_enabled[-1] or not (x.requires_grad or w.requires_grad):
        return Tensor(kernels.conv_down(x.data, w.data, stride, pad))
    # keep the im2col columns so the weight gradient skips a second gather
    data, cols = kernels.conv_down_with_cols(x.data, w.data, stride, pad)
    out = Tensor(data)

    def bw(g):
        g = np.ascontiguousarray(g)
        if x.requires_grad:
            _accum(x, kernels.spread_up(g, w.data, stride, pad))
        if w.requires_grad:
            _accum(w, kernels.conv_weight_grad_cols(cols, g).reshape(w.data.shape))

    return _attach(out, (x, w), bw)


def conv2d_transpose(x, w, stride=2, pad=1):
    out = Tensor(kernels.spread_up(x.data, w.data, stride, pad))

    def bw(g):
        g = np.ascontiguousarray(g)
        if x.requires_grad:
            _accum(x, kernels.conv_down(g, w.data, stride, pad))
        if w.requires_grad:
            _accum(w, kernels.conv_weight_grad(g, x.data, stride, pad))

    return _attach(out, (x, w), bw)


def avg_pool2(x):
    n, c, h, w = x.data.shape
    y = x.data.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))
    out = Tensor(y)

    def bw(g):
        gg = (g * x.dtype.type(0.25)).repeat(2, axis=2).repeat(2, axis=3)
        _accum(x, gg)

    return _attach(out, (x,), bw)
