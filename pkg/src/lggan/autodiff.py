"""Minimal reverse-mode autodiff over dense float64 arrays.

Every op's backward rule is itself built from these ops, so gradients are
differentiable: taking the gradient of a gradient norm (as the critic
penalty requires) works without any special casing.
"""

from __future__ import annotations

import numpy as np

NORM_EPS = 1e-12


class ShapeError(ValueError):
    pass


class Tensor:
    """Node in the computation graph.

    Leaf tensors have no parents. Non-leaf tensors carry a vjp closure that
    maps the output adjoint to per-parent adjoints, expressed in Tensor ops
    so second-order differentiation works.
    """

    __slots__ = ("data", "parents", "vjp")

    def __init__(self, data, parents=(), vjp=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.parents = parents
        self.vjp = vjp

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, leaf={self.vjp is None})"

    # operator sugar -------------------------------------------------
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

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, expo):
        return power(self, expo)

    def __neg__(self):
        return mul(self, -1.0)

    def item(self):
        return float(self.data)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(x):
    return Tensor(x)


def _unbroadcast(g: Tensor, shape) -> Tensor:
    """Sum an adjoint down to `shape` after numpy broadcasting."""
    while g.data.ndim > len(shape):
        g = tsum(g, axis=0)
    for ax, dim in enumerate(shape):
        if dim == 1 and g.data.shape[ax] != 1:
            g = tsum(g, axis=ax, keepdims=True)
    if g.data.shape != tuple(shape):
        g = reshape(g, shape)
    return g


def _check_matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul shapes {a.data.shape} x {b.data.shape}")


# primitives ---------------------------------------------------------

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data + b.data
    except ValueError:
        raise ShapeError(f"add shapes {a.data.shape} vs {b.data.shape}")
    return Tensor(out, (a, b),
                  lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)))


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data - b.data
    except ValueError:
        raise ShapeError(f"sub shapes {a.data.shape} vs {b.data.shape}")
    return Tensor(out, (a, b),
                  lambda g: (_unbroadcast(g, a.data.shape),
                             _unbroadcast(mul(g, -1.0), b.data.shape)))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data * b.data
    except ValueError:
        raise ShapeError(f"mul shapes {a.data.shape} vs {b.data.shape}")
    return Tensor(out, (a, b),
                  lambda g: (_unbroadcast(mul(g, b), a.data.shape),
                             _unbroadcast(mul(g, a), b.data.shape)))


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return mul(a, power(b, -1.0))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_matmul(a, b)
    return Tensor(a.data @ b.data, (a, b),
                  lambda g: (matmul(g, transpose(b)), matmul(transpose(a), g)))


def transpose(a):
    a = as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"transpose needs 2-d, got {a.data.shape}")
    return Tensor(a.data.T, (a,), lambda g: (transpose(g),))


def reshape(a, shape):
    a = as_tensor(a)
    old = a.data.shape
    return Tensor(a.data.reshape(shape), (a,), lambda g: (reshape(g, old),))


def relu(a):
    a = as_tensor(a)
    mask = Tensor((a.data > 0).astype(np.float64))
    return Tensor(np.maximum(a.data, 0.0), (a,), lambda g: (mul(g, mask),))


def sigmoid(a):
    a = as_tensor(a)
    out = Tensor(1.0 / (1.0 + np.exp(-a.data)), (a,))
    out.parents = (a,)
    out.vjp = lambda g: (mul(g, mul(out, sub(1.0, out))),)
    return out


def tanh(a):
    a = as_tensor(a)
    out = Tensor(np.tanh(a.data), (a,))
    out.vjp = lambda g: (mul(g, sub(1.0, mul(out, out))),)
    out.parents = (a,)
    return out


def texp(a):
    a = as_tensor(a)
    out = Tensor(np.exp(a.data), (a,))
    out.parents = (a,)
    out.vjp = lambda g: (mul(g, out),)
    return out


def tlog(a):
    a = as_tensor(a)
    return Tensor(np.log(a.data), (a,), lambda g: (mul(g, power(a, -1.0)),))


def power(a, expo):
    a = as_tensor(a)
    expo = float(expo)
    return Tensor(np.power(a.data, expo), (a,),
                  lambda g: (mul(g, mul(expo, power(a, expo - 1.0))),))


def tsqrt(a):
    return power(a, 0.5)


def tsum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)
    shape = a.data.shape

    def back(g):
        gd = g
        if axis is not None and not keepdims:
            expand = list(shape)
            expand[axis] = 1
            gd = reshape(gd, expand)
        return (broadcast_to(gd, shape),)

    return Tensor(out, (a,), back)


def tmean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    count = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def broadcast_to(a, shape):
    a = as_tensor(a)
    old = a.data.shape
    return Tensor(np.broadcast_to(a.data, shape).copy(), (a,),
                  lambda g: (_unbroadcast(g, old),))


def maximum(a, b):
    a, b = as_tensor(a), as_tensor(b)
    mask = Tensor((a.data >= b.data).astype(np.float64))
    inv = Tensor((a.data < b.data).astype(np.float64))
    return Tensor(np.maximum(a.data, b.data), (a, b),
                  lambda g: (_unbroadcast(mul(g, mask), a.data.shape),
                             _unbroadcast(mul(g, inv), b.data.shape)))


def softmax_rows(a):
    a = as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"softmax_rows needs 2-d, got {a.data.shape}")
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = Tensor(e / e.sum(axis=1, keepdims=True), (a,))
    out.parents = (a,)
    out.vjp = lambda g: (mul(out, sub(g, tsum(mul(g, out), axis=1, keepdims=True))),)
    return out


def narrow(a, axis, start, length):
    a = as_tensor(a)
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, start + length)
    old = a.data.shape

    def back(g):
        before = start
        after = old[axis] - start - length
        return (pad_axis(g, axis, before, after),)

    return Tensor(a.data[tuple(idx)].copy(), (a,), back)


def pad_axis(a, axis, before, after):
    a = as_tensor(a)
    widths = [(0, 0)] * a.data.ndim
    widths[axis] = (before, after)
    length = a.data.shape[axis]
    return Tensor(np.pad(a.data, widths), (a,),
                  lambda g: (narrow(g, axis, before, length),))


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    lengths = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + lengths[:-1])

    def back(g):
        return tuple(narrow(g, axis, int(off), ln)
                     for off, ln in zip(offsets, lengths))

    return Tensor(np.concatenate([t.data for t in tensors], axis=axis),
                  tuple(tensors), back)


def maxpool(tensors):
    """Elementwise max across a list of same-shaped tensors."""
    out = tensors[0]
    for t in tensors[1:]:
        out = maximum(out, t)
    return out


def l2norm(a, eps=NORM_EPS):
    """Differentiable L2 norm, smoothed at zero so its own gradient is finite."""
    return tsqrt(add(tsum(mul(a, a)), eps))


# reverse pass -------------------------------------------------------

def _toposort(root):
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order  # parents before consumers


def grad(output: Tensor, wrt) -> list[Tensor]:
    """Gradients of a scalar output with respect to each tensor in `wrt`.

    Returned tensors stay on the graph, so they can be differentiated again.
    Unreached inputs get zero gradients.
    """
    if output.data.shape != ():
        raise ShapeError(f"grad needs scalar output, got shape {output.data.shape}")
    order = _toposort(output)
    needs = {id(t) for t in wrt}
    for node in order:
        if any(id(p) in needs for p in node.parents):
            needs.add(id(node))
    adjoint = {id(output): Tensor(1.0)}
    for node in reversed(order):
        g = adjoint.get(id(node))
        if g is None or node.vjp is None or id(node) not in needs:
            continue
        for parent, pg in zip(node.parents, node.vjp(g)):
            if pg is None or id(parent) not in needs:
                continue
            prev = adjoint.get(id(parent))
            adjoint[id(parent)] = pg if prev is None else add(prev, pg)
    out = []
    for w in wrt:
        g = adjoint.get(id(w))
        out.append(g if g is not None else Tensor(np.zeros(w.data.shape)))
    return out


def grad_norm(output: Tensor, wrt: Tensor, eps=NORM_EPS) -> Tensor:
    """L2 norm of d(output)/d(wrt) as a differentiable graph node."""
    g = grad(output, [wrt])[0]
    return l2norm(g, eps=eps)
