"""Reverse-mode automatic differentiation over numpy arrays.

A small tape: each `Var` wraps a float64 array and remembers how to push a
gradient back to its parents. Only the operations needed by the field
decoder, the modulation heads, and the loss terms are implemented. All
arithmetic is double precision and fully deterministic (single-threaded
topological replay), which keeps training histories bit-stable for a fixed
seed.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Var",
    "add",
    "sub",
    "mul",
    "neg",
    "scale",
    "matmul",
    "transpose",
    "sin",
    "cos",
    "tanh",
    "relu",
    "step",
    "reshape",
    "concat",
    "rows",
    "sum_all",
    "backward",
]


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape` (reverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Var:
    """Node in the computation graph: a value plus an accumulation slot."""

    __slots__ = ("value", "grad", "_parents", "_backward")

    def __init__(self, value, parents=(), backward=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += _unbroadcast(grad, self.value.shape)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Var(shape={self.value.shape})"


def _as_var(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def add(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    out = Var(a.value + b.value, (a, b))

    def _back():
        a.accumulate(out.grad)
        b.accumulate(out.grad)

    out._backward = _back
    return out


def sub(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    out = Var(a.value - b.value, (a, b))

    def _back():
        a.accumulate(out.grad)
        b.accumulate(-out.grad)

    out._backward = _back
    return out


def mul(a, b) -> Var:
    """Elementwise (Hadamard) product with numpy broadcasting."""
    a, b = _as_var(a), _as_var(b)
    out = Var(a.value * b.value, (a, b))

    def _back():
        a.accumulate(out.grad * b.value)
        b.accumulate(out.grad * a.value)

    out._backward = _back
    return out


def neg(a) -> Var:
    a = _as_var(a)
    out = Var(-a.value, (a,))

    def _back():
        a.accumulate(-out.grad)

    out._backward = _back
    return out


def scale(a, k: float) -> Var:
    """Multiply by a python constant (no gradient for the constant)."""
    a = _as_var(a)
    k = float(k)
    out = Var(a.value * k, (a,))

    def _back():
        a.accumulate(out.grad * k)

    out._backward = _back
    return out


def matmul(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    out = Var(a.value @ b.value, (a, b))

    def _back():
        g = out.grad
        av, bv = a.value, b.value
        if av.ndim == 1 and bv.ndim == 1:
            a.accumulate(g * bv)
            b.accumulate(g * av)
        elif bv.ndim == 1:
            a.accumulate(np.outer(g, bv))
            b.accumulate(av.T @ g)
        elif av.ndim == 1:
            a.accumulate(bv @ g)
            b.accumulate(np.outer(av, g))
        else:
            a.accumulate(g @ bv.T)
            b.accumulate(av.T @ g)

    out._backward = _back
    return out


def transpose(a) -> Var:
    a = _as_var(a)
    out = Var(a.value.T, (a,))

    def _back():
        a.accumulate(out.grad.T)

    out._backward = _back
    return out


def sin(a) -> Var:
    a = _as_var(a)
    out = Var(np.sin(a.value), (a,))

    def _back():
        a.accumulate(out.grad * np.cos(a.value))

    out._backward = _back
    return out


def cos(a) -> Var:
    a = _as_var(a)
    out = Var(np.cos(a.value), (a,))

    def _back():
        a.accumulate(-out.grad * np.sin(a.value))

    out._backward = _back
    return out


def tanh(a) -> Var:
    a = _as_var(a)
    t = np.tanh(a.value)
    out = Var(t, (a,))

    def _back():
        a.accumulate(out.grad * (1.0 - t * t))

    out._backward = _back
    return out


def relu(a) -> Var:
    a = _as_var(a)
    mask = a.value > 0.0
    out = Var(np.where(mask, a.value, 0.0), (a,))

    def _back():
        a.accumulate(out.grad * mask)

    out._backward = _back
    return out


def step(a) -> Var:
    """Heaviside of the value; derivative treated as zero almost everywhere."""
    a = _as_var(a)
    out = Var((a.value > 0.0).astype(np.float64), (a,))

    def _back():  # piecewise-constant: nothing flows back
        pass

    out._backward = _back
    return out


def reshape(a, shape) -> Var:
    a = _as_var(a)
    out = Var(a.value.reshape(shape), (a,))

    def _back():
        a.accumulate(out.grad.reshape(a.value.shape))

    out._backward = _back
    return out


def concat(parts, axis=0) -> Var:
    parts = [_as_var(p) for p in parts]
    out = Var(np.concatenate([p.value for p in parts], axis=axis), tuple(parts))
    sizes = [p.value.shape[axis] for p in parts]

    def _back():
        offset = 0
        for p, size in zip(parts, sizes):
            index = [slice(None)] * out.grad.ndim
            index[axis] = slice(offset, offset + size)
            p.accumulate(out.grad[tuple(index)])
            offset += size

    out._backward = _back
    return out


def rows(a, start: int, stop: int) -> Var:
    """Contiguous row slice a[start:stop]."""
    a = _as_var(a)
    out = Var(a.value[start:stop], (a,))

    def _back():
        g = np.zeros_like(a.value)
        g[start:stop] = out.grad
        a.accumulate(g)

    out._backward = _back
    return out


def sum_all(a) -> Var:
    a = _as_var(a)
    out = Var(a.value.sum(), (a,))

    def _back():
        a.accumulate(np.broadcast_to(out.grad, a.value.shape))

    out._backward = _back
    return out


def backward(root: Var) -> None:
    """Accumulate d(root)/d(node) into every reachable node's `.grad`."""
    if root.value.ndim != 0:
        raise ValueError("backward() expects a scalar root")
    topo: list[Var] = []
    visited: set[int] = set()
    stack: list[tuple[Var, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    root.grad = np.ones_like(root.value)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward()
