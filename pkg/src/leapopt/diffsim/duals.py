"""Forward-mode automatic differentiation over numpy arrays.

A :class:`Dual` carries a primal array ``val`` of arbitrary shape and a
derivative array ``dot`` of shape ``val.shape + (P,)`` holding exact partial
derivatives with respect to P tracked parameters. Because the parameter axis
trails, numpy broadcasting rules apply unchanged to both halves.

Branch decisions (``where``, ``minimum``, ``maximum``, comparisons) are made
on primal values only, so tracking derivatives never alters the primal
trajectory. At exact ties the first argument's derivative is kept.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "Dual", "seed", "value", "grad", "where", "minimum", "maximum",
    "sqrt", "exp", "sin", "cos", "dsum", "matvec", "expand", "stack",
    "concat",
]


def _as_dual(x, num_params: int) -> "Dual":
    if isinstance(x, Dual):
        return x
    v = np.asarray(x, dtype=float)
    return Dual(v, np.zeros(v.shape + (num_params,)))


class Dual:
    """Array of dual numbers sharing one set of P tracked parameters."""

    __slots__ = ("val", "dot")

    # Keep numpy from hijacking `ndarray <op> Dual`; Python then falls back
    # to the reflected methods below.
    __array_ufunc__ = None

    def __init__(self, val, dot):
        self.val = np.asarray(val, dtype=float)
        self.dot = np.asarray(dot, dtype=float)
        if self.dot.shape[: self.val.ndim] != self.val.shape:
            raise ValueError(
                f"dot shape {self.dot.shape} incompatible with val shape {self.val.shape}"
            )

    @property
    def num_params(self) -> int:
        return self.dot.shape[-1]

    @property
    def shape(self):
        return self.val.shape

    def __repr__(self):
        return f"Dual(val={self.val!r})"

    # arithmetic ------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.dot + other.dot)
        return Dual(self.val + other, self.dot + np.zeros(np.shape(other) + (1,)))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.dot - other.dot)
        return Dual(self.val - other, self.dot + np.zeros(np.shape(other) + (1,)))

    def __rsub__(self, other):
        return Dual(other - self.val, -self.dot + np.zeros(np.shape(other) + (1,)))

    def __neg__(self):
        return Dual(-self.val, -self.dot)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val * other.val,
                self.dot * other.val[..., None] + other.dot * self.val[..., None],
            )
        other = np.asarray(other, dtype=float)
        return Dual(self.val * other, self.dot * other[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            val = self.val * inv
            dot = (self.dot - other.dot * val[..., None]) * inv[..., None]
            return Dual(val, dot)
        other = np.asarray(other, dtype=float)
        return Dual(self.val / other, self.dot / other[..., None])

    def __rtruediv__(self, other):
        other = np.asarray(other, dtype=float)
        val = other / self.val
        dot = -self.dot * (val / self.val)[..., None]
        return Dual(val, dot)

    def __pow__(self, p):
        if isinstance(p, Dual):
            raise TypeError("dual exponents are not supported")
        val = self.val ** p
        dot = self.dot * (p * self.val ** (p - 1))[..., None]
        return Dual(val, dot)

    # comparisons act on primals only ---------------------------------

    def __lt__(self, other):
        return self.val < value(other)

    def __le__(self, other):
        return self.val <= value(other)

    def __gt__(self, other):
        return self.val > value(other)

    def __ge__(self, other):
        return self.val >= value(other)

    # structure --------------------------------------------------------

    def __getitem__(self, idx):
        return Dual(self.val[idx], self.dot[idx])

    def sum(self, axis=None):
        # Axes are counted in primal dimensions; negative values must not
        # reach into the trailing parameter axis of dot.
        if axis is None:
            axes = tuple(range(self.val.ndim))
        elif isinstance(axis, tuple):
            axes = tuple(a % self.val.ndim for a in axis)
        else:
            axes = (axis % self.val.ndim,)
        return Dual(self.val.sum(axis=axes), self.dot.sum(axis=axes))

    def copy(self):
        return Dual(self.val.copy(), self.dot.copy())


def seed(values) -> Dual:
    """Promote a length-P vector to duals tracking each entry: dot = identity."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ValueError("seed expects a 1D parameter vector")
    return Dual(values, np.eye(values.size))


def value(x):
    return x.val if isinstance(x, Dual) else np.asarray(x, dtype=float)


def grad(x) -> np.ndarray:
    """Derivative vector of a scalar dual (zeros for plain numbers)."""
    if isinstance(x, Dual):
        if x.val.ndim != 0:
            raise ValueError("grad expects a scalar dual")
        return x.dot.copy()
    return np.zeros(0)


def where(cond, a, b):
    """Branch on a primal boolean mask; derivatives follow the selected branch."""
    cond = np.asarray(cond)
    if not isinstance(a, Dual) and not isinstance(b, Dual):
        return np.where(cond, a, b)
    p = a.num_params if isinstance(a, Dual) else b.num_params
    a, b = _as_dual(a, p), _as_dual(b, p)
    return Dual(np.where(cond, a.val, b.val), np.where(cond[..., None], a.dot, b.dot))


def minimum(a, b):
    return where(value(a) <= value(b), a, b)


def maximum(a, b):
    return where(value(a) >= value(b), a, b)


def sqrt(x):
    if isinstance(x, Dual):
        root = np.sqrt(x.val)
        return Dual(root, x.dot * (0.5 / root)[..., None])
    return np.sqrt(x)


def exp(x):
    if isinstance(x, Dual):
        e = np.exp(x.val)
        return Dual(e, x.dot * e[..., None])
    return np.exp(x)


def sin(x):
    if isinstance(x, Dual):
        return Dual(np.sin(x.val), x.dot * np.cos(x.val)[..., None])
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(np.cos(x.val), x.dot * (-np.sin(x.val))[..., None])
    return np.cos(x)


def dsum(x, axis=None):
    if isinstance(x, Dual):
        return x.sum(axis=axis)
    return np.sum(x, axis=axis)


def expand(x, axis: int):
    """Insert a length-1 axis (position counted in primal dimensions)."""
    if isinstance(x, Dual):
        ax = axis if axis >= 0 else x.val.ndim + 1 + axis
        return Dual(np.expand_dims(x.val, ax), np.expand_dims(x.dot, ax))
    return np.expand_dims(x, axis)


def stack(items, axis: int = 0):
    """Stack duals/arrays along a new primal axis."""
    duals = [it for it in items if isinstance(it, Dual)]
    if not duals:
        return np.stack(items, axis=axis)
    p = duals[0].num_params
    items = [_as_dual(it, p) for it in items]
    vals = np.stack([it.val for it in items], axis=axis)
    ax = axis if axis >= 0 else vals.ndim + axis
    dots = np.stack([it.dot for it in items], axis=ax)
    return Dual(vals, dots)


def concat(items, axis: int = 0):
    """Concatenate duals/arrays along an existing primal axis."""
    duals = [it for it in items if isinstance(it, Dual)]
    if not duals:
        return np.concatenate(items, axis=axis)
    p = duals[0].num_params
    items = [_as_dual(it, p) for it in items]
    vals = np.concatenate([it.val for it in items], axis=axis)
    ax = axis if axis >= 0 else vals.ndim + axis
    dots = np.concatenate([it.dot for it in items], axis=ax)
    return Dual(vals, dots)


def matvec(matrix: np.ndarray, x):
    """Constant matrix times (dual) array, contracting the leading axis of x."""
    matrix = np.asarray(matrix, dtype=float)
    if isinstance(x, Dual):
        return Dual(
            np.tensordot(matrix, x.val, axes=([1], [0])),
            np.tensordot(matrix, x.dot, axes=([1], [0])),
        )
    return np.tensordot(matrix, x, axes=([1], [0]))
