"""Forward-mode automatic differentiation with multivariate dual numbers.

A :class:`Dual` carries a value together with its gradient and, optionally,
its Hessian with respect to ``n`` seed variables.  The second-order part is
the truncated Taylor arithmetic of nested (hyper-)dual numbers, so a single
pass through a metric evaluator yields ``g``, ``dg`` and ``ddg``.

Values may be numpy arrays of any batch shape ``S``; the gradient then has
shape ``(n, *S)`` and the Hessian ``(n, n, *S)``, so that ordinary numpy
broadcasting of ``val`` against ``grad`` works without reshaping.

Functions that must accept both plain numbers and duals (metric evaluators,
immersions, field components) should use the math functions of this module
(:func:`sin`, :func:`cos`, ...) instead of :mod:`math` or :mod:`numpy`.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Dual",
    "variables",
    "value_of",
    "sin",
    "cos",
    "tan",
    "exp",
    "log",
    "sqrt",
    "absolute",
]


def _outer(a, b):
    return a[:, None] * b[None, :]


class Dual:
    """Truncated multivariate Taylor number ``val + grad·ε + ½ ε·hess·ε``.

    ``hess`` is ``None`` for first-order numbers.  Mixing orders in one
    expression is not supported; seed every variable with the same order.
    """

    __slots__ = ("val", "grad", "hess")
    # numpy must defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, val, grad, hess=None):
        self.val = val
        self.grad = grad
        self.hess = hess

    @property
    def order(self) -> int:
        return 1 if self.hess is None else 2

    def __repr__(self) -> str:
        return f"Dual(val={self.val!r}, grad={self.grad!r}, order={self.order})"

    # -- arithmetic -----------------------------------------------------
    def _chain(self, f0, f1, f2):
        grad = f1 * self.grad
        hess = None
        if self.hess is not None:
            hess = f1 * self.hess + f2 * _outer(self.grad, self.grad)
        return Dual(f0, grad, hess)

    def __neg__(self):
        return Dual(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Dual):
            hess = None if self.hess is None else self.hess + other.hess
            return Dual(self.val + other.val, self.grad + other.grad, hess)
        return Dual(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            hess = None if self.hess is None else self.hess - other.hess
            return Dual(self.val - other.val, self.grad - other.grad, hess)
        return Dual(self.val - other, self.grad, self.hess)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Dual):
            grad = self.grad * other.val + other.grad * self.val
            hess = None
            if self.hess is not None:
                hess = (
                    self.hess * other.val
                    + other.hess * self.val
                    + _outer(self.grad, other.grad)
                    + _outer(other.grad, self.grad)
                )
            return Dual(self.val * other.val, grad, hess)
        return Dual(
            self.val * other,
            self.grad * other,
            None if self.hess is None else self.hess * other,
        )

    __rmul__ = __mul__

    def reciprocal(self):
        inv = 1.0 / self.val
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, other):
        if isinstance(other, Dual):
            return exp(other * log(self))
        k = other
        if k == 0:
            return self * 0.0 + 1.0
        if k == 1:
            return self
        v = self.val
        if k == 2:
            return self._chain(v * v, 2.0 * v, 2.0)
        return self._chain(v ** k, k * v ** (k - 1), k * (k - 1) * v ** (k - 2))

    def __rpow__(self, other):
        # constant base, dual exponent
        return exp(self * np.log(other))


def variables(values, order: int = 1):
    """Seed one dual variable per entry of the last axis of ``values``.

    ``values`` has shape ``(..., n)``; each returned dual has value shape
    ``values.shape[:-1]``.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    batch = values.shape[:-1]
    out = []
    for a in range(n):
        grad = np.zeros((n,) + batch)
        grad[a] = 1.0
        hess = np.zeros((n, n) + batch) if order >= 2 else None
        out.append(Dual(values[..., a], grad, hess))
    return out


def value_of(x):
    """Plain value of a dual or of a constant."""
    return x.val if isinstance(x, Dual) else x


def sin(x):
    if isinstance(x, Dual):
        s, c = np.sin(x.val), np.cos(x.val)
        return x._chain(s, c, -s)
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        s, c = np.sin(x.val), np.cos(x.val)
        return x._chain(c, -s, -c)
    return np.cos(x)


def tan(x):
    if isinstance(x, Dual):
        t = np.tan(x.val)
        sec2 = 1.0 + t * t
        return x._chain(t, sec2, 2.0 * t * sec2)
    return np.tan(x)


def exp(x):
    if isinstance(x, Dual):
        e = np.exp(x.val)
        return x._chain(e, e, e)
    return np.exp(x)


def log(x):
    if isinstance(x, Dual):
        inv = 1.0 / x.val
        return x._chain(np.log(x.val), inv, -inv * inv)
    return np.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        r = np.sqrt(x.val)
        return x._chain(r, 0.5 / r, -0.25 / (r * x.val))
    return np.sqrt(x)


def absolute(x):
    if isinstance(x, Dual):
        s = np.sign(x.val)
        return x._chain(np.abs(x.val), s, 0.0 * s)
    return np.abs(x)
