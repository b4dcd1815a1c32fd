"""Sasaki metric on the tangent bundle.

Tangent vectors of ``TM`` at ``z = (x, xi)`` are stored by their horizontal
part ``H = pi_* X~`` and their vertical part ``V = K X~``; the raw components
in induced coordinates ``(x^a, xi^a)`` are recovered with :func:`assemble`.

The module also provides an independent reference for the Levi-Civita
connection of the Sasaki metric: the ``2n x 2n`` coordinate matrix of the
metric is differentiated by central differences and fed to the ordinary
Christoffel formula (:func:`sasaki_christoffel_fd`, :func:`oracle_nabla`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dual
from .manifold import (
    ChartedManifold,
    _christoffel_from,
    _stencil,
    apply_riemann,
    local_geometry,
)

__all__ = [
    "BundlePoint",
    "BundleTangent",
    "split",
    "assemble",
    "horizontal_lift",
    "vertical_lift",
    "sasaki_inner",
    "sasaki_matrix",
    "sasaki_matrix_batch",
    "kowalski_nabla",
    "KOWALSKI_KINDS",
    "lifted_field",
    "sasaki_christoffel_fd",
    "oracle_nabla",
    "field_jacobian",
]

KOWALSKI_KINDS = ("hh", "vh", "hv", "vv")


@dataclass(frozen=True, eq=False)
class BundlePoint:
    """Point ``(x, xi)`` of ``TM``: base point and fibre coordinates."""

    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float))
        if self.x.ndim != 1 or self.x.shape != self.xi.shape:
            raise ValueError("x and xi must be vectors of equal length")

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([self.x, self.xi])

    def same_as(self, other: "BundlePoint") -> bool:
        return np.array_equal(self.x, other.x) and np.array_equal(self.xi, other.xi)


@dataclass(frozen=True, eq=False)
class BundleTangent:
    base: BundlePoint
    H: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "H", np.asarray(self.H, dtype=float))
        object.__setattr__(self, "V", np.asarray(self.V, dtype=float))

    def __add__(self, other: "BundleTangent") -> "BundleTangent":
        _same_base(self.base, other.base)
        return BundleTangent(self.base, self.H + other.H, self.V + other.V)

    def __sub__(self, other: "BundleTangent") -> "BundleTangent":
        _same_base(self.base, other.base)
        return BundleTangent(self.base, self.H - other.H, self.V - other.V)

    def __mul__(self, s: float) -> "BundleTangent":
        return BundleTangent(self.base, s * self.H, s * self.V)

    __rmul__ = __mul__

    @property
    def stacked(self) -> np.ndarray:
        """``(H, V)`` concatenated; not the raw coordinate components."""
        return np.concatenate([self.H, self.V])


def _same_base(a: BundlePoint, b: BundlePoint):
    if not a.same_as(b):
        raise ValueError("tangent vectors are based at different points of TM")


def _connection_block(gamma, xi):
    # K[a, c] = Gamma^a_bc xi^b
    return np.einsum("...abc,...b->...ac", gamma, xi)


def split(m: ChartedManifold, z: BundlePoint, raw) -> BundleTangent:
    """Horizontal and vertical parts of a raw tangent vector of ``TM``."""
    n = m.dim
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (2 * n,):
        raise ValueError(f"raw vector must have {2 * n} components")
    gamma = local_geometry(m, m.check(z.x)).gamma
    H = raw[:n]
    V = raw[n:] + _connection_block(gamma, z.xi) @ H
    return BundleTangent(z, H.copy(), V)


def assemble(m: ChartedManifold, z: BundlePoint, H, V) -> np.ndarray:
    """Raw components ``(H^a, V^a - Gamma^a_bc xi^b H^c)``."""
    H = np.asarray(H, dtype=float)
    V = np.asarray(V, dtype=float)
    gamma = local_geometry(m, m.check(z.x)).gamma
    return np.concatenate([H, V - _connection_block(gamma, z.xi) @ H])


def horizontal_lift(z: BundlePoint, X) -> BundleTangent:
    X = np.asarray(X, dtype=float)
    return BundleTangent(z, X, np.zeros_like(X))


def vertical_lift(z: BundlePoint, X) -> BundleTangent:
    X = np.asarray(X, dtype=float)
    return BundleTangent(z, np.zeros_like(X), X)


def sasaki_inner(m: ChartedManifold, z: BundlePoint, A: BundleTangent, B: BundleTangent) -> float:
    _same_base(A.base, z)
    _same_base(B.base, z)
    g = local_geometry(m, m.check(z.x)).g
    return float(A.H @ g @ B.H + A.V @ g @ B.V)


def sasaki_matrix_batch(m: ChartedManifold, q) -> np.ndarray:
    """Sasaki metric in induced coordinates for ``q`` of shape ``(..., 2n)``."""
    q = np.asarray(q, dtype=float)
    n = m.dim
    geo = local_geometry(m, q[..., :n])
    g = geo.g
    K = _connection_block(geo.gamma, q[..., n:])
    gK = g @ K
    Kt = np.swapaxes(K, -1, -2)
    top = np.concatenate([g + Kt @ gK, Kt @ g], axis=-1)
    bottom = np.concatenate([gK, g], axis=-1)
    G = np.concatenate([top, bottom], axis=-2)
    return 0.5 * (G + np.swapaxes(G, -1, -2))


def sasaki_matrix(m: ChartedManifold, z: BundlePoint) -> np.ndarray:
    m.check(z.x)
    return sasaki_matrix_batch(m, z.coords)


def field_jacobian(field_fn: Callable, x) -> tuple[np.ndarray, np.ndarray]:
    """Value and Jacobian ``dY[a, c] = d_c Y^a`` of a dual-capable field."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    comps = field_fn(dual.variables(x, 1))
    val = np.array([float(dual.value_of(c)) for c in comps])
    jac = np.zeros((len(comps), n))
    for a, c in enumerate(comps):
        if isinstance(c, dual.Dual):
            jac[a] = c.grad
    return val, jac


def kowalski_nabla(m: ChartedManifold, z: BundlePoint, kind: str, X, Y_field: Callable) -> BundleTangent:
    """Levi-Civita derivative of lifts on ``TM`` at ``z``.

    ``kind`` is two letters: the lift of ``X`` then the lift of ``Y``
    (``"hv"`` means the derivative of ``Y^v`` along ``X^h``).  ``Y_field``
    maps chart coordinates to components and is extended constantly along
    the fibres.
    """
    if kind not in KOWALSKI_KINDS:
        raise ValueError(f"kind must be one of {KOWALSKI_KINDS}, got {kind!r}")
    n = m.dim
    X = np.asarray(X, dtype=float)
    zero = np.zeros(n)
    if kind == "vv":
        return BundleTangent(z, zero, zero.copy())
    geo = local_geometry(m, m.check(z.x), order=2)
    Y, dY = field_jacobian(Y_field, z.x)
    R = geo.riemann
    xi = z.xi
    if kind == "vh":
        return BundleTangent(z, 0.5 * apply_riemann(R, xi, X, Y), zero)
    nabla_XY = dY @ X + np.einsum("abc,b,c->a", geo.gamma, Y, X)
    if kind == "hh":
        return BundleTangent(z, nabla_XY, -0.5 * apply_riemann(R, X, Y, xi))
    return BundleTangent(z, 0.5 * apply_riemann(R, xi, Y, X), nabla_XY)


# -- finite-difference reference --------------------------------------------------

def sasaki_christoffel_fd(m: ChartedManifold, q, h: float = 1e-5) -> np.ndarray:
    """Christoffel symbols of the Sasaki metric in the ``2n`` induced
    coordinates, by central differences of :func:`sasaki_matrix_batch`.

    Accepts ``q`` of shape ``(2n,)`` or ``(..., 2n)``.
    """
    q = np.asarray(q, dtype=float)
    N = q.shape[-1]
    G = sasaki_matrix_batch(m, q)
    Gs = sasaki_matrix_batch(m, _stencil(q, h))
    dG = np.moveaxis((Gs[:N] - Gs[N:]) / (2.0 * h), 0, -1)
    return _christoffel_from(np.linalg.inv(G), dG)


def lifted_field(m: ChartedManifold, Y_field: Callable, kind: str) -> Callable:
    """Raw components of the horizontal (``"h"``) or vertical (``"v"``) lift
    of a base field, as a function of induced coordinates ``q = (x, xi)``."""
    n = m.dim

    def raw(q):
        q = np.asarray(q, dtype=float)
        x, xi = q[:n], q[n:]
        Y = np.array([float(dual.value_of(c)) for c in Y_field(list(x))])
        if kind == "v":
            return np.concatenate([np.zeros(n), Y])
        gamma = local_geometry(m, x).gamma
        return np.concatenate([Y, -_connection_block(gamma, xi) @ Y])

    if kind not in ("h", "v"):
        raise ValueError("lift kind must be 'h' or 'v'")
    return raw


def oracle_nabla(m: ChartedManifold, z: BundlePoint, X_raw, Y_raw: Callable, h: float = 1e-5) -> BundleTangent:
    """``nabla~_X Y`` from the coordinate formula with finite-difference
    Christoffel symbols and a finite-difference directional derivative."""
    q = z.coords
    X_raw = np.asarray(X_raw, dtype=float)
    gamma = sasaki_christoffel_fd(m, q, h)
    Y0 = Y_raw(q)
    dY = (Y_raw(q + h * X_raw) - Y_raw(q - h * X_raw)) / (2.0 * h)
    return split(m, z, dY + np.einsum("abc,b,c->a", gamma, X_raw, Y0))
