"""Chart-based Riemannian manifolds: metric, Christoffel symbols, curvature.

A :class:`ChartedManifold` wraps a metric evaluator ``metric_eval(x)`` that
takes a sequence of ``n`` chart coordinates and returns an ``n x n`` nested
sequence of components.  The evaluator is written with the math functions
of :mod:`tgbundle.dual` so that it accepts floats, numpy arrays (batches of
points) and dual numbers alike.

Index conventions used throughout the package::

    dg[..., a, b, c]        = d_c g_ab
    ddg[..., a, b, c, d]    = d_c d_d g_ab
    gamma[..., a, b, c]     = Gamma^a_bc
    dgamma[..., a, b, c, e] = d_e Gamma^a_bc
    riemann[..., a, b, c, d] = R^a_bcd,   R(d_c, d_d) d_b = R^a_bcd d_a

with ``R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``.
On a space of constant curvature ``c`` this gives
``R(X, Y)Z = c (g(Y, Z) X - g(X, Z) Y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import dual
from .dual import Dual

__all__ = [
    "DomainError",
    "Box",
    "ChartedManifold",
    "LocalGeometry",
    "local_geometry",
    "metric",
    "christoffel",
    "christoffel_derivative",
    "riemann_tensor",
    "riemann_op",
    "apply_riemann",
    "covariant_derivative_along",
    "euclidean",
    "conformal",
    "sphere_band",
    "flat_torus",
    "BUILTIN_MANIFOLDS",
]

DIFFERENTIATION_MODES = ("dual", "hybrid", "fd")


class DomainError(ValueError):
    """A point lies outside the chart (or patch) domain."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``lo <= x <= hi``; infinite bounds are allowed."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("box bounds have different lengths")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box lower bound exceeds upper bound")

    def __contains__(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    @property
    def dim(self) -> int:
        return len(self.lo)


@dataclass(frozen=True)
class ChartedManifold:
    """Riemannian manifold covered by a single coordinate chart.

    ``mode`` selects how metric derivatives are obtained:

    * ``"dual"``: first and second derivatives by forward-mode duals;
    * ``"hybrid"``: first derivatives by duals, second derivatives by
      central differences of the dual first derivatives (step ``fd_step``);
    * ``"fd"``: central finite differences only, for evaluators that cannot
      take dual arguments.
    """

    dim: int
    metric_eval: Callable[[Sequence], Sequence[Sequence]]
    domain: Box | Callable[[np.ndarray], bool] | None = None
    mode: str = "dual"
    fd_step: float = 1e-4
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be a positive integer")
        if self.mode not in DIFFERENTIATION_MODES:
            raise ValueError(f"unknown differentiation mode {self.mode!r}")
        if self.fd_step <= 0:
            raise ValueError("fd_step must be positive")

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,) or not np.all(np.isfinite(x)):
            return False
        if self.domain is None:
            return True
        if isinstance(self.domain, Box):
            return x in self.domain
        return bool(self.domain(x))

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point with {self.dim} coordinates, got shape {x.shape}")
        if not self.contains(x):
            raise DomainError(f"point {x.tolist()} is outside the domain of chart {self.name!r}")
        return x


# -- derivative assembly ------------------------------------------------------

def _component_arrays(entry, batch, n, order):
    if isinstance(entry, Dual):
        val = np.broadcast_to(entry.val, batch)
        grad = np.broadcast_to(entry.grad, (n,) + batch)
        hess = None
        if order >= 2:
            hess = np.broadcast_to(entry.hess, (n, n) + batch)
        return val, grad, hess
    val = np.broadcast_to(np.asarray(entry, dtype=float), batch)
    return val, np.zeros((n,) + batch), (np.zeros((n, n) + batch) if order >= 2 else None)


def _eval_metric_plain(m: ChartedManifold, x: np.ndarray) -> np.ndarray:
    """Metric at a batch of points, shape (..., n, n)."""
    n = m.dim
    batch = x.shape[:-1]
    rows = m.metric_eval([x[..., a] for a in range(n)])
    g = np.empty(batch + (n, n))
    for a in range(n):
        for b in range(n):
            g[..., a, b] = np.broadcast_to(np.asarray(rows[a][b], dtype=float), batch)
    return g


def _metric_jets(m: ChartedManifold, x: np.ndarray, order: int):
    n = m.dim
    batch = x.shape[:-1]
    rows = m.metric_eval(dual.variables(x, order))
    parts = [_component_arrays(rows[a][b], batch, n, order) for a in range(n) for b in range(n)]
    k = len(batch)
    # stacked entry axis goes first, then moves next to the derivative axes
    g = np.stack([p[0] for p in parts]).reshape((n, n) + batch)
    g = np.moveaxis(g, (0, 1), (k, k + 1))
    dg = np.stack([p[1] for p in parts]).reshape((n, n, n) + batch)
    dg = np.moveaxis(dg, (0, 1, 2), (k, k + 1, k + 2))
    ddg = None
    if order >= 2:
        ddg = np.stack([p[2] for p in parts]).reshape((n, n, n, n) + batch)
        ddg = np.moveaxis(ddg, (0, 1, 2, 3), (k, k + 1, k + 2, k + 3))
    return g, dg, ddg


def _stencil(x: np.ndarray, h: float):
    """Points x +/- h e_d stacked on a new axis 0 as (plus_0..plus_{n-1}, minus_0..)."""
    n = x.shape[-1]
    eye = np.eye(n) * h
    plus = x[None, ...] + eye.reshape((n,) + (1,) * (x.ndim - 1) + (n,))
    minus = x[None, ...] - eye.reshape((n,) + (1,) * (x.ndim - 1) + (n,))
    return np.concatenate([plus, minus], axis=0)


def _fd_first(m: ChartedManifold, x: np.ndarray, h: float):
    n = m.dim
    pts = _stencil(x, h)
    gs = _eval_metric_plain(m, pts)
    diff = (gs[:n] - gs[n:]) / (2.0 * h)  # (n_dir, ..., n, n)
    return np.moveaxis(diff, 0, -1)


def metric_derivatives(m: ChartedManifold, x, order: int = 1):
    """Return ``(g, dg, ddg)`` at a point or a batch of points ``(..., n)``.

    ``ddg`` is ``None`` when ``order < 2``.
    """
    x = np.asarray(x, dtype=float)
    h = m.fd_step
    n = m.dim
    if m.mode == "dual":
        return _metric_jets(m, x, order)
    if m.mode == "hybrid":
        g, dg, _ = _metric_jets(m, x, 1)
        if order < 2:
            return g, dg, None
        _, dgs, _ = _metric_jets(m, _stencil(x, h), 1)
    else:
        g = _eval_metric_plain(m, x)
        dg = _fd_first(m, x, h)
        if order < 2:
            return g, dg, None
        dgs = _fd_first(m, _stencil(x, h), h)
    ddg = np.moveaxis((dgs[:n] - dgs[n:]) / (2.0 * h), 0, -1)
    ddg = 0.5 * (ddg + np.swapaxes(ddg, -1, -2))
    return g, dg, ddg


# -- connection and curvature ---------------------------------------------------

@dataclass(frozen=True)
class LocalGeometry:
    """Metric, connection and (optionally) curvature at a point or batch."""

    g: np.ndarray
    ginv: np.ndarray
    dg: np.ndarray
    gamma: np.ndarray
    dgamma: np.ndarray | None = None
    riemann: np.ndarray | None = None


def _christoffel_from(ginv, dg):
    # first kind: Gamma_dbc = 1/2 (d_b g_dc + d_c g_db - d_d g_bc)
    first = 0.5 * (
        np.swapaxes(dg, -1, -2)
        + dg
        - np.moveaxis(dg, -1, -3)
    )
    gamma = np.einsum("...ad,...dbc->...abc", ginv, first)
    return 0.5 * (gamma + np.swapaxes(gamma, -1, -2))


def _christoffel_derivative_from(ginv, dg, ddg, gamma):
    # d_e Gamma_dbc with ddg[d, c, b, e] = d_b d_e g_dc
    dfirst = 0.5 * (
        np.swapaxes(ddg, -2, -3)
        + ddg
        - np.moveaxis(ddg, -2, -4)
    )
    # d_e g^{ad} = -g^{af} d_e g_fh g^{hd}
    term1 = -np.einsum("...af,...fhe,...hbc->...abce", ginv, dg, gamma)
    term2 = np.einsum("...ad,...dbce->...abce", ginv, dfirst)
    dgamma = term1 + term2
    return 0.5 * (dgamma + np.swapaxes(dgamma, -2, -3))


def _riemann_from(gamma, dgamma):
    # R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb
    d_c = np.einsum("...adbc->...abcd", dgamma)
    d_d = np.einsum("...acbd->...abcd", dgamma)
    quad = np.einsum("...ace,...edb->...abcd", gamma, gamma)
    return d_c - d_d + quad - np.swapaxes(quad, -1, -2)


def local_geometry(m: ChartedManifold, x, order: int = 1) -> LocalGeometry:
    """Metric data at ``x`` (shape ``(n,)`` or ``(..., n)``); no domain check.

    ``order=2`` additionally provides ``dgamma`` and ``riemann``.
    """
    g, dg, ddg = metric_derivatives(m, x, order)
    ginv = np.linalg.inv(g)
    gamma = _christoffel_from(ginv, dg)
    if order < 2:
        return LocalGeometry(g, ginv, dg, gamma)
    dgamma = _christoffel_derivative_from(ginv, dg, ddg, gamma)
    return LocalGeometry(g, ginv, dg, gamma, dgamma, _riemann_from(gamma, dgamma))


def apply_riemann(riemann, X, Y, Z):
    """``R(X, Y)Z`` from components ``R^a_bcd``, broadcasting over batches."""
    return np.einsum("...abcd,...b,...c,...d->...a", riemann, Z, X, Y)


def metric(m: ChartedManifold, x) -> np.ndarray:
    x = m.check(x)
    g = _eval_metric_plain(m, x)
    if not np.allclose(g, g.T, rtol=0.0, atol=1e-12):
        raise np.linalg.LinAlgError(f"metric is not symmetric at {x.tolist()}")
    np.linalg.cholesky(g)  # raises LinAlgError unless positive definite
    return g


def christoffel(m: ChartedManifold, x) -> np.ndarray:
    return local_geometry(m, m.check(x)).gamma


def christoffel_derivative(m: ChartedManifold, x) -> np.ndarray:
    return local_geometry(m, m.check(x), order=2).dgamma


def riemann_tensor(m: ChartedManifold, x) -> np.ndarray:
    return local_geometry(m, m.check(x), order=2).riemann


def riemann_op(m: ChartedManifold, x, X, Y, Z) -> np.ndarray:
    """``R(X, Y)Z`` for tangent vectors given by components at ``x``."""
    x = m.check(x)
    vecs = [np.asarray(v, dtype=float) for v in (X, Y, Z)]
    if any(v.shape != (m.dim,) for v in vecs):
        raise ValueError("tangent vectors must have one component per chart coordinate")
    return apply_riemann(riemann_tensor(m, x), *vecs)


def covariant_derivative_along(m: ChartedManifold, patch_map, field_fn, u, direction: int,
                               domain: Box | None = None) -> np.ndarray:
    """Ambient covariant derivative of a field along the ``direction``-th
    parameter curve of ``patch_map``.

    ``patch_map`` and ``field_fn`` map a sequence of ``k`` parameters to ``n``
    components; both must accept dual numbers.
    """
    u = np.asarray(u, dtype=float)
    if domain is not None and u not in domain:
        raise DomainError(f"parameter {u.tolist()} is outside the patch domain")
    if not 0 <= direction < u.shape[0]:
        raise IndexError(f"direction {direction} out of range for {u.shape[0]} parameters")
    us = dual.variables(u, 1)
    xs = patch_map(us)
    ws = field_fn(us)
    x = np.array([float(dual.value_of(c)) for c in xs])
    dx = np.array([_grad(c, direction) for c in xs])
    w = np.array([float(dual.value_of(c)) for c in ws])
    dw = np.array([_grad(c, direction) for c in ws])
    gamma = christoffel(m, x)
    return dw + np.einsum("abc,b,c->a", gamma, w, dx)


def _grad(c, i):
    return float(c.grad[i]) if isinstance(c, Dual) else 0.0


# -- built-in charts -----------------------------------------------------------

def euclidean(n: int = 2, domain: Box | None = None) -> ChartedManifold:
    def metric_eval(x):
        return [[1.0 if a == b else 0.0 for b in range(n)] for a in range(n)]

    return ChartedManifold(n, metric_eval, domain, name="euclidean", params={"n": n})


def conformal(n: int = 2, c: float = 1.0) -> ChartedManifold:
    """Constant curvature ``c`` in conformal coordinates,
    ``g_ab = delta_ab / (1 + c/4 |x|^2)^2``.

    For ``c < 0`` the chart is the ball ``|x|^2 < 4/|c|``.
    """

    def metric_eval(x):
        r2 = x[0] * x[0]
        for xa in x[1:]:
            r2 = r2 + xa * xa
        lam = 1.0 / (1.0 + (c / 4.0) * r2) ** 2
        return [[lam if a == b else 0.0 for b in range(n)] for a in range(n)]

    if c < 0:
        radius2 = 4.0 / abs(c)

        def domain(x):
            return float(np.dot(x, x)) < radius2
    else:
        domain = None
    return ChartedManifold(n, metric_eval, domain, name="conformal", params={"n": n, "c": c})


def sphere_band() -> ChartedManifold:
    """Unit 2-sphere in latitude/longitude ``(theta, phi)``,
    ``g = diag(1, cos^2 theta)``, valid for ``|theta| < pi/2``."""

    def metric_eval(x):
        ct = dual.cos(x[0])
        return [[1.0, 0.0], [0.0, ct * ct]]

    half = np.pi / 2
    domain = Box((-half + 1e-9, -np.inf), (half - 1e-9, np.inf))
    return ChartedManifold(2, metric_eval, domain, name="sphere-band", params={"c": 1.0})


def flat_torus(n: int = 2) -> ChartedManifold:
    """Flat torus ``R^n / (2 pi Z)^n`` on its fundamental box."""
    m = euclidean(n, Box((0.0,) * n, (2 * np.pi,) * n))
    return ChartedManifold(m.dim, m.metric_eval, m.domain, name="flat-torus", params={"n": n})


BUILTIN_MANIFOLDS: dict[str, Callable[..., ChartedManifold]] = {
    "euclidean": euclidean,
    "conformal": conformal,
    "sphere-band": sphere_band,
    "flat-torus": flat_torus,
}
