"""Vector fields along submanifold patches and the geometry of their graphs.

A :class:`FieldAlongPatch` ``xi`` over an immersed patch ``F`` defines the
submanifold ``xi(F)`` of ``TM``.  Its tangent frame is
``e~_i = (d_i)^h + (nabla_i xi)^v`` and it is totally geodesic exactly when

(a) the normal part of ``*nabla_i d_j`` vanishes, where ``*nabla`` is the
    xi-connection ``nabla_X Y + 1/2 [R(xi, nabla_X xi)Y + R(xi, nabla_Y xi)X]``;
(b) ``nabla_i nabla_j xi = nabla_{*nabla_i d_j} xi + 1/2 R(d_i, d_j) xi``.

Everything is evaluated on coordinate fields of the patch.  ``xi`` is only
needed along the patch: second derivatives are taken along parameter
curves, and only the tangential part of ``*nabla_i d_j`` is fed into
``nabla xi`` (the normal part is residual (a)).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from . import dual
from .dual import Dual
from .manifold import Box, ChartedManifold, DomainError, LocalGeometry, local_geometry
from .sasaki import BundlePoint, BundleTangent, field_jacobian

__all__ = [
    "DegenerateImmersionError",
    "PreconditionError",
    "ExtensionRequiredError",
    "SubmanifoldPatch",
    "FieldAlongPatch",
    "TGReport",
    "FieldJet",
    "field_jet",
    "tangent_frame",
    "induced_metric",
    "conjugate_derivative",
    "normal_frame",
    "xi_connection",
    "omega_xi",
    "tg_residuals",
    "normal_covariant_derivative",
    "grid_points",
    "identity_patch",
    "hyperplane_patch",
    "equator_patch",
]


class DegenerateImmersionError(ValueError):
    """The patch Jacobian does not have full rank."""


class PreconditionError(ValueError):
    pass


class ExtensionRequiredError(ValueError):
    """An ambient extension of the field is needed for this evaluation."""


@dataclass(frozen=True)
class SubmanifoldPatch:
    """Immersion ``u -> x(u)`` of a box ``domain`` in ``R^l`` into a chart.

    ``immersion`` receives a list of ``l`` parameters (floats or duals) and
    returns ``n`` chart coordinates.
    """

    ambient: ChartedManifold
    immersion: Callable
    domain: Box
    name: str = "patch"

    @property
    def l(self) -> int:
        return self.domain.dim

    def __post_init__(self):
        if not 1 <= self.l <= self.ambient.dim:
            raise ValueError(f"patch dimension {self.l} must lie in [1, {self.ambient.dim}]")


@dataclass(frozen=True)
class FieldAlongPatch:
    """Ambient components ``xi^a(u)`` of a vector field along a patch.

    ``extension``, when given, is the field on an ambient neighbourhood as a
    function of chart coordinates; it is only used by :func:`omega_xi`.
    """

    patch: SubmanifoldPatch
    value: Callable
    extension: Callable | None = None
    name: str = "field"

    @classmethod
    def from_ambient(cls, patch: SubmanifoldPatch, fn: Callable, name: str = "field"):
        """Restrict an ambient field ``x -> xi(x)`` to the patch."""
        return cls(patch, lambda u: fn(patch.immersion(u)), fn, name)


@dataclass(frozen=True)
class TGReport:
    u: tuple[float, ...]
    res_a: float
    res_b: float
    frame_cond: float

    @property
    def residual(self) -> float:
        return max(self.res_a, self.res_b)


def _jet_arrays(comps, k, order=2):
    count = len(comps)
    val = np.zeros(count)
    grad = np.zeros((count, k))
    hess = np.zeros((count, k, k))
    for a, c in enumerate(comps):
        if isinstance(c, Dual):
            val[a] = c.val
            grad[a] = c.grad
            if order >= 2:
                hess[a] = c.hess
        else:
            val[a] = float(c)
    return val, grad, hess


def _gram_schmidt(vectors, g, existing=None):
    """Orthonormalise the columns of ``vectors`` under ``g`` (two passes)."""
    basis = [] if existing is None else list(existing.T)
    out = []
    for v in vectors.T:
        w = v.astype(float)
        for _ in range(2):
            for b in basis:
                w = w - (b @ g @ w) * b
        norm = np.sqrt(w @ g @ w)
        w = w / norm
        basis.append(w)
        out.append(w)
    return np.array(out).T if out else np.zeros((vectors.shape[0], 0))


def _normal_basis(tangent_on, g):
    """Orthonormal normal basis by greedy pivoted Gram-Schmidt of the chart
    basis against an orthonormal tangent basis; ties go to the lower index."""
    n = g.shape[0]
    basis = list(tangent_on.T)
    remaining = list(range(n))
    normals = []
    for _ in range(n - tangent_on.shape[1]):
        best, best_norm, best_vec = None, -1.0, None
        for a in remaining:
            w = np.eye(n)[a]
            for _ in range(2):
                for b in basis:
                    w = w - (b @ g @ w) * b
            norm = np.sqrt(max(w @ g @ w, 0.0))
            if norm > best_norm + 1e-14:
                best, best_norm, best_vec = a, norm, w
        remaining.remove(best)
        v = best_vec / best_norm
        basis.append(v)
        normals.append(v)
    return np.array(normals).T if normals else np.zeros((n, 0))


@dataclass(frozen=True, eq=False)
class FieldJet:
    """Second-order data of a field along a patch at one parameter value.

    Arrays are indexed ``[a, i, j]`` with ``a`` ambient and ``i, j`` patch
    directions; ``D2[:, i, j]`` is ``nabla_i nabla_j xi``.
    """

    u: np.ndarray
    x: np.ndarray
    J: np.ndarray
    Hx: np.ndarray
    xi: np.ndarray
    dxi: np.ndarray
    ddxi: np.ndarray
    geo: LocalGeometry

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def l(self) -> int:
        return self.J.shape[1]

    @cached_property
    def g(self) -> np.ndarray:
        return self.geo.g

    @cached_property
    def first_form(self) -> np.ndarray:
        return self.J.T @ self.g @ self.J

    @cached_property
    def first_form_inv(self) -> np.ndarray:
        return np.linalg.inv(self.first_form)

    @cached_property
    def nabla_xi(self) -> np.ndarray:
        """``nabla_i xi`` as columns, shape (n, l)."""
        return self.dxi + np.einsum("abc,b,ci->ai", self.geo.gamma, self.xi, self.J)

    @cached_property
    def D2(self) -> np.ndarray:
        gamma, dgamma, J = self.geo.gamma, self.geo.dgamma, self.J
        # dnab[a, i, j] = d_j (nabla_i xi)^a
        dnab = (
            self.ddxi
            + np.einsum("abce,ej,b,ci->aij", dgamma, J, self.xi, J)
            + np.einsum("abc,bj,ci->aij", gamma, self.dxi, J)
            + np.einsum("abc,b,cij->aij", gamma, self.xi, self.Hx)
        )
        return np.swapaxes(dnab, 1, 2) + np.einsum("abc,bj,ci->aij", gamma, self.nabla_xi, J)

    @cached_property
    def cov_dd(self) -> np.ndarray:
        """``nabla_i d_j`` in the ambient space, shape (n, l, l)."""
        return self.Hx + np.einsum("abc,bi,cj->aij", self.geo.gamma, self.J, self.J)

    @cached_property
    def h_xi(self) -> np.ndarray:
        """``1/2 [R(xi, nabla_i xi) d_j + R(xi, nabla_j xi) d_i]``."""
        R = self.geo.riemann
        t = np.einsum("abcd,bj,c,di->aij", R, self.J, self.xi, self.nabla_xi)
        return 0.5 * (t + np.swapaxes(t, 1, 2))

    @cached_property
    def xi_conn(self) -> np.ndarray:
        return self.cov_dd + self.h_xi

    @cached_property
    def curvature_xi(self) -> np.ndarray:
        """``R(d_i, d_j) xi``, shape (n, l, l)."""
        return np.einsum("abcd,b,ci,dj->aij", self.geo.riemann, self.xi, self.J, self.J)

    def tangent_coords(self, W) -> np.ndarray:
        """Patch coordinates of the tangential projection of ambient ``W``
        (``W`` may carry extra trailing axes)."""
        return np.einsum("ik,ka,ab,b...->i...", self.first_form_inv, self.J.T, self.g, W)

    def normal_part(self, W) -> np.ndarray:
        return W - np.einsum("ai,i...->a...", self.J, self.tangent_coords(W))

    def norm(self, W) -> np.ndarray:
        """Ambient norm over the first axis of ``W``."""
        return np.sqrt(np.maximum(np.einsum("a...,ab,b...->...", W, self.g, W), 0.0))

    @cached_property
    def frames(self) -> tuple[np.ndarray, np.ndarray]:
        """Orthonormal tangent and normal bases of the patch at ``x``."""
        tangent = _gram_schmidt(self.J, self.g)
        return tangent, _normal_basis(tangent, self.g)

    @property
    def point(self) -> BundlePoint:
        return BundlePoint(self.x, self.xi)


def field_jet(f: FieldAlongPatch, u) -> FieldJet:
    patch = f.patch
    m = patch.ambient
    u = np.asarray(u, dtype=float)
    if u.shape != (patch.l,):
        raise ValueError(f"expected {patch.l} patch parameters, got shape {u.shape}")
    if u not in patch.domain:
        raise DomainError(f"parameter {u.tolist()} is outside the domain of patch {patch.name!r}")
    us = dual.variables(u, 2)
    xs = patch.immersion(us)
    if len(xs) != m.dim:
        raise ValueError(f"immersion returned {len(xs)} components, expected {m.dim}")
    x, J, Hx = _jet_arrays(xs, patch.l)
    m.check(x)
    comps = f.value(us)
    if len(comps) != m.dim:
        raise ValueError(f"field returned {len(comps)} components, expected {m.dim}")
    xi, dxi, ddxi = _jet_arrays(comps, patch.l)
    geo = local_geometry(m, x, order=2)
    jet = FieldJet(u, x, J, Hx, xi, dxi, ddxi, geo)
    eig = np.linalg.eigvalsh(jet.first_form)
    if eig[0] <= 1e-12 * max(eig[-1], 1e-300):
        raise DegenerateImmersionError(f"patch {patch.name!r} is not immersive at u={u.tolist()}")
    return jet


def tangent_frame(f: FieldAlongPatch, u) -> list[BundleTangent]:
    jet = field_jet(f, u)
    z = jet.point
    return [BundleTangent(z, jet.J[:, i], jet.nabla_xi[:, i]) for i in range(jet.l)]


def induced_metric(f: FieldAlongPatch, u) -> np.ndarray:
    jet = field_jet(f, u)
    nab = jet.nabla_xi
    return jet.first_form + nab.T @ jet.g @ nab


def _conjugate(jet: FieldJet, W) -> np.ndarray:
    return jet.first_form_inv @ (jet.nabla_xi.T @ jet.g @ W)


def conjugate_derivative(f: FieldAlongPatch, u, W) -> np.ndarray:
    """Patch coordinates of the tangent vector ``c`` with
    ``g(c, X) = g(nabla_X xi, W)`` for all tangent ``X``."""
    jet = field_jet(f, u)
    W = np.asarray(W, dtype=float)
    if W.shape != (jet.n,):
        raise ValueError(f"W must have {jet.n} components")
    return _conjugate(jet, W)


def normal_frame(f: FieldAlongPatch, u) -> list[BundleTangent]:
    """Spanning set of the normal space of ``xi(F)`` in ``TM``:
    ``eta^h``, ``eta^v - (c eta)^h`` and ``Z^v - (c Z)^h`` with ``c`` the
    conjugate derivative, for orthonormal normal ``eta`` and tangent ``Z``."""
    jet = field_jet(f, u)
    z = jet.point
    tangent, normal = jet.frames
    zero = np.zeros(jet.n)
    out = [BundleTangent(z, eta, zero) for eta in normal.T]
    for vec in list(normal.T) + list(tangent.T):
        out.append(BundleTangent(z, -jet.J @ _conjugate(jet, vec), vec))
    return out


def xi_connection(f: FieldAlongPatch, u, i: int, j: int) -> np.ndarray:
    return field_jet(f, u).xi_conn[:, i, j].copy()


def omega_xi(f: FieldAlongPatch, u, i: int, j: int, tol: float = 1e-9) -> np.ndarray:
    """Symmetric obstruction ``nabla_{h(X,Y)} xi + 1/2[(nabla_X A)Y + (nabla_Y A)X]``
    on patch coordinate fields, with ``A Y = -nabla_Y xi``.

    Reduces to ``nabla_{*nabla_i d_j} xi - 1/2 (nabla_i nabla_j xi + nabla_j nabla_i xi)``.
    Without an ambient extension the field can only be differentiated in
    tangent directions, so the xi-connection must be tangent to the patch.
    """
    jet = field_jet(f, u)
    V = jet.xi_conn[:, i, j]
    if f.extension is not None:
        val, jac = field_jacobian(f.extension, jet.x)
        nabla_V = jac @ V + np.einsum("abc,b,c->a", jet.geo.gamma, val, V)
    else:
        normal = jet.normal_part(V)
        if jet.norm(normal) > tol * (1.0 + jet.norm(V)):
            raise ExtensionRequiredError(
                "xi-connection has a normal component; supply an ambient extension of the field"
            )
        nabla_V = jet.nabla_xi @ jet.tangent_coords(V)
    return nabla_V - 0.5 * (jet.D2[:, i, j] + jet.D2[:, j, i])


def _residuals(jet: FieldJet) -> tuple[float, float]:
    S = jet.xi_conn
    res_a = float(np.max(jet.norm(jet.normal_part(S)))) if jet.l < jet.n else 0.0
    t = jet.tangent_coords(S)  # (l, l, l): t[k, i, j]
    along = np.einsum("ak,kij->aij", jet.nabla_xi, t)
    res_b_vec = jet.D2 - along - 0.5 * jet.curvature_xi
    return res_a, float(np.max(jet.norm(res_b_vec)))


def tg_residuals(f: FieldAlongPatch, u) -> TGReport:
    jet = field_jet(f, u)
    res_a, res_b = _residuals(jet)
    nab = jet.nabla_xi
    frame_cond = float(np.linalg.cond(jet.first_form + nab.T @ jet.g @ nab))
    return TGReport(tuple(float(v) for v in jet.u), res_a, res_b, frame_cond)


def normal_covariant_derivative(f: FieldAlongPatch, u, i: int, tol: float = 1e-9) -> np.ndarray:
    """Normal-bundle derivative of a normal field along the ``i``-th
    coordinate curve."""
    jet = field_jet(f, u)
    pairing = jet.J.T @ jet.g @ jet.xi
    scale = 1.0 + jet.norm(jet.xi) * np.sqrt(np.diag(jet.first_form))
    if np.any(np.abs(pairing) > tol * scale):
        raise PreconditionError("field is not normal to the patch")
    return jet.normal_part(jet.nabla_xi[:, i])


def second_fundamental_residual(jet: FieldJet) -> float:
    """Largest normal component of ``nabla_i d_j``; zero on totally geodesic patches."""
    if jet.l == jet.n:
        return 0.0
    return float(np.max(jet.norm(jet.normal_part(jet.cov_dd))))


def grid_points(domain: Box, points: int, margin: float = 0.1) -> list[np.ndarray]:
    """Uniform tensor grid over ``domain`` shrunk by ``margin`` on each side.

    Unbounded directions are not allowed here.
    """
    lo = np.asarray(domain.lo, dtype=float)
    hi = np.asarray(domain.hi, dtype=float)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("grid needs a bounded domain")
    if points < 1:
        raise ValueError("grid needs at least one point per direction")
    width = hi - lo
    a, b = lo + margin * width, hi - margin * width
    axes = [np.linspace(a[k], b[k], points) if points > 1 else np.array([(a[k] + b[k]) / 2])
            for k in range(domain.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return [np.array(p) for p in np.stack([m.ravel() for m in mesh], axis=-1)]


# -- standard patches -------------------------------------------------------------

def identity_patch(m: ChartedManifold, domain: Box, name: str = "identity") -> SubmanifoldPatch:
    return SubmanifoldPatch(m, lambda u: list(u), domain, name)


def hyperplane_patch(m: ChartedManifold, domain: Box, name: str = "hyperplane") -> SubmanifoldPatch:
    """The slice ``x_n = 0`` parametrised by the first ``n-1`` coordinates."""
    return SubmanifoldPatch(m, lambda u: list(u) + [0.0], domain, name)


def equator_patch(m: ChartedManifold, domain: Box, name: str = "equator") -> SubmanifoldPatch:
    """``theta = 0`` on the sphere-band chart, parametrised by ``phi``."""
    return SubmanifoldPatch(m, lambda u: [0.0, u[0]], domain, name)
